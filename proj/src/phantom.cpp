#include "dice/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dice/errors.hpp"

namespace dice {

Image rasterize_ellipses(int side, const std::vector<Ellipse>& ellipses, int supersample) {
  if (side < 8) throw ContractError("phantom: image_side must be >= 8");
  if (supersample < 1) throw ContractError("phantom: supersample must be >= 1");
  Image img(side);
  const double half = 0.5 * (side - 1);
  const double scale = 0.5 * side;
  const int s = supersample;
  auto value_at = [&](double x, double y) {
    double v = 0.0;
    for (const auto& e : ellipses) {
      const double phi = e.angle_deg * std::numbers::pi / 180.0;
      const double cp = std::cos(phi);
      const double sp = std::sin(phi);
      const double dx = x - e.center_x;
      const double dy = y - e.center_y;
      const double u = (dx * cp + dy * sp) / e.semi_x;
      const double w = (-dx * sp + dy * cp) / e.semi_y;
      if (u * u + w * w <= 1.0) v += e.intensity;
    }
    return std::max(v, 0.0);
  };
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      double acc = 0.0;
      for (int i = 0; i < s; ++i) {
        const double y = (half - r - ((i + 0.5) / s - 0.5)) / scale;
        for (int j = 0; j < s; ++j) acc += value_at((c - half + ((j + 0.5) / s - 0.5)) / scale, y);
      }
      img(r, c) = acc / (s * s);
    }
  }
  const double peak = *std::max_element(img.pixels().begin(), img.pixels().end());
  if (peak > 0.0)
    for (auto& v : img.pixels()) v = std::min(v / peak, 1.0);
  return img;
}

std::vector<Ellipse> shepp_logan_ellipses() {
  return {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1100, 0.3100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0460, 0.0230, 0.08, -0.605, 0.0},
  };
}

Image shepp_logan(int image_side) { return rasterize_ellipses(image_side, shepp_logan_ellipses()); }

Image random_ellipse_phantom(int image_side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double outer_x = 0.62 + 0.1 * unit(rng);
  const double outer_y = 0.80 + 0.1 * unit(rng);
  std::vector<Ellipse> ellipses{
      {1.0, outer_x, outer_y, 0.0, 0.0, 0.0},
      {-0.75, outer_x - 0.05, outer_y - 0.05, 0.0, 0.0, 0.0},
  };
  const int count = 5 + static_cast<int>(unit(rng) * 4.0);
  for (int i = 0; i < count; ++i) {
    Ellipse e{};
    e.semi_x = 0.05 + 0.2 * unit(rng);
    e.semi_y = 0.05 + 0.2 * unit(rng);
    const double reach_x = std::max(0.0, outer_x - 0.08 - std::max(e.semi_x, e.semi_y));
    const double reach_y = std::max(0.0, outer_y - 0.08 - std::max(e.semi_x, e.semi_y));
    // keep the centre inside the inner ellipse so features stay inside the skull
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const double rad = std::sqrt(unit(rng));
    e.center_x = reach_x * rad * std::cos(a);
    e.center_y = reach_y * rad * std::sin(a);
    e.angle_deg = 180.0 * unit(rng) - 90.0;
    e.intensity = (unit(rng) < 0.3 ? -0.1 : 0.1) + 0.3 * unit(rng);
    ellipses.push_back(e);
  }
  return rasterize_ellipses(image_side, ellipses);
}

Image disk_phantom(int image_side, double radius) {
  return rasterize_ellipses(image_side, {{1.0, radius, radius, 0.0, 0.0, 0.0}});
}

}  // namespace dice
