#include "dice/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dice/errors.hpp"
#include "dice/rng.hpp"
#include "parallel.hpp"

namespace dice {

std::string to_string(PatternKind kind) { return kind == PatternKind::uniform ? "uniform" : "nonuniform"; }

PatternKind parse_pattern_kind(const std::string& text) {
  if (text == "uniform") return PatternKind::uniform;
  if (text == "nonuniform" || text == "non-uniform") return PatternKind::nonuniform;
  throw ContractError("unknown sampling pattern '" + text + "' (expected uniform or nonuniform)");
}

void ScanGeometry::validate() const {
  if (image_side < 8) throw ContractError("geometry: image_side must be >= 8");
  if (n_detectors < image_side) throw ContractError("geometry: n_detectors must be >= image_side");
  if (!(detector_spacing > 0.0)) throw ContractError("geometry: detector_spacing must be positive");
  if (angles_deg.empty()) throw ContractError("geometry: no view angles");
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double a = angles_deg[i];
    if (!(a >= 0.0 && a < 180.0)) throw ContractError("geometry: angles must lie in [0, 180)");
    if (i > 0 && !(a > angles_deg[i - 1])) throw ContractError("geometry: angles must be strictly increasing");
  }
}

ScanGeometry build_geometry(int image_side, const SamplingPattern& pattern) {
  if (image_side < 8) throw ContractError("build_geometry: image_side must be >= 8");
  if (pattern.n_views < 1 || pattern.n_views > kFullViewCount)
    throw ContractError("build_geometry: n_views must be in [1, 180]");

  ScanGeometry g;
  g.image_side = image_side;
  g.n_detectors = image_side;
  g.detector_spacing = 1.0;

  if (pattern.kind == PatternKind::uniform) {
    if (kFullViewCount % pattern.n_views != 0)
      throw ContractError("build_geometry: uniform pattern needs n_views dividing 180");
    const int stride = kFullViewCount / pattern.n_views;
    for (int a = 0; a < kFullViewCount; a += stride) g.angles_deg.push_back(static_cast<double>(a));
  } else {
    std::vector<int> grid(kFullViewCount);
    std::iota(grid.begin(), grid.end(), 0);
    Rng rng(pattern.seed);
    // partial Fisher-Yates: the first n_views slots become the sample
    for (int i = 0; i < pattern.n_views; ++i) {
      std::uniform_int_distribution<int> pick(i, kFullViewCount - 1);
      std::swap(grid[i], grid[pick(rng)]);
    }
    grid.resize(pattern.n_views);
    std::sort(grid.begin(), grid.end());
    for (int a : grid) g.angles_deg.push_back(static_cast<double>(a));
  }
  g.validate();
  return g;
}

ParallelBeamProjector::ParallelBeamProjector(ScanGeometry geometry, int threads)
    : geometry_(std::move(geometry)), threads_(std::max(threads, 1)) {
  geometry_.validate();
  const int side = geometry_.image_side;
  const int n_det = geometry_.n_detectors;
  const std::size_t n_pix = geometry_.cols();
  const std::size_t n_rays = geometry_.rows();
  const double half = 0.5 * (side - 1);
  const double reach = 0.5 * side * std::numbers::sqrt2 + std::hypot(geometry_.center_x, geometry_.center_y) + 2.0;

  // Per-ray rows are built independently, then concatenated in ray order.
  std::vector<std::vector<std::int32_t>> ray_pixels(n_rays);
  std::vector<std::vector<double>> ray_weights(n_rays);

  detail::parallel_for(geometry_.n_views(), threads_, [&](std::size_t v_begin, std::size_t v_end) {
    Vec accum(n_pix, 0.0);
    std::vector<std::int32_t> touched;
    std::vector<double> knots;
    auto deposit = [&](double col, double row, double w_point) {
      const double c0 = std::floor(col);
      const double r0 = std::floor(row);
      const double fc = col - c0;
      const double fr = row - r0;
      const int ic = static_cast<int>(c0);
      const int ir = static_cast<int>(r0);
      const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
      const int rr[4] = {ir, ir, ir + 1, ir + 1};
      const int cc[4] = {ic, ic + 1, ic, ic + 1};
      for (int q = 0; q < 4; ++q) {
        if (rr[q] < 0 || rr[q] >= side || cc[q] < 0 || cc[q] >= side || w[q] == 0.0) continue;
        const auto p = static_cast<std::int32_t>(rr[q] * side + cc[q]);
        if (accum[p] == 0.0) touched.push_back(p);
        accum[p] += w[q] * w_point;
      }
    };
    for (std::size_t v = v_begin; v < v_end; ++v) {
      const double theta = geometry_.angles_deg[v] * std::numbers::pi / 180.0;
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      for (int d = 0; d < n_det; ++d) {
        touched.clear();
        for (int sub = 0; sub < kSubRays; ++sub) {
          const double offset =
              (d - 0.5 * (n_det - 1) + (sub + 0.5) / kSubRays - 0.5) * geometry_.detector_spacing;
          // pixel coords along the ray: col = col0 - l s, row = row0 - l c
          const double col0 = geometry_.center_x + offset * c + half;
          const double row0 = half - (geometry_.center_y + offset * s);
          // clip to the support of the interpolant, [-1, side] in both coords
          double lo = -reach, hi = reach;
          auto clip = [&](double start, double slope) {
            if (std::abs(slope) < 1e-12) {
              if (start <= -1.0 || start >= side) hi = lo - 1.0;
              return;
            }
            double a = (start + 1.0) / slope, b = (start - side) / slope;
            if (a > b) std::swap(a, b);
            lo = std::max(lo, a);
            hi = std::min(hi, b);
          };
          clip(col0, s);
          clip(row0, c);
          if (hi <= lo) continue;
          // the interpolant is quadratic in l between grid-line crossings
          knots.assign({lo, hi});
          auto crossings = [&](double start, double slope) {
            if (std::abs(slope) < 1e-12) return;
            const double ea = start - lo * slope, eb = start - hi * slope;
            for (double k = std::ceil(std::min(ea, eb)); k <= std::max(ea, eb); k += 1.0)
              knots.push_back((start - k) / slope);
          };
          crossings(col0, s);
          crossings(row0, c);
          std::sort(knots.begin(), knots.end());
          for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double a = std::max(knots[k], lo), b = std::min(knots[k + 1], hi);
            if (b - a <= 1e-12) continue;
            // two Simpson panels per piece keeps the sample spacing under half a pixel
            const double h = 0.5 * (b - a);
            for (int panel = 0; panel < 2; ++panel) {
              const double p0 = a + panel * h;
              const double wq = h / (6.0 * kSubRays);
              const double ls[3] = {p0, p0 + 0.5 * h, p0 + h};
              const double ws[3] = {wq, 4.0 * wq, wq};
              for (int q = 0; q < 3; ++q) deposit(col0 - ls[q] * s, row0 - ls[q] * c, ws[q]);
            }
          }
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        const std::size_t ray = v * n_det + d;
        auto& px = ray_pixels[ray];
        auto& wt = ray_weights[ray];
        px.reserve(touched.size());
        wt.reserve(touched.size());
        for (auto p : touched) {
          px.push_back(p);
          wt.push_back(accum[p]);
          accum[p] = 0.0;
        }
      }
    }
  });

  row_start_.assign(n_rays + 1, 0);
  for (std::size_t r = 0; r < n_rays; ++r) row_start_[r + 1] = row_start_[r] + ray_pixels[r].size();
  pixel_.resize(row_start_.back());
  values_.resize(row_start_.back());
  std::vector<std::size_t> per_pixel(n_pix + 1, 0);
  for (std::size_t r = 0; r < n_rays; ++r) {
    std::copy(ray_pixels[r].begin(), ray_pixels[r].end(), pixel_.begin() + row_start_[r]);
    std::copy(ray_weights[r].begin(), ray_weights[r].end(), values_.begin() + row_start_[r]);
    for (auto p : ray_pixels[r]) ++per_pixel[p + 1];
  }

  col_start_.assign(n_pix + 1, 0);
  for (std::size_t p = 0; p < n_pix; ++p) col_start_[p + 1] = col_start_[p] + per_pixel[p + 1];
  ray_.resize(values_.size());
  t_values_.resize(values_.size());
  std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
  for (std::size_t r = 0; r < n_rays; ++r) {
    for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e) {
      const auto p = static_cast<std::size_t>(pixel_[e]);
      ray_[fill[p]] = static_cast<std::int32_t>(r);
      t_values_[fill[p]] = values_[e];
      ++fill[p];
    }
  }
}

void ParallelBeamProjector::apply_to(std::span<const double> x, std::span<double> out) const {
  require_same_size(cols(), x.size(), "radon forward input");
  require_same_size(rows(), out.size(), "radon forward output");
  detail::parallel_for(rows(), threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double acc = 0.0;
      for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e) acc += values_[e] * x[pixel_[e]];
      out[r] = acc;
    }
  });
}

void ParallelBeamProjector::apply_adjoint_to(std::span<const double> y, std::span<double> out) const {
  require_same_size(rows(), y.size(), "radon adjoint input");
  require_same_size(cols(), out.size(), "radon adjoint output");
  detail::parallel_for(cols(), threads_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double acc = 0.0;
      for (std::size_t e = col_start_[p]; e < col_start_[p + 1]; ++e) acc += t_values_[e] * y[ray_[e]];
      out[p] = acc;
    }
  });
}

Sinogram ParallelBeamProjector::forward(const Image& img) const {
  if (img.side() != geometry_.image_side) throw DimensionError("radon_forward: image side does not match geometry");
  Sinogram out(static_cast<int>(geometry_.n_views()), geometry_.n_detectors);
  apply_to(img.pixels(), out.values());
  return out;
}

Image ParallelBeamProjector::adjoint(const Sinogram& sino) const {
  if (sino.n_angles() != static_cast<int>(geometry_.n_views()) || sino.n_detectors() != geometry_.n_detectors)
    throw DimensionError("radon_adjoint: sinogram shape does not match geometry");
  Image out(geometry_.image_side);
  apply_adjoint_to(sino.values(), out.pixels());
  return out;
}

Sinogram radon_forward(const Image& img, const ScanGeometry& geometry) {
  if (img.side() != geometry.image_side) throw DimensionError("radon_forward: image side does not match geometry");
  return ParallelBeamProjector(geometry).forward(img);
}

Image radon_adjoint(const Sinogram& sino, const ScanGeometry& geometry) {
  return ParallelBeamProjector(geometry).adjoint(sino);
}

Sinogram add_noise(const Sinogram& sino, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ContractError("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return sino;
  Sinogram out = sino;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out.values()) v += normal(rng);
  return out;
}

Sinogram select_views(const Sinogram& full, const std::vector<double>& angles_deg) {
  if (full.n_angles() != kFullViewCount) throw DimensionError("select_views: source must cover the 180-angle grid");
  Sinogram out(static_cast<int>(angles_deg.size()), full.n_detectors());
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const int a = static_cast<int>(std::lround(angles_deg[i]));
    if (a < 0 || a >= kFullViewCount || std::abs(angles_deg[i] - a) > 1e-9)
      throw ContractError("select_views: angle is not on the 1-degree grid");
    auto src = full.row(a);
    std::copy(src.begin(), src.end(), out.values().begin() + static_cast<std::ptrdiff_t>(i) * full.n_detectors());
  }
  return out;
}

}  // namespace dice
