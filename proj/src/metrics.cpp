#include "dice/metrics.hpp"

#include <array>
#include <cmath>
#include <ostream>

#include "dice/errors.hpp"

namespace dice {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_pair(const Image& ref, const Image& test, double data_range) {
  if (ref.side() != test.side()) throw DimensionError("metrics: images differ in size");
  if (!(data_range > 0.0)) throw ContractError("metrics: data_range must be > 0");
}

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  double sum = 0.0;
  const int h = kWindow / 2;
  for (int r = 0; r < kWindow; ++r)
    for (int c = 0; c < kWindow; ++c) {
      const double d2 = static_cast<double>((r - h) * (r - h) + (c - h) * (c - h));
      w[r * kWindow + c] = std::exp(-d2 / (2.0 * kSigma * kSigma));
      sum += w[r * kWindow + c];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Image& ref, const Image& test, double data_range) {
  check_pair(ref, test, data_range);
  double sse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.pixels()[i] - test.pixels()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(ref.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

Vec ssim_map(const Image& ref, const Image& test, double data_range) {
  check_pair(ref, test, data_range);
  const int side = ref.side();
  if (side < kWindow) throw ContractError("ssim: image is smaller than the 11x11 window");
  static const auto window = gaussian_window();
  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);
  const int positions = side - kWindow + 1;

  Vec out(static_cast<std::size_t>(positions) * positions);
  for (int r0 = 0; r0 < positions; ++r0) {
    for (int c0 = 0; c0 < positions; ++c0) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int r = 0; r < kWindow; ++r)
        for (int c = 0; c < kWindow; ++c) {
          const double w = window[r * kWindow + c];
          const double x = ref(r0 + r, c0 + c);
          const double y = test(r0 + r, c0 + c);
          mx += w * x;
          my += w * y;
          sxx += w * x * x;
          syy += w * y * y;
          sxy += w * x * y;
        }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      out[static_cast<std::size_t>(r0) * positions + c0] = num / den;
    }
  }
  return out;
}

double ssim(const Image& ref, const Image& test, double data_range) {
  const Vec map = ssim_map(ref, test, data_range);
  double s = 0.0;
  for (double v : map) s += v;
  return s / static_cast<double>(map.size());
}

MetricReport evaluate(const Image& ref, const Image& test, double data_range) {
  return {psnr(ref, test, data_range), ssim(ref, test, data_range), data_range};
}

void write_metrics_header(std::ostream& out) { out << "image_id,method,views,pattern,psnr,ssim,seconds\n"; }

void write_metrics_row(std::ostream& out, const MetricRow& row) {
  const auto old = out.precision(10);
  out << row.image_id << ',' << row.method << ',' << row.views << ',' << row.pattern << ',' << row.psnr << ','
      << row.ssim << ',' << row.seconds << '\n';
  out.precision(old);
}

}  // namespace dice
