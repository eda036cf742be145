#pragma once

#include <iosfwd>
#include <string>

#include "dice/image.hpp"

namespace dice {

/// Reported in place of +inf when the images are identical.
inline constexpr double kPsnrCap = 200.0;

struct MetricReport {
  double psnr = 0.0;  // dB
  double ssim = 0.0;
  double data_range = 1.0;
};

double psnr(const Image& ref, const Image& test, double data_range = 1.0);

/// Mean of the local SSIM map over every fully contained 11x11 Gaussian
/// window (sigma 1.5, K1 = 0.01, K2 = 0.03).
double ssim(const Image& ref, const Image& test, double data_range = 1.0);

/// Local SSIM values; (side - 10)^2 entries, row-major over window positions.
Vec ssim_map(const Image& ref, const Image& test, double data_range = 1.0);

MetricReport evaluate(const Image& ref, const Image& test, double data_range = 1.0);

struct MetricRow {
  std::string image_id;
  std::string method;
  int views = 0;
  std::string pattern;
  double psnr = 0.0;
  double ssim = 0.0;
  double seconds = 0.0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricRow& row);

}  // namespace dice
