#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dice/image.hpp"
#include "dice/linalg.hpp"

namespace dice {

/// Number of views in the full acquisition grid (1 degree resolution over 180 degrees).
inline constexpr int kFullViewCount = 180;

enum class PatternKind { uniform, nonuniform };

std::string to_string(PatternKind kind);
PatternKind parse_pattern_kind(const std::string& text);

struct SamplingPattern {
  PatternKind kind = PatternKind::uniform;
  int n_views = kFullViewCount;
  std::uint64_t seed = 0;  // nonuniform only
};

struct ScanGeometry {
  int image_side = 0;
  int n_detectors = 0;
  double detector_spacing = 1.0;  // pixels
  std::vector<double> angles_deg;
  /// Rotation centre relative to the image centre, in pixels (+x right, +y up).
  double center_x = 0.0;
  double center_y = 0.0;

  std::size_t n_views() const { return angles_deg.size(); }
  std::size_t rows() const { return angles_deg.size() * static_cast<std::size_t>(n_detectors); }
  std::size_t cols() const { return static_cast<std::size_t>(image_side) * image_side; }

  /// Throws ContractError when an invariant does not hold.
  void validate() const;
};

/// Geometry on the 180-angle grid with n_detectors = image_side and unit spacing.
ScanGeometry build_geometry(int image_side, const SamplingPattern& pattern);

/// Parallel-beam Radon transform with an exact transpose.
///
/// One ray through the centre of each detector bin (kSubRays > 1 spreads
/// that many rays across the bin and averages them). Along a ray the bilinear interpolant (zero outside the image) is
/// quadratic between grid-line crossings, so it is integrated exactly with
/// two Simpson panels per piece, samples at most half a pixel apart. The
/// sample weights are assembled
/// once into a compressed row table and its transpose, so the forward map is
/// a gather over rays and the adjoint a gather over pixels. Both are
/// bit-identical for any thread count.
class ParallelBeamProjector final : public LinearOperator {
 public:
  static constexpr int kSubRays = 1;

  explicit ParallelBeamProjector(ScanGeometry geometry, int threads = 1);

  std::size_t rows() const override { return geometry_.rows(); }
  std::size_t cols() const override { return geometry_.cols(); }
  void apply_to(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint_to(std::span<const double> y, std::span<double> out) const override;

  Sinogram forward(const Image& img) const;
  Image adjoint(const Sinogram& sino) const;

  const ScanGeometry& geometry() const { return geometry_; }
  std::size_t nonzeros() const { return values_.size(); }

 private:
  ScanGeometry geometry_;
  int threads_;
  // rays x pixels, row-compressed
  std::vector<std::size_t> row_start_;
  std::vector<std::int32_t> pixel_;
  std::vector<double> values_;
  // pixels x rays, row-compressed
  std::vector<std::size_t> col_start_;
  std::vector<std::int32_t> ray_;
  std::vector<double> t_values_;
};

Sinogram radon_forward(const Image& img, const ScanGeometry& geometry);
Image radon_adjoint(const Sinogram& sino, const ScanGeometry& geometry);

/// y + e with e ~ N(0, sigma^2) i.i.d.; sigma = 0 returns the input unchanged.
Sinogram add_noise(const Sinogram& sino, double sigma, std::uint64_t seed);

/// Rows of `full` (a sinogram on the 180-angle grid) whose angles appear in `angles_deg`.
Sinogram select_views(const Sinogram& full, const std::vector<double>& angles_deg);

}  // namespace dice
