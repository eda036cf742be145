#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dice/errors.hpp"
#include "dice/geometry.hpp"
#include "dice/image.hpp"
#include "dice/linalg.hpp"

namespace dice {

enum class FilterWindow { ram_lak, hann, cosine };

std::string to_string(FilterWindow w);
FilterWindow parse_filter_window(const std::string& text);

/// Frequency response of the ramp filter for a zero-padded length `padded`
/// (scikit-image convention: twice the DFT of the spatial Ram-Lak kernel).
std::vector<double> ramp_filter(std::size_t padded, FilterWindow window);

/// Ramp-filters every detector row, back-projects with the exact adjoint and
/// scales by pi / (2 * n_views).
Image fbp_reconstruct(const Sinogram& sino, const ScanGeometry& geometry, FilterWindow window = FilterWindow::ram_lak);

struct FistaConfig {
  double lambda = 0.05;
  int iters = 1000;
  /// nullopt selects 1 / L with L estimated by power iteration on A^T A.
  std::optional<double> step;

  void validate() const;
};

/// Plug-in proximal step: maps the gradient-step image to the denoised image.
/// `weight` is lambda * step, the strength a proximal operator would use.
using PnpDenoiser = std::function<Vec(std::span<const double> image, double weight)>;

struct FistaResult {
  Vec x;
  /// 0.5 ||A x_k - y||^2 for k = 0 (the zero start) and after every iteration.
  std::vector<double> objective;
  double step = 0.0;
};

class DivergedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Largest eigenvalue of A^T A by power iteration from a fixed start vector.
double estimate_lipschitz(const LinearOperator& a, int iters = 100);

/// FISTA on 0.5 ||A x - y||^2 with `denoiser` in place of the proximal step.
FistaResult pnp_fista(std::span<const double> y, const LinearOperator& a, const PnpDenoiser& denoiser,
                      const FistaConfig& cfg);

PnpDenoiser identity_denoiser();
/// TV prox at strength `weight` with the given dual iteration count.
PnpDenoiser tv_denoiser(int side, int inner_iters);

}  // namespace dice
