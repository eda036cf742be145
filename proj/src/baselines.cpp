#include "dice/baselines.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "dice/diffusion.hpp"

namespace dice {

std::string to_string(FilterWindow w) {
  switch (w) {
    case FilterWindow::ram_lak: return "ram_lak";
    case FilterWindow::hann: return "hann";
    case FilterWindow::cosine: return "cosine";
  }
  return "ram_lak";
}

FilterWindow parse_filter_window(const std::string& text) {
  if (text == "ram_lak" || text == "ramp" || text == "none") return FilterWindow::ram_lak;
  if (text == "hann") return FilterWindow::hann;
  if (text == "cosine") return FilterWindow::cosine;
  throw ContractError("unknown filter window '" + text + "' (expected ram_lak, hann or cosine)");
}

std::vector<double> ramp_filter(std::size_t padded, FilterWindow window) {
  // spatial Ram-Lak kernel: 1/4 at 0, -1/(pi n)^2 at odd n, 0 at even n
  std::vector<double> kernel(padded, 0.0);
  kernel[0] = 0.25;
  for (std::size_t i = 1; i < padded; i += 2) {
    const double d = static_cast<double>(std::min(i, padded - i));
    kernel[i] = -1.0 / ((std::numbers::pi * d) * (std::numbers::pi * d));
  }
  std::vector<double> response(padded / 2 + 1);
  for (std::size_t k = 0; k < response.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < padded; ++i)
      s += kernel[i] * std::cos(2.0 * std::numbers::pi * static_cast<double>((i * k) % padded) / padded);
    double w = 1.0;
    const double shifted = static_cast<double>((k + padded / 2) % padded);
    if (window == FilterWindow::hann)
      w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * shifted / (padded - 1));
    else if (window == FilterWindow::cosine)
      w = std::sin(std::numbers::pi * shifted / padded);
    response[k] = 2.0 * s * w;
  }
  return response;
}

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t padded_length(int n_detectors) {
  std::size_t size = 64;
  while (size < 2 * static_cast<std::size_t>(n_detectors)) size *= 2;
  return size;
}

}  // namespace

Image fbp_reconstruct(const Sinogram& sino, const ScanGeometry& geometry, FilterWindow window) {
  if (sino.n_angles() != static_cast<int>(geometry.n_views()) || sino.n_detectors() != geometry.n_detectors)
    throw DimensionError("fbp_reconstruct: sinogram shape does not match geometry");
  const std::size_t padded = padded_length(geometry.n_detectors);
  const auto response = ramp_filter(padded, window);

  double* real = fftw_alloc_real(padded);
  fftw_complex* spec = fftw_alloc_complex(padded / 2 + 1);
  fftw_plan to_freq;
  fftw_plan to_space;
  {
    std::lock_guard lock(fftw_plan_mutex());
    to_freq = fftw_plan_dft_r2c_1d(static_cast<int>(padded), real, spec, FFTW_ESTIMATE);
    to_space = fftw_plan_dft_c2r_1d(static_cast<int>(padded), spec, real, FFTW_ESTIMATE);
  }

  Sinogram filtered(sino.n_angles(), sino.n_detectors());
  for (int a = 0; a < sino.n_angles(); ++a) {
    std::fill(real, real + padded, 0.0);
    for (int d = 0; d < sino.n_detectors(); ++d) real[d] = sino(a, d);
    fftw_execute(to_freq);
    for (std::size_t k = 0; k < padded / 2 + 1; ++k) {
      spec[k][0] *= response[k];
      spec[k][1] *= response[k];
    }
    fftw_execute(to_space);
    for (int d = 0; d < sino.n_detectors(); ++d) filtered(a, d) = real[d] / static_cast<double>(padded);
  }

  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(to_freq);
    fftw_destroy_plan(to_space);
  }
  fftw_free(real);
  fftw_free(spec);

  Image img = ParallelBeamProjector(geometry).adjoint(filtered);
  const double scale = std::numbers::pi / (2.0 * static_cast<double>(geometry.n_views()));
  for (auto& v : img.pixels()) v *= scale;
  return img;
}

void FistaConfig::validate() const {
  if (iters < 1) throw ContractError("fista: iters must be >= 1");
  if (step && !(*step > 0.0)) throw ContractError("fista: step must be > 0");
  if (!(lambda >= 0.0)) throw ContractError("fista: lambda must be >= 0");
}

double estimate_lipschitz(const LinearOperator& a, int iters) {
  Vec v(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vec w = a.apply_adjoint(a.apply(v));
    lambda = norm2(w);
    if (lambda == 0.0) return 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / lambda;
  }
  return lambda;
}

namespace {

double data_fidelity(const LinearOperator& a, std::span<const double> x, std::span<const double> y) {
  Vec r = a.apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += (r[i] - y[i]) * (r[i] - y[i]);
  return 0.5 * s;
}

}  // namespace

FistaResult pnp_fista(std::span<const double> y, const LinearOperator& a, const PnpDenoiser& denoiser,
                      const FistaConfig& cfg) {
  cfg.validate();
  require_same_size(a.rows(), y.size(), "pnp_fista measurements");
  FistaResult result;
  if (cfg.step) {
    result.step = *cfg.step;
  } else {
    // small margin: the power iteration approaches the top eigenvalue from below
    const double lip = 1.05 * estimate_lipschitz(a);
    result.step = lip > 0.0 ? 1.0 / lip : 1.0;
  }

  const std::size_t n = a.cols();
  Vec x(n, 0.0), z(n, 0.0), grad_point(n), residual(a.rows());
  double momentum = 1.0;
  const double initial = data_fidelity(a, x, y);
  result.objective.push_back(initial);

  for (int k = 0; k < cfg.iters; ++k) {
    a.apply_to(z, residual);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= y[i];
    Vec grad = a.apply_adjoint(residual);
    for (std::size_t i = 0; i < n; ++i) grad_point[i] = z[i] - result.step * grad[i];
    Vec x_next = denoiser(grad_point, cfg.lambda * result.step);
    require_same_size(n, x_next.size(), "pnp_fista denoiser output");

    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double w = (momentum - 1.0) / next;
    for (std::size_t i = 0; i < n; ++i) z[i] = x_next[i] + w * (x_next[i] - x[i]);
    x = std::move(x_next);
    momentum = next;

    const double obj = data_fidelity(a, x, y);
    result.objective.push_back(obj);
    if (!std::isfinite(obj) || (obj > 10.0 * initial && obj > 1e-300))
      throw DivergedError("pnp_fista: objective grew past 10x its initial value at iteration " +
                          std::to_string(k + 1) + "; try a smaller step");
  }
  result.x = std::move(x);
  return result;
}

PnpDenoiser identity_denoiser() {
  return [](std::span<const double> image, double) { return Vec(image.begin(), image.end()); };
}

PnpDenoiser tv_denoiser(int side, int inner_iters) {
  return [side, inner_iters](std::span<const double> image, double weight) {
    return tv_prox(image, side, weight, inner_iters);
  };
}

}  // namespace dice
