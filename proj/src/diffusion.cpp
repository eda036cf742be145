#include "dice/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dice/errors.hpp"

namespace dice {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::linear ? "linear" : "cosine"; }

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "linear") return ScheduleKind::linear;
  if (text == "cosine") return ScheduleKind::cosine;
  throw ContractError("unknown schedule kind '" + text + "' (expected linear or cosine)");
}

NoiseSchedule NoiseSchedule::make(int steps, ScheduleKind kind, double beta1, double betaT) {
  if (steps < 1) throw ContractError("make_schedule: T must be >= 1");
  if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0))
    throw ContractError("make_schedule: need 0 < beta1 <= betaT < 1");

  std::vector<double> betas(steps);
  if (kind == ScheduleKind::linear) {
    for (int i = 0; i < steps; ++i) {
      const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
      betas[i] = beta1 * (1.0 - f) + betaT * f;
    }
  } else {
    constexpr double s = 0.008;
    auto f = [&](int t) {
      const double c = std::cos((static_cast<double>(t) / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0);
    for (int t = 1; t <= steps; ++t) {
      const double ab = f(t) / f0;
      const double ab_prev = f(t - 1) / f0;
      betas[t - 1] = std::clamp(1.0 - ab / ab_prev, beta1, betaT);
    }
  }
  return from_betas(std::move(betas), kind);
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas, ScheduleKind kind) {
  if (betas.empty()) throw ContractError("NoiseSchedule: no timesteps");
  NoiseSchedule s;
  s.kind_ = kind;
  s.beta_.reserve(betas.size() + 1);
  s.beta_.push_back(0.0);
  s.alpha_bar_.reserve(betas.size() + 1);
  s.alpha_bar_.push_back(1.0);
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ContractError("NoiseSchedule: every beta must lie in (0, 1)");
    s.beta_.push_back(b);
    s.alpha_bar_.push_back(s.alpha_bar_.back() * (1.0 - b));
  }
  return s;
}

void NoiseSchedule::check(int t, int lo) const {
  if (t < lo || t > steps())
    throw ContractError("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(steps()) + "]");
}

double NoiseSchedule::beta(int t) const {
  check(t, 1);
  return beta_[t];
}

double NoiseSchedule::alpha(int t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(int t) const {
  check(t, 0);
  return alpha_bar_[t];
}

double NoiseSchedule::zeta(int t) const {
  const double ab = alpha_bar(t);
  return (1.0 - ab) / ab;
}

double zeta_at(const NoiseSchedule& sched, int t) {
  if (t < 1 || t > sched.steps()) throw ContractError("zeta_at: timestep out of range");
  return sched.zeta(t);
}

Vec forward_diffuse(std::span<const double> x0, int t, std::span<const double> z, const NoiseSchedule& sched) {
  require_same_size(x0.size(), z.size(), "forward_diffuse");
  const double ab = sched.alpha_bar(t);
  if (t == 0) return Vec(x0.begin(), x0.end());
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Vec out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * z[i];
  return out;
}

Vec x0_from_eps(std::span<const double> x_t, std::span<const double> eps, int t, const NoiseSchedule& sched) {
  require_same_size(x_t.size(), eps.size(), "x0_from_eps");
  if (t < 1 || t > sched.steps()) throw ContractError("x0_from_eps: timestep out of range");
  const double ab = sched.alpha_bar(t);
  if (ab <= std::numeric_limits<double>::epsilon())
    throw NumericalError("x0_from_eps: alpha_bar is numerically zero at t = " + std::to_string(t));
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Vec out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - b * eps[i]) / a;
  return out;
}

GaussianMmseDenoiser::GaussianMmseDenoiser(NoiseSchedule sched, Vec mu, const DenseMatrix& sigma)
    : sched_(std::move(sched)), mu_(std::move(mu)) {
  if (sigma.rows != mu_.size() || sigma.cols != mu_.size())
    throw DimensionError("gaussian_mmse_denoiser: covariance does not match mean");
  if (!sigma.is_symmetric(1e-10)) throw ContractError("gaussian_mmse_denoiser: covariance is not symmetric");
  auto eig = symmetric_eigen(sigma);
  const double top = std::max(std::abs(eig.values.back()), 1.0e-300);
  if (eig.values.front() <= 1e-12 * top)
    throw ContractError("gaussian_mmse_denoiser: covariance is singular or not positive definite");
  eigenvalues_ = std::move(eig.values);
  eigenvectors_ = std::move(eig.vectors);
}

Vec GaussianMmseDenoiser::spectral_apply(std::span<const double> r, double ab, bool eps_gain) const {
  const std::size_t n = mu_.size();
  Vec coeff = eigenvectors_.multiply_transposed(r);
  for (std::size_t k = 0; k < n; ++k) {
    const double lam = eigenvalues_[k];
    const double denom = ab * lam + (1.0 - ab);
    coeff[k] *= eps_gain ? std::sqrt(1.0 - ab) / denom : std::sqrt(ab) * lam / denom;
  }
  return eigenvectors_.multiply(coeff);
}

Vec GaussianMmseDenoiser::posterior_mean(std::span<const double> x_t, int t) const {
  require_same_size(mu_.size(), x_t.size(), "GaussianMmseDenoiser input");
  const double ab = sched_.alpha_bar(t);
  const double a = std::sqrt(ab);
  Vec r(x_t.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x_t[i] - a * mu_[i];
  Vec out = spectral_apply(r, ab, false);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mu_[i];
  return out;
}

Vec GaussianMmseDenoiser::predict_eps(std::span<const double> x_t, int t) const {
  require_same_size(mu_.size(), x_t.size(), "GaussianMmseDenoiser input");
  if (t < 1 || t > sched_.steps()) throw ContractError("GaussianMmseDenoiser: timestep out of range");
  const double ab = sched_.alpha_bar(t);
  const double a = std::sqrt(ab);
  Vec r(x_t.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x_t[i] - a * mu_[i];
  return spectral_apply(r, ab, true);
}

GaussianMmseDenoiser gaussian_mmse_denoiser(const NoiseSchedule& sched, Vec mu, const DenseMatrix& sigma) {
  return GaussianMmseDenoiser(sched, std::move(mu), sigma);
}

namespace {

// p = (p_h, p_v), each side*side; D x written into p-shaped buffer.
void forward_diff(std::span<const double> x, int side, std::span<double> out) {
  const std::size_t n = x.size();
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * side + c;
      out[i] = c + 1 < side ? x[i + 1] - x[i] : 0.0;
      out[n + i] = r + 1 < side ? x[i + side] - x[i] : 0.0;
    }
  }
}

// D^T p
void diff_adjoint(std::span<const double> p, int side, std::span<double> out) {
  const std::size_t n = out.size();
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * side + c;
      double v = 0.0;
      if (c + 1 < side) v -= p[i];
      if (c > 0) v += p[i - 1];
      if (r + 1 < side) v -= p[n + i];
      if (r > 0) v += p[n + i - side];
      out[i] = v;
    }
  }
}

}  // namespace

Vec tv_prox(std::span<const double> f, int side, double weight, int iters, Vec* dual_out) {
  require_same_size(static_cast<std::size_t>(side) * side, f.size(), "tv_prox");
  if (!(weight >= 0.0)) throw ContractError("tv_prox: weight must be >= 0");
  const std::size_t n = f.size();
  if (weight == 0.0 || iters <= 0) {
    if (dual_out) dual_out->assign(2 * n, 0.0);
    return Vec(f.begin(), f.end());
  }

  Vec p(2 * n, 0.0), p_prev(2 * n, 0.0), r(2 * n, 0.0), grad(2 * n), x(n), dtp(n);
  const double step = 1.0 / (8.0 * weight);
  double momentum = 1.0;
  for (int k = 0; k < iters; ++k) {
    diff_adjoint(r, side, dtp);
    for (std::size_t i = 0; i < n; ++i) x[i] = f[i] - weight * dtp[i];
    forward_diff(x, side, grad);
    p_prev.swap(p);
    for (std::size_t i = 0; i < 2 * n; ++i) p[i] = std::clamp(r[i] + step * grad[i], -1.0, 1.0);
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double w = (momentum - 1.0) / next;
    for (std::size_t i = 0; i < 2 * n; ++i) r[i] = p[i] + w * (p[i] - p_prev[i]);
    momentum = next;
  }
  diff_adjoint(p, side, dtp);
  for (std::size_t i = 0; i < n; ++i) x[i] = f[i] - weight * dtp[i];
  if (dual_out) *dual_out = std::move(p);
  return x;
}

double anisotropic_tv(std::span<const double> x, int side) {
  require_same_size(static_cast<std::size_t>(side) * side, x.size(), "anisotropic_tv");
  Vec d(2 * x.size());
  forward_diff(x, side, d);
  double s = 0.0;
  for (double v : d) s += std::abs(v);
  return s;
}

TvProxDenoiser::TvProxDenoiser(NoiseSchedule sched, int side, double lambda, int inner_iters, double prior_mean,
                               double prior_var)
    : sched_(std::move(sched)),
      side_(side),
      lambda_(lambda),
      inner_iters_(inner_iters),
      prior_mean_(prior_mean),
      prior_precision_(1.0 / prior_var) {
  if (!(lambda > 0.0)) throw ContractError("tv_prox_denoiser: lambda_tv must be > 0");
  if (side < 1) throw ContractError("tv_prox_denoiser: invalid image side");
  if (inner_iters < 1) throw ContractError("tv_prox_denoiser: inner_iters must be >= 1");
  if (!(prior_var > 0.0)) throw ContractError("tv_prox_denoiser: prior_var must be > 0");
}

TvProxDenoiser::Blend TvProxDenoiser::blend(std::span<const double> x_t, int t) const {
  require_same_size(static_cast<std::size_t>(side_) * side_, x_t.size(), "TvProxDenoiser input");
  if (t < 1 || t > sched_.steps()) throw ContractError("TvProxDenoiser: timestep out of range");
  const double ab = sched_.alpha_bar(t);
  const double a = std::sqrt(ab);
  // b / (a + b) written to stay finite as ab -> 0 and ab -> 1
  const double gain = prior_precision_ * (1.0 - ab) / (ab + prior_precision_ * (1.0 - ab));
  Blend out{Vec(x_t.size()), lambda_ * std::sqrt(1.0 - ab), gain};
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double r = x_t[i] - a * prior_mean_;
    // g = m + (1 - gain) (x_t / sqrt(ab) - m)
    out.g[i] = prior_mean_ + (1.0 - gain) * r / a;
  }
  return out;
}

Vec TvProxDenoiser::x0_estimate(std::span<const double> x_t, int t) const {
  const Blend b = blend(x_t, t);
  return tv_prox(b.g, side_, b.weight, inner_iters_);
}

Vec TvProxDenoiser::predict_eps(std::span<const double> x_t, int t) const {
  const Blend b = blend(x_t, t);
  const double ab = sched_.alpha_bar(t);
  const double a = std::sqrt(ab);
  Vec dual;
  tv_prox(b.g, side_, b.weight, inner_iters_, &dual);
  // x_t - sqrt(ab) x0 = gain (x_t - sqrt(ab) m) + sqrt(ab) weight D^T p, and weight / sqrt(1 - ab) = lambda
  const double prior_scale =
      prior_precision_ * std::sqrt(1.0 - ab) / (ab + prior_precision_ * (1.0 - ab));
  Vec eps(x_t.size());
  diff_adjoint(dual, side_, eps);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = a * lambda_ * eps[i] + prior_scale * (x_t[i] - a * prior_mean_);
  return eps;
}

TvProxDenoiser tv_prox_denoiser(const NoiseSchedule& sched, int side, double lambda_tv, int inner_iters,
                                double prior_mean, double prior_var) {
  return TvProxDenoiser(sched, side, lambda_tv, inner_iters, prior_mean, prior_var);
}

}  // namespace dice
