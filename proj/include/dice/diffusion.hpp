#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dice/linalg.hpp"

namespace dice {

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& text);

/// DDPM variance schedule. Timesteps run 1..T; index 0 is the clean signal
/// (alpha_bar(0) = 1, zeta(0) = 0).
class NoiseSchedule {
 public:
  /// linear: beta evenly spaced on [beta1, betaT] with exact endpoints.
  /// cosine: Nichol-Dhariwal alpha_bar (s = 0.008), betas clipped into [beta1, betaT].
  static NoiseSchedule make(int steps, ScheduleKind kind, double beta1, double betaT);
  /// Arbitrary betas in (0, 1), beta[0] is timestep 1.
  static NoiseSchedule from_betas(std::vector<double> betas, ScheduleKind kind = ScheduleKind::linear);

  int steps() const { return static_cast<int>(beta_.size()) - 1; }
  ScheduleKind kind() const { return kind_; }

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;
  /// (1 - alpha_bar) / alpha_bar, the prox penalty at timestep t.
  double zeta(int t) const;

 private:
  NoiseSchedule() = default;
  void check(int t, int lo) const;

  ScheduleKind kind_ = ScheduleKind::linear;
  std::vector<double> beta_;       // [0] unused
  std::vector<double> alpha_bar_;  // [0] = 1
};

/// Throws ContractError unless 1 <= t <= T.
double zeta_at(const NoiseSchedule& sched, int t);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) z; t = 0 returns x0.
Vec forward_diffuse(std::span<const double> x0, int t, std::span<const double> z, const NoiseSchedule& sched);

/// (x_t - sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_bar_t).
Vec x0_from_eps(std::span<const double> x_t, std::span<const double> eps, int t, const NoiseSchedule& sched);

/// Noise-prediction network interface. Implementations are deterministic,
/// never draw random numbers and are safe for concurrent calls.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Vec predict_eps(std::span<const double> x_t, int t) const = 0;
};

/// Predicts eps = 0, so the implied clean image is x_t / sqrt(alpha_bar_t).
class ZeroDenoiser final : public Denoiser {
 public:
  Vec predict_eps(std::span<const double> x_t, int) const override { return Vec(x_t.size(), 0.0); }
};

/// Exact MMSE noise prediction for the prior x0 ~ N(mu, sigma):
///   E[x0 | x_t] = mu + sqrt(ab) S (ab S + (1 - ab) I)^-1 (x_t - sqrt(ab) mu)
/// evaluated in the eigenbasis of S, which is factored once.
class GaussianMmseDenoiser final : public Denoiser {
 public:
  GaussianMmseDenoiser(NoiseSchedule sched, Vec mu, const DenseMatrix& sigma);

  Vec predict_eps(std::span<const double> x_t, int t) const override;
  Vec posterior_mean(std::span<const double> x_t, int t) const;

  const Vec& mean() const { return mu_; }

 private:
  // Q diag(f(lambda)) Q^T r
  Vec spectral_apply(std::span<const double> r, double ab, bool eps_gain) const;

  NoiseSchedule sched_;
  Vec mu_;
  Vec eigenvalues_;
  DenseMatrix eigenvectors_;
};

GaussianMmseDenoiser gaussian_mmse_denoiser(const NoiseSchedule& sched, Vec mu, const DenseMatrix& sigma);

/// argmin_x 0.5 ||x - f||^2 + weight * (||D_h x||_1 + ||D_v x||_1) on a side x side
/// image, by accelerated projected gradient on the dual (Beck-Teboulle).
/// `dual_out`, if given, receives the final dual variable (2 * side^2 entries).
Vec tv_prox(std::span<const double> f, int side, double weight, int iters, Vec* dual_out = nullptr);

/// ||D_h x||_1 + ||D_v x||_1 with forward differences (Neumann boundary).
double anisotropic_tv(std::span<const double> x, int side);

/// Classical prior: the clean estimate is the TV prox, at strength
/// lambda * sqrt(1 - ab), of the precision-weighted blend
///   g = (a x_t / sqrt(ab) + b m) / (a + b),  a = ab / (1 - ab),  b = 1 / prior_var,
/// i.e. the likelihood of x_t combined with a white Gaussian N(m, prior_var I).
/// With prior_var = inf the blend is x_t / sqrt(ab) itself. Without the
/// Gaussian factor the estimate scales like 1 / sqrt(ab) at large t and the
/// consensus iteration is expansive; prior_var <= 1 keeps the map
/// nonexpansive for every t. eps is the residual that maps back to x_t.
class TvProxDenoiser final : public Denoiser {
 public:
  TvProxDenoiser(NoiseSchedule sched, int side, double lambda, int inner_iters, double prior_mean = 0.0,
                 double prior_var = std::numeric_limits<double>::infinity());

  Vec predict_eps(std::span<const double> x_t, int t) const override;
  Vec x0_estimate(std::span<const double> x_t, int t) const;

 private:
  struct Blend {
    Vec g;
    double weight;      // TV strength
    double prior_gain;  // b / (a + b)
  };
  Blend blend(std::span<const double> x_t, int t) const;

  NoiseSchedule sched_;
  int side_;
  double lambda_;
  int inner_iters_;
  double prior_mean_;
  double prior_precision_;
};

TvProxDenoiser tv_prox_denoiser(const NoiseSchedule& sched, int side, double lambda_tv, int inner_iters,
                                double prior_mean = 0.0,
                                double prior_var = std::numeric_limits<double>::infinity());

}  // namespace dice
