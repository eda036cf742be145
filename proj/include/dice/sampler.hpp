#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dice/consensus.hpp"
#include "dice/diffusion.hpp"
#include "dice/linalg.hpp"

namespace dice {

struct SamplerConfig {
  int T_steps = 100;
  double rho = 0.9;
  int K = 5;
  int P = 5;
  double tau1 = 0.5;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  /// Seed each CE solve with the previous solve's state instead of (x_t, x_t).
  bool warm_start_ce = false;
  /// Start CG inside the data agent from its previous solution.
  bool warm_start_cg = false;
  std::optional<double> fixed_point_tol;
  double cg_tol = 1e-10;
  /// Applied in place to every Gaussian draw (x_T and each renoising z). Must
  /// map N(0, I) to itself, e.g. a pixel permutation.
  std::function<void(std::span<double>)> noise_transform;

  void validate(int schedule_steps) const;
};

struct StepRecord {
  int t = 0;
  std::vector<double> residuals;
  double seconds = 0.0;
};

struct RunLog {
  SamplerConfig config;
  std::vector<int> timesteps;
  std::vector<StepRecord> steps;
  /// Consensus estimate after each outer step, when requested.
  std::vector<Vec> trajectory;
  double total_seconds = 0.0;

  /// Rows "t,k,residual" with k counted from 1.
  void write_residual_csv(std::ostream& out) const;
};

/// Descending, evenly strided subset of {T, ..., 1} with both endpoints.
std::vector<int> select_timesteps(int T, int T_steps);

/// Named RNG streams used by the sampler; exposed so callers can replay draws.
inline constexpr const char* kInitStream = "init";
inline constexpr const char* kRenoiseStream = "renoise";

/// Diffusion consensus-equilibrium reconstruction.
///
/// x_T ~ N(0, I); then for each selected t (descending) the CE state is set to
/// (x_t, x_t), K Mann steps balance the data-consistency prox against the
/// diffusion prior, the weighted consensus x0* is taken, and the sample is
/// renoised to the next selected timestep (exactly x0* after t = 1).
std::pair<Vec, RunLog> dice_reconstruct(std::span<const double> y, const LinearOperator& a, const Denoiser& denoiser,
                                        const NoiseSchedule& sched, const SamplerConfig& cfg);

/// Same loop with caller-supplied agents in place of the standard pair.
/// `agents` and `tau` must have equal length.
std::pair<Vec, RunLog> dice_sample(AgentList agents, const std::vector<double>& tau, std::size_t dim,
                                   const NoiseSchedule& sched, const SamplerConfig& cfg);

}  // namespace dice
