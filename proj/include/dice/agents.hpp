#pragma once

#include <functional>
#include <mutex>
#include <span>

#include "dice/diffusion.hpp"
#include "dice/linalg.hpp"

namespace dice {

/// A map R^n -> R^n evaluated at a diffusion timestep.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec apply(std::span<const double> v, int t) const = 0;
};

struct DataAgentOptions {
  /// CG steps per evaluation (P). Large values with a tight tol give the exact prox.
  int cg_steps = 5;
  double cg_tol = 1e-10;
  /// Start CG from the previous call's solution instead of the input state.
  bool warm_start_previous = false;
};

/// Data-consistency prox
///   F1(v) = argmin_s 0.5 ||A s - y||^2 + (zeta_t / 2) ||s - v||^2,
/// approximated by CG on (A^T A + zeta_t I) s = A^T y + zeta_t v.
/// Holds references to `a` and `sched`; both must outlive the agent.
class DataConsistencyAgent final : public Agent {
 public:
  DataConsistencyAgent(Vec y, const LinearOperator& a, const NoiseSchedule& sched, DataAgentOptions options = {});

  std::size_t dim() const override { return a_.cols(); }
  Vec apply(std::span<const double> v, int t) const override;

  /// Same solve with an explicit penalty instead of zeta_t.
  Vec solve(std::span<const double> v, double zeta) const;

  const DataAgentOptions& options() const { return options_; }

 private:
  Vec y_;
  Vec aty_;
  const LinearOperator& a_;
  const NoiseSchedule& sched_;
  DataAgentOptions options_;
  mutable std::mutex warm_mutex_;
  mutable Vec warm_;
};

/// Diffusion prior: F2(v) = (v - sqrt(1 - ab_t) eps(v, t)) / sqrt(ab_t).
/// Holds references to the denoiser and schedule.
class DiffusionPriorAgent final : public Agent {
 public:
  DiffusionPriorAgent(const Denoiser& denoiser, const NoiseSchedule& sched, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  Vec apply(std::span<const double> v, int t) const override;

 private:
  const Denoiser& denoiser_;
  const NoiseSchedule& sched_;
  std::size_t dim_;
};

/// Adapts a callable; used for toy agents and tests.
class FunctionAgent final : public Agent {
 public:
  using Fn = std::function<Vec(std::span<const double>, int)>;
  FunctionAgent(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const override { return dim_; }
  Vec apply(std::span<const double> v, int t) const override;

 private:
  std::size_t dim_;
  Fn fn_;
};

}  // namespace dice
