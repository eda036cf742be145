#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dice/agents.hpp"
#include "dice/linalg.hpp"

namespace dice {

/// Stacked agent states v = (v_1, ..., v_N) with positive weights summing to one.
struct CEState {
  std::vector<Vec> blocks;
  std::vector<double> tau;

  /// N copies of x.
  static CEState replicated(std::span<const double> x, std::vector<double> tau);

  std::size_t n_agents() const { return blocks.size(); }
  std::size_t dim() const { return blocks.empty() ? 0 : blocks.front().size(); }
  /// Throws ContractError/DimensionError on a broken invariant.
  void validate() const;
  /// Euclidean norm of the stacked vector.
  double norm() const;

  bool operator==(const CEState&) const = default;
};

struct CEConfig {
  double rho = 0.9;
  int K = 5;
  /// Stop early once the relative fixed-point residual drops below this.
  std::optional<double> fixed_point_tol;

  void validate() const;
};

struct MannDiagnostics {
  /// ||Omega(v^k) - v^k|| / max(||v^k||, 1e-12) for each executed step k.
  std::vector<double> residuals;
  int steps = 0;
  bool early_exit = false;
};

using AgentList = std::span<const Agent* const>;

/// F(v): block i becomes agents[i](v_i, t).
CEState stacked_apply(AgentList agents, const CEState& state, int t);

/// G_tau(v): every block becomes the weighted mean sum_i tau_i v_i.
CEState weighted_average(const CEState& state);

/// Omega = (2 G_tau - I)(2 F - I).
CEState ce_operator(AgentList agents, const CEState& state, int t);

/// Relative residual ||Omega(v) - v|| / max(||v||, 1e-12).
double fixed_point_residual(const CEState& state, const CEState& omega_of_state);

/// K steps of v <- (1 - rho) v + rho Omega(v).
std::pair<CEState, MannDiagnostics> mann_solve(AgentList agents, CEState v0, const CEConfig& cfg, int t);

/// sum_i tau_i v_i
Vec consensus(const CEState& state);

}  // namespace dice
