#include "dice/consensus.hpp"

#include <cmath>
#include <string>

#include "dice/errors.hpp"

namespace dice {

CEState CEState::replicated(std::span<const double> x, std::vector<double> tau) {
  CEState s;
  s.blocks.assign(tau.size(), Vec(x.begin(), x.end()));
  s.tau = std::move(tau);
  s.validate();
  return s;
}

void CEState::validate() const {
  if (blocks.empty()) throw ContractError("CEState: no blocks");
  if (blocks.size() != tau.size()) throw DimensionError("CEState: block count differs from weight count");
  double sum = 0.0;
  for (double w : tau) {
    if (!(w > 0.0)) throw ContractError("CEState: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ContractError("CEState: weights must sum to 1");
  for (const auto& b : blocks) require_same_size(blocks.front().size(), b.size(), "CEState block");
}

double CEState::norm() const {
  double s = 0.0;
  for (const auto& b : blocks) s += dot(b, b);
  return std::sqrt(s);
}

void CEConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("CEConfig: rho must lie in (0, 1)");
  if (K < 1) throw ContractError("CEConfig: K must be >= 1");
  if (fixed_point_tol && !(*fixed_point_tol > 0.0)) throw ContractError("CEConfig: fixed_point_tol must be > 0");
}

CEState stacked_apply(AgentList agents, const CEState& state, int t) {
  if (agents.size() != state.n_agents())
    throw DimensionError("stacked_apply: " + std::to_string(agents.size()) + " agents for " +
                         std::to_string(state.n_agents()) + " blocks");
  CEState out;
  out.tau = state.tau;
  out.blocks.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) out.blocks.push_back(agents[i]->apply(state.blocks[i], t));
  return out;
}

Vec consensus(const CEState& state) {
  state.validate();
  Vec mean(state.dim(), 0.0);
  for (std::size_t i = 0; i < state.n_agents(); ++i) axpy(state.tau[i], state.blocks[i], mean);
  return mean;
}

CEState weighted_average(const CEState& state) {
  CEState out;
  out.tau = state.tau;
  out.blocks.assign(state.n_agents(), consensus(state));
  return out;
}

CEState ce_operator(AgentList agents, const CEState& state, int t) {
  state.validate();
  CEState reflected = stacked_apply(agents, state, t);
  for (std::size_t i = 0; i < reflected.n_agents(); ++i) {
    auto& w = reflected.blocks[i];
    const auto& v = state.blocks[i];
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = 2.0 * w[j] - v[j];
  }
  const Vec mean = consensus(reflected);
  for (auto& w : reflected.blocks)
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = 2.0 * mean[j] - w[j];
  return reflected;
}

double fixed_point_residual(const CEState& state, const CEState& omega_of_state) {
  double diff = 0.0;
  for (std::size_t i = 0; i < state.n_agents(); ++i) {
    const auto& a = state.blocks[i];
    const auto& b = omega_of_state.blocks[i];
    for (std::size_t j = 0; j < a.size(); ++j) diff += (b[j] - a[j]) * (b[j] - a[j]);
  }
  return std::sqrt(diff) / std::max(state.norm(), 1e-12);
}

std::pair<CEState, MannDiagnostics> mann_solve(AgentList agents, CEState v, const CEConfig& cfg, int t) {
  cfg.validate();
  v.validate();
  MannDiagnostics diag;
  for (int k = 0; k < cfg.K; ++k) {
    const CEState omega = ce_operator(agents, v, t);
    const double res = fixed_point_residual(v, omega);
    diag.residuals.push_back(res);
    for (std::size_t i = 0; i < v.n_agents(); ++i) {
      auto& vi = v.blocks[i];
      const auto& oi = omega.blocks[i];
      for (std::size_t j = 0; j < vi.size(); ++j) vi[j] = (1.0 - cfg.rho) * vi[j] + cfg.rho * oi[j];
      if (!all_finite(vi))
        throw NumericalError("mann_solve: non-finite state at t = " + std::to_string(t) + ", k = " +
                             std::to_string(k + 1));
    }
    diag.steps = k + 1;
    if (cfg.fixed_point_tol && res < *cfg.fixed_point_tol) {
      diag.early_exit = true;
      break;
    }
  }
  return {std::move(v), std::move(diag)};
}

}  // namespace dice
