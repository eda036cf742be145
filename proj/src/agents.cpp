#include "dice/agents.hpp"

#include "dice/errors.hpp"

namespace dice {

DataConsistencyAgent::DataConsistencyAgent(Vec y, const LinearOperator& a, const NoiseSchedule& sched,
                                           DataAgentOptions options)
    : y_(std::move(y)), a_(a), sched_(sched), options_(options) {
  require_same_size(a_.rows(), y_.size(), "data_consistency_agent measurements");
  if (options_.cg_steps < 1) throw ContractError("data_consistency_agent: P must be >= 1");
  aty_ = a_.apply_adjoint(y_);
}

Vec DataConsistencyAgent::solve(std::span<const double> v, double zeta) const {
  require_same_size(dim(), v.size(), "data_consistency_agent input");
  RegularizedNormalOperator normal(a_, zeta);
  Vec rhs(aty_.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = aty_[i] + zeta * v[i];

  Vec start;
  if (options_.warm_start_previous) {
    std::lock_guard lock(warm_mutex_);
    start = warm_;
  }
  if (start.size() != v.size()) start.assign(v.begin(), v.end());

  CgOptions cg;
  cg.max_iters = options_.cg_steps;
  cg.tol = options_.cg_tol;
  Vec s = cg_solve(normal, rhs, start, cg).x;
  if (options_.warm_start_previous) {
    std::lock_guard lock(warm_mutex_);
    warm_ = s;
  }
  return s;
}

Vec DataConsistencyAgent::apply(std::span<const double> v, int t) const { return solve(v, zeta_at(sched_, t)); }

DiffusionPriorAgent::DiffusionPriorAgent(const Denoiser& denoiser, const NoiseSchedule& sched, std::size_t dim)
    : denoiser_(denoiser), sched_(sched), dim_(dim) {}

Vec DiffusionPriorAgent::apply(std::span<const double> v, int t) const {
  require_same_size(dim_, v.size(), "diffusion_prior_agent input");
  const Vec eps = denoiser_.predict_eps(v, t);
  require_same_size(dim_, eps.size(), "denoiser output");
  return x0_from_eps(v, eps, t, sched_);
}

Vec FunctionAgent::apply(std::span<const double> v, int t) const {
  require_same_size(dim_, v.size(), "agent input");
  Vec out = fn_(v, t);
  require_same_size(dim_, out.size(), "agent output");
  return out;
}

}  // namespace dice
