#include "dice/sampler.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "dice/errors.hpp"
#include "dice/rng.hpp"

namespace dice {

void SamplerConfig::validate(int schedule_steps) const {
  if (T_steps < 1 || T_steps > schedule_steps)
    throw ContractError("sampler: T_steps must lie in [1, " + std::to_string(schedule_steps) + "]");
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("sampler: rho must lie in (0, 1)");
  if (K < 1) throw ContractError("sampler: K must be >= 1");
  if (P < 1) throw ContractError("sampler: P must be >= 1");
  if (!(tau1 > 0.0 && tau1 < 1.0)) throw ContractError("sampler: tau1 must lie in (0, 1)");
}

void RunLog::write_residual_csv(std::ostream& out) const {
  out << "t,k,residual\n";
  out.precision(17);
  for (const auto& s : steps)
    for (std::size_t k = 0; k < s.residuals.size(); ++k) out << s.t << ',' << k + 1 << ',' << s.residuals[k] << '\n';
}

std::vector<int> select_timesteps(int T, int T_steps) {
  if (T < 1 || T_steps < 1 || T_steps > T)
    throw ContractError("select_timesteps: need 1 <= T_steps <= T");
  if (T_steps == 1) return {1};
  std::vector<int> out(T_steps);
  const double stride = static_cast<double>(T - 1) / (T_steps - 1);
  for (int i = 0; i < T_steps; ++i) out[i] = T - static_cast<int>(std::lround(i * stride));
  out.back() = 1;
  return out;
}

std::pair<Vec, RunLog> dice_sample(AgentList agents, const std::vector<double>& tau, std::size_t dim,
                                   const NoiseSchedule& sched, const SamplerConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate(sched.steps());
  if (agents.size() != tau.size()) throw DimensionError("dice_sample: agent and weight counts differ");
  for (const Agent* a : agents) require_same_size(dim, a->dim(), "dice_sample agent");

  const auto start = clock::now();
  RunLog log;
  log.config = cfg;
  log.timesteps = select_timesteps(sched.steps(), cfg.T_steps);

  CEConfig ce;
  ce.rho = cfg.rho;
  ce.K = cfg.K;
  ce.fixed_point_tol = cfg.fixed_point_tol;

  Rng init_rng = make_rng(cfg.seed, kInitStream);
  Rng renoise_rng = make_rng(cfg.seed, kRenoiseStream);
  auto draw = [&](Rng& rng) {
    Vec z = standard_normal(rng, dim);
    if (cfg.noise_transform) cfg.noise_transform(z);
    return z;
  };
  Vec x = draw(init_rng);

  std::optional<CEState> previous;
  for (std::size_t i = 0; i < log.timesteps.size(); ++i) {
    const int t = log.timesteps[i];
    const int t_next = i + 1 < log.timesteps.size() ? log.timesteps[i + 1] : 0;
    const auto step_start = clock::now();

    CEState v0 = cfg.warm_start_ce && previous ? *previous : CEState::replicated(x, tau);
    auto [v, diag] = mann_solve(agents, std::move(v0), ce, t);
    Vec x0 = consensus(v);
    if (!all_finite(x0)) throw NumericalError("dice: non-finite consensus at t = " + std::to_string(t));

    if (t_next == 0) {
      x = std::move(x0);
    } else {
      const Vec z = draw(renoise_rng);
      x = forward_diffuse(x0, t_next, z, sched);
    }
    if (cfg.record_trajectory) log.trajectory.push_back(x);
    if (cfg.warm_start_ce) previous = std::move(v);

    StepRecord rec;
    rec.t = t;
    rec.residuals = std::move(diag.residuals);
    rec.seconds = std::chrono::duration<double>(clock::now() - step_start).count();
    log.steps.push_back(std::move(rec));
  }
  log.total_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return {std::move(x), std::move(log)};
}

std::pair<Vec, RunLog> dice_reconstruct(std::span<const double> y, const LinearOperator& a, const Denoiser& denoiser,
                                        const NoiseSchedule& sched, const SamplerConfig& cfg) {
  cfg.validate(sched.steps());
  require_same_size(a.rows(), y.size(), "dice_reconstruct measurements");
  DataAgentOptions opts;
  opts.cg_steps = cfg.P;
  opts.cg_tol = cfg.cg_tol;
  opts.warm_start_previous = cfg.warm_start_cg;
  DataConsistencyAgent data(Vec(y.begin(), y.end()), a, sched, opts);
  DiffusionPriorAgent prior(denoiser, sched, a.cols());
  const Agent* agents[] = {&data, &prior};
  return dice_sample(agents, {cfg.tau1, 1.0 - cfg.tau1}, a.cols(), sched, cfg);
}

}  // namespace dice
