// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "dice/agents.hpp"
#include "dice/consensus.hpp"
#include "dice/diffusion.hpp"
#include "dice/experiment.hpp"
#include "dice/geometry.hpp"
#include "dice/metrics.hpp"
#include "dice/sampler.hpp"
#include "oracles.hpp"

using namespace dice;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %d. %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

NoiseSchedule paper_schedule(ScheduleKind kind = ScheduleKind::linear) {
  return NoiseSchedule::make(1000, kind, 1e-4, 0.02);
}

Vec direct_prox(const Eigen::MatrixXd& m, const Vec& y, const Vec& v, double zeta) {
  const Eigen::MatrixXd lhs = m.transpose() * m + zeta * Eigen::MatrixXd::Identity(m.cols(), m.cols());
  const Eigen::VectorXd rhs = m.transpose() * oracle::to_eigen(y) + zeta * oracle::to_eigen(v);
  return oracle::from_eigen(lhs.ldlt().solve(rhs));
}

// ---------------------------------------------------------------------------

void adjoint_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int views : {15, 30, 60}) {
    ParallelBeamProjector a(build_geometry(32, {PatternKind::uniform, views, 0}));
    for (int probe = 0; probe < 20; ++probe) {
      const Vec x = oracle::random_vec(rng, a.cols()), y = oracle::random_vec(rng, a.rows());
      const double lhs = dot(a.apply(x), y), rhs = dot(x, a.apply_adjoint(y));
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
  }
  const double secs = since(t0);
  report(1, "adjoint identity", worst <= 1e-6 && secs < 5.0, fmt("max rel %.2e (<= 1e-6), %.2f s (< 5 s)", worst, secs));
}

void cg_oracle() {
  // 16x16 image, 8 nonuniform views. Mid and late schedule t; see README for t near 1.
  const auto t0 = Clock::now();
  const auto s = paper_schedule();
  ParallelBeamProjector a(build_geometry(16, {PatternKind::nonuniform, 8, 3}));
  const Eigen::MatrixXd m = oracle::to_eigen(assemble(a));
  std::mt19937_64 rng(2);
  const Vec y = oracle::random_vec(rng, a.rows()), v = oracle::random_vec(rng, a.cols());
  bool monotone = true;
  double worst = 0.0;
  for (int t : {50, 200, 500, 1000}) {
    const Vec exact = direct_prox(m, y, v, s.zeta(t));
    double prev = 1e300;
    for (int p : {1, 2, 5, 10, 20, 50, 100, 256}) {
      DataAgentOptions o;
      o.cg_steps = p;
      o.cg_tol = 0.0;
      const double err = oracle::rel_err(DataConsistencyAgent(y, a, s, o).apply(v, t), exact);
      if (err > prev * (1 + 1e-9) + 1e-14) monotone = false;
      prev = err;
    }
    worst = std::max(worst, prev);
  }
  const double secs = since(t0);
  report(2, "CG prox oracle", monotone && worst <= 1e-6 && secs < 30.0,
         fmt("error non-increasing in P: %s; P = n = 256 rel %.2e (<= 1e-6) at t = 50, 200, 500, 1000; %.2f s",
             monotone ? "yes" : "no", worst, secs));
}

void ce_fixed_point() {
  const auto t0 = Clock::now();
  const auto s = paper_schedule();
  std::mt19937_64 rng(3);
  ParallelBeamProjector a(build_geometry(8, {PatternKind::uniform, 6, 0}));
  const Vec y = oracle::random_vec(rng, a.rows());
  DataAgentOptions exact;
  exact.cg_steps = 64;
  exact.cg_tol = 0.0;
  const auto den =
      gaussian_mmse_denoiser(s, oracle::random_vec(rng, 64, 0.3), oracle::from_eigen(oracle::random_spd(rng, 64, 0.1, 1.0)));
  DataConsistencyAgent f1(y, a, s, exact);
  DiffusionPriorAgent f2(den, s, 64);
  const Agent* ag[] = {&f1, &f2};
  const std::vector<double> tau{0.5, 0.5};
  const int t = 400;

  const Vec star = oracle::affine_fixed_point([&](const CEState& st) { return ce_operator(ag, st, t); }, tau, 64);
  CEConfig cfg;
  cfg.rho = 0.5;
  cfg.K = 500;
  const auto [v, diag] = mann_solve(ag, CEState::replicated(oracle::random_vec(rng, 64), tau), cfg, t);
  const double state_err = oracle::rel_err(oracle::stack(v), star);
  const Vec x = consensus(v);
  const Vec xs = consensus(oracle::unstack(star, tau));
  const double x_err = oracle::rel_err(x, xs);
  const double e1 = norm2(lincomb(1.0, f1.apply(v.blocks[0], t), -1.0, x)) / norm2(x);
  const double e2 = norm2(lincomb(1.0, f2.apply(v.blocks[1], t), -1.0, x)) / norm2(x);
  const Vec u = lincomb(tau[0], lincomb(1.0, v.blocks[0], -1.0, x), tau[1], lincomb(1.0, v.blocks[1], -1.0, x));
  const double eu = norm2(u) / norm2(x);
  const double secs = since(t0);
  const double worst = std::max({state_err, x_err, e1, e2, eu});
  report(3, "CE fixed point", worst <= 1e-5 && secs < 10.0,
         fmt("state rel %.2e, x* rel %.2e, |F1(v1)-x*| %.2e, |F2(v2)-x*| %.2e, |sum tau u| %.2e (all <= 1e-5), %.2f s",
             state_err, x_err, e1, e2, eu, secs));
}

void schedule_identities() {
  bool ok = true;
  double worst = 0.0;
  std::mt19937_64 rng(4);
  for (auto kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
    const auto s = paper_schedule(kind);
    for (int t = 2; t <= 1000; ++t) {
      if (!(s.alpha_bar(t) < s.alpha_bar(t - 1))) ok = false;
      if (!(s.zeta(t) > s.zeta(t - 1))) ok = false;
    }
    for (int t : {1, 10, 250, 500, 999, 1000}) {
      const Vec x0 = oracle::random_vec(rng, 256), eps = oracle::random_vec(rng, 256);
      const Vec xt = forward_diffuse(x0, t, eps, s);
      worst = std::max(worst, oracle::rel_err(x0_from_eps(xt, eps, t, s), x0));
    }
  }
  report(4, "schedule identities", ok && worst <= 1e-12,
         fmt("alpha_bar strictly down, zeta strictly up: %s; roundtrip rel %.2e (<= 1e-12)", ok ? "yes" : "no", worst));
}

void end_to_end_ordering() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;  // TV prior, tau1 = 0.5, rho = 0.9, K = 5, P = 5, T_steps = 100
  cfg.image_side = 64;
  cfg.noise_sigma = 0.0;
  std::vector<NamedImage> inputs;
  cfg.phantom = "shepp_logan";
  for (auto& img : load_inputs(cfg)) inputs.push_back(std::move(img));
  cfg.phantom = "ellipses";
  cfg.phantom_count = 4;
  for (auto& img : load_inputs(cfg)) inputs.push_back(std::move(img));

  const Method methods[] = {Method::fbp, Method::pnp_fista, Method::dice};
  double mean[3][2] = {};
  bool views_ok = true;
  int dice_gt_fista = 0, fista_gt_fbp = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Sinogram full = simulate_full(cfg, inputs[i].image, i);
    double p[3][2];
    for (int vi = 0; vi < 2; ++vi) {
      const auto g = experiment_geometry(cfg, PatternKind::uniform, vi == 0 ? 15 : 60);
      const Sinogram y = select_views(full, g.angles_deg);
      for (int m = 0; m < 3; ++m) {
        p[m][vi] = psnr(inputs[i].image, reconstruct(cfg, methods[m], y, g, i).image);
        mean[m][vi] += p[m][vi] / inputs.size();
      }
    }
    for (int m = 0; m < 3; ++m) views_ok = views_ok && p[m][1] > p[m][0];
    dice_gt_fista += p[2][0] > p[1][0];
    fista_gt_fbp += p[1][0] > p[0][0];
    std::printf("      %-12s 15 views: fbp %6.2f  fista %6.2f  dice %6.2f | 60 views: fbp %6.2f  fista %6.2f  dice %6.2f\n",
                inputs[i].id.c_str(), p[0][0], p[1][0], p[2][0], p[0][1], p[1][1], p[2][1]);
  }
  const double secs = since(t0);
  const int n = static_cast<int>(inputs.size());
  const bool ok = dice_gt_fista == n && fista_gt_fbp == n && views_ok && secs < 600.0;
  report(5, "end-to-end ordering", ok,
         fmt("mean PSNR @15: dice %.2f, fista %.2f, fbp %.2f; dice > fista on %d/%d, fista > fbp on %d/%d; "
             "60 > 15 views for every method: %s; %.0f s (< 600 s)",
             mean[2][0], mean[1][0], mean[0][0], dice_gt_fista, n, fista_gt_fbp, n, views_ok ? "yes" : "no", secs));
}

// Linear agents on a 16x16 problem: Gaussian prior with an exponential
// covariance, truth drawn from it, 30 uniform views (the K/P ablation
// setting), no noise. Covariance eigenvalues stay below 1 so the prior agent
// is firmly nonexpansive at every t.
struct GaussianToy {
  static constexpr int side = 16, n = side * side;
  NoiseSchedule sched = paper_schedule();
  ParallelBeamProjector a{build_geometry(side, {PatternKind::uniform, 30, 0})};
  Vec mu = Vec(n, 0.5);
  Eigen::MatrixXd sigma;
  GaussianMmseDenoiser den;

  static Eigen::MatrixXd covariance() {
    Eigen::MatrixXd c(n, n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        const double d = std::hypot(p / side - q / side, p % side - q % side);
        c(p, q) = 0.025 * std::exp(-d / 3.0) + (p == q ? 1e-3 : 0.0);
      }
    return c;
  }

  GaussianToy() : sigma(covariance()), den(gaussian_mmse_denoiser(sched, mu, oracle::from_eigen(sigma))) {}

  double max_eigenvalue() const { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma).eigenvalues().maxCoeff(); }

  Vec truth(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd l = sigma.llt().matrixL();
    return oracle::from_eigen(oracle::to_eigen(mu) + l * oracle::to_eigen(oracle::random_vec(rng, n)));
  }

  // mean PSNR over a few truths and sampler seeds
  double mean_psnr(SamplerConfig cfg, int trials, RunLog* first_log = nullptr) const {
    double acc = 0.0;
    for (int k = 0; k < trials; ++k) {
      const Vec x = truth(100 + k);
      const Vec y = a.apply(x);
      cfg.seed = 7 + k;
      auto [out, log] = dice_reconstruct(y, a, den, sched, cfg);
      if (k == 0 && first_log) *first_log = std::move(log);
      acc += psnr(Image(side, x), Image(side, out));
    }
    return acc / trials;
  }
};

void ablation_sanity(const GaussianToy& toy) {
  SamplerConfig cfg;
  cfg.rho = 0.9;
  cfg.K = 5;
  const double p5 = toy.mean_psnr(cfg, 5);
  cfg.K = 8;
  const double p8 = toy.mean_psnr(cfg, 5);

  // exact prox: CG to tolerance with enough steps for n = 256
  SamplerConfig ex = cfg;
  ex.P = GaussianToy::n;
  ex.cg_tol = 1e-12;
  RunLog log;
  toy.mean_psnr(ex, 1, &log);
  int steps_total = 0, steps_decreasing = 0;
  for (const auto& st : log.steps) {
    ++steps_total;
    bool dec = true;
    for (std::size_t k = 1; k < st.residuals.size(); ++k) dec = dec && st.residuals[k] < st.residuals[k - 1];
    steps_decreasing += dec;
  }
  const bool ok = toy.max_eigenvalue() <= 1.0 && std::abs(p8 - p5) < 0.2 && steps_decreasing == steps_total;
  report(6, "ablation sanity", ok,
         fmt("PSNR K=5 %.3f, K=8 %.3f, |diff| %.3f dB (< 0.2); relative CE residual strictly decreasing over K=8 at "
             "%d/%d timesteps",
             p5, p8, std::abs(p8 - p5), steps_decreasing, steps_total));
}

void skip_sampling(const GaussianToy& toy) {
  SamplerConfig cfg;
  cfg.T_steps = 1000;
  const double full = toy.mean_psnr(cfg, 3);
  cfg.T_steps = 100;
  const double hundred = toy.mean_psnr(cfg, 3);
  cfg.T_steps = 50;
  const double fifty = toy.mean_psnr(cfg, 3);
  report(7, "skip sampling", std::abs(hundred - full) <= 1.5,
         fmt("PSNR T_steps=1000 %.3f, 100 %.3f (|diff| %.3f <= 1.5 dB), 50 %.3f (informational)", full, hundred,
             std::abs(hundred - full), fifty));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism() {
  const auto base = fs::temp_directory_path() / "dice_acceptance_det";
  fs::remove_all(base);
  ExperimentConfig cfg;
  cfg.image_side = 32;
  cfg.phantom = "ellipses";
  cfg.phantom_count = 3;
  cfg.noise_sigma = 0.01;
  cfg.views = {15, 30};
  cfg.patterns = {PatternKind::uniform, PatternKind::nonuniform};
  cfg.methods = {Method::fbp, Method::pnp_fista, Method::dice};
  cfg.fista_iters = 100;
  cfg.T_steps = 20;
  cfg.seed = 2024;

  auto run = [&](const std::string& name, int workers) {
    auto c = cfg;
    c.workers = workers;
    c.out_dir = base / name;
    run_experiment(c);
    return c.out_dir;
  };
  const auto a = run("serial_a", 1), b = run("serial_b", 1), c = run("parallel", 4);
  std::size_t files = 0, mismatched = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    // config echo and run metadata record out_dir, workers and wall-clock time
    if (rel == "metadata.ini" || rel == "run.ini") continue;
    ++files;
    const std::string ref = slurp(e.path());
    if (slurp(b / rel) != ref || slurp(c / rel) != ref) {
      ++mismatched;
      std::printf("      differs: %s\n", rel.string().c_str());
    }
  }
  fs::remove_all(base);
  report(8, "determinism", files > 0 && mismatched == 0,
         fmt("%zu output files (metrics.csv, recon, residual logs) compared across 2 serial runs and 4 workers, %zu "
             "differ",
             files, mismatched));
}

}  // namespace

int main() {
  adjoint_identity();
  cg_oracle();
  ce_fixed_point();
  schedule_identities();
  end_to_end_ordering();
  const GaussianToy toy;
  ablation_sanity(toy);
  skip_sampling(toy);
  determinism();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
