#include <doctest.h>

#include <cmath>
#include <random>

#include "dice/agents.hpp"
#include "dice/consensus.hpp"
#include "dice/errors.hpp"
#include "dice/geometry.hpp"
#include "oracles.hpp"

using namespace dice;

namespace {

FunctionAgent scale_agent(std::size_t n, double k) {
  return FunctionAgent(n, [k](std::span<const double> v, int) { return scaled(k, v); });
}

FunctionAgent matrix_agent(const Eigen::MatrixXd& m, const Eigen::VectorXd& c) {
  return FunctionAgent(m.cols(), [m, c](std::span<const double> v, int) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    return oracle::from_eigen(m * x + c);
  });
}

// exact data prox plus Gaussian posterior mean on an 8x8 image
struct LinearPair {
  NoiseSchedule sched = NoiseSchedule::make(1000, ScheduleKind::linear, 1e-4, 0.02);
  ParallelBeamProjector a{build_geometry(8, {PatternKind::uniform, 6, 0})};
  Vec y;
  GaussianMmseDenoiser den;
  DataConsistencyAgent f1;
  DiffusionPriorAgent f2;

  static GaussianMmseDenoiser make_den(const NoiseSchedule& s, std::mt19937_64& rng) {
    return gaussian_mmse_denoiser(s, oracle::random_vec(rng, 64, 0.3), oracle::from_eigen(oracle::random_spd(rng, 64, 0.1, 1.0)));
  }
  static DataAgentOptions exact() {
    DataAgentOptions o;
    o.cg_steps = 64;
    o.cg_tol = 0.0;
    return o;
  }
  explicit LinearPair(std::mt19937_64& rng)
      : y(oracle::random_vec(rng, a.rows())), den(make_den(sched, rng)), f1(y, a, sched, exact()), f2(den, sched, 64) {}
};

}  // namespace

TEST_SUITE("consensus") {
  TEST_CASE("stacked F applies each agent to its block") {
    const auto id = scale_agent(2, 1.0);
    const Agent* ids[] = {&id, &id};
    const CEState s{{{1, 2}, {3, 4}}, {0.5, 0.5}};
    CHECK(stacked_apply(ids, s, 1) == s);
    const auto two = scale_agent(1, 2.0), three = scale_agent(1, 3.0);
    const Agent* ag[] = {&two, &three};
    const CEState out = stacked_apply(ag, CEState{{{1}, {1}}, {0.5, 0.5}}, 1);
    CHECK(out.blocks == std::vector<Vec>{{2}, {3}});
    CHECK(out.tau == std::vector<double>{0.5, 0.5});
  }

  TEST_CASE("stacked F with the paper agents equals separate calls") {
    std::mt19937_64 rng(1);
    const auto sched = NoiseSchedule::make(1000, ScheduleKind::linear, 1e-4, 0.02);
    DenseMatrix m(6, 16);
    for (auto& v : m.data) v = std::normal_distribution<double>()(rng);
    DenseOperator a(m);
    DataConsistencyAgent f1(oracle::random_vec(rng, 6), a, sched);
    const auto den = tv_prox_denoiser(sched, 4, 0.3, 20, 0.0, 1.0);
    DiffusionPriorAgent f2(den, sched, 16);
    const Agent* ag[] = {&f1, &f2};
    const CEState s{{oracle::random_vec(rng, 16), oracle::random_vec(rng, 16)}, {0.5, 0.5}};
    const CEState out = stacked_apply(ag, s, 77);
    CHECK(out.blocks[0] == f1.apply(s.blocks[0], 77));
    CHECK(out.blocks[1] == f2.apply(s.blocks[1], 77));
  }

  TEST_CASE("stacked F block-count mismatch") {
    const auto id = scale_agent(2, 1.0);
    const Agent* ag[] = {&id};
    CHECK_THROWS_AS(stacked_apply(ag, CEState{{{1, 2}, {3, 4}}, {0.5, 0.5}}, 1), DimensionError);
  }

  TEST_CASE("weighted average") {
    const CEState g = weighted_average(CEState{{{1, 1}, {3, 3}}, {0.5, 0.5}});
    CHECK(g.blocks == std::vector<Vec>{{2, 2}, {2, 2}});
    const Vec a{1.5, -2}, b{7, 4};
    const CEState h = weighted_average(CEState{{a, b}, {0.99, 0.01}});
    for (const auto& blk : h.blocks)
      for (int i = 0; i < 2; ++i) CHECK(blk[i] == doctest::Approx(0.99 * a[i] + 0.01 * b[i]).epsilon(1e-15));
    std::mt19937_64 rng(2);
    const CEState r{{oracle::random_vec(rng, 9), oracle::random_vec(rng, 9), oracle::random_vec(rng, 9)}, {0.2, 0.3, 0.5}};
    const CEState once = weighted_average(r), twice = weighted_average(once);
    for (int i = 0; i < 3; ++i) CHECK(oracle::rel_err(twice.blocks[i], once.blocks[i]) <= 1e-12);
  }

  TEST_CASE("CEState invariants") {
    CHECK_THROWS_AS(CEState({{{1}, {2}}, {1.0, 0.0}}).validate(), ContractError);
    CHECK_THROWS_AS(CEState({{{1}, {2}}, {0.6, 0.6}}).validate(), ContractError);
    CHECK_THROWS_AS(CEState({{{1}, {2, 3}}, {0.5, 0.5}}).validate(), DimensionError);
    CHECK_NOTHROW(CEState({{{1}, {2}}, {0.25, 0.75}}).validate());
  }

  TEST_CASE("omega reflects about the mean for identity agents") {
    const auto id = scale_agent(1, 1.0);
    const Agent* ag[] = {&id, &id};
    const CEState out = ce_operator(ag, CEState{{{0}, {2}}, {0.5, 0.5}}, 1);
    CHECK(out.blocks == std::vector<Vec>{{2}, {0}});
  }

  TEST_CASE("omega against the assembled 2n x 2n matrix") {
    std::mt19937_64 rng(3);
    const int n = 8;
    const Eigen::MatrixXd m1 = oracle::random_spd(rng, n, 0.1, 0.9), m2 = oracle::random_spd(rng, n, 0.0, 1.0);
    const auto f1 = matrix_agent(m1, Eigen::VectorXd::Zero(n)), f2 = matrix_agent(m2, Eigen::VectorXd::Zero(n));
    const Agent* ag[] = {&f1, &f2};
    const double t1 = 0.3, t2 = 0.7;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2 * n, 2 * n), G(2 * n, 2 * n);
    F.topLeftCorner(n, n) = m1;
    F.bottomRightCorner(n, n) = m2;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    G << t1 * I, t2 * I, t1 * I, t2 * I;
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const Eigen::MatrixXd omega = (2 * G - I2) * (2 * F - I2);
    const CEState s{{oracle::random_vec(rng, n), oracle::random_vec(rng, n)}, {t1, t2}};
    const Vec ref = oracle::from_eigen(omega * oracle::to_eigen(oracle::stack(s)));
    CHECK(oracle::rel_err(oracle::stack(ce_operator(ag, s, 1)), ref) <= 1e-10);
  }

  TEST_CASE("fixed points of omega are left alone") {
    std::mt19937_64 rng(4);
    const int n = 6;
    const Eigen::MatrixXd m1 = oracle::random_spd(rng, n, 0.1, 0.9), m2 = oracle::random_spd(rng, n, 0.1, 0.9);
    const auto f1 = matrix_agent(m1, oracle::to_eigen(oracle::random_vec(rng, n)));
    const auto f2 = matrix_agent(m2, oracle::to_eigen(oracle::random_vec(rng, n)));
    const Agent* ag[] = {&f1, &f2};
    const std::vector<double> tau{0.4, 0.6};
    const Vec star = oracle::affine_fixed_point([&](const CEState& s) { return ce_operator(ag, s, 1); }, tau, n);
    const CEState v = oracle::unstack(star, tau);
    CHECK(oracle::rel_err(oracle::stack(ce_operator(ag, v, 1)), star) <= 1e-12);
    CEConfig cfg;
    cfg.K = 20;
    cfg.rho = 0.3;
    CHECK(oracle::rel_err(oracle::stack(mann_solve(ag, v, cfg, 1).first), star) <= 1e-12);
  }

  TEST_CASE("Mann with identity agents averages the blocks") {
    const auto id = scale_agent(3, 1.0);
    const Agent* ag[] = {&id, &id};
    const Vec a{1, 2, 3}, b{5, -2, 0};
    CEState v{{a, b}, {0.5, 0.5}};
    const Vec mean = consensus(v);
    CEConfig cfg;
    cfg.rho = 0.5;
    cfg.K = 1;
    for (int k = 0; k < 60; ++k) {
      v = mann_solve(ag, v, cfg, 1).first;
      CHECK(oracle::rel_err(consensus(v), mean) <= 1e-12);
    }
    for (const auto& blk : v.blocks) CHECK(oracle::rel_err(blk, mean) <= 1e-12);
  }

  TEST_CASE("absolute Mann residual strictly falls for nonexpansive Omega") {
    std::mt19937_64 rng(15);
    LinearPair lp(rng);
    const Agent* ag[] = {&lp.f1, &lp.f2};
    CEConfig one;
    one.K = 1;
    for (double rho : {0.5, 0.9}) {
      one.rho = rho;
      for (int t : {1000, 400, 20}) {
        CEState v = CEState::replicated(oracle::random_vec(rng, 64), {0.5, 0.5});
        double prev = 1e300;
        for (int k = 0; k < 8; ++k) {
          const CEState om = ce_operator(ag, v, t);
          const double abs_res = norm2(lincomb(1.0, oracle::stack(om), -1.0, oracle::stack(v)));
          CHECK(abs_res < prev);
          prev = abs_res;
          v = mann_solve(ag, v, one, t).first;
        }
      }
    }
  }

  TEST_CASE("Mann on the linear pair reaches the solved fixed point") {
    std::mt19937_64 rng(5);
    LinearPair lp(rng);
    const Agent* ag[] = {&lp.f1, &lp.f2};
    const std::vector<double> tau{0.5, 0.5};
    const int t = 400;
    const Vec star = oracle::affine_fixed_point([&](const CEState& s) { return ce_operator(ag, s, t); }, tau, 64);
    CEConfig cfg;
    cfg.rho = 0.5;
    cfg.K = 500;
    const auto [v, diag] = mann_solve(ag, CEState::replicated(oracle::random_vec(rng, 64), tau), cfg, t);
    CHECK(oracle::rel_err(oracle::stack(v), star) <= 1e-6);
    // residual non-increasing after one burn-in step
    // once at machine precision the trace is round-off noise
    for (std::size_t k = 2; k < diag.residuals.size(); ++k)
      CHECK(diag.residuals[k] <= diag.residuals[k - 1] * (1 + 1e-10) + 1e-13);

    // equilibrium: F_i(v_i) = x* and sum tau_i u_i = 0
    const Vec x = consensus(v);
    const double tol = 1e-6 * norm2(x);
    CHECK(norm2(lincomb(1.0, lp.f1.apply(v.blocks[0], t), -1.0, x)) <= tol);
    CHECK(norm2(lincomb(1.0, lp.f2.apply(v.blocks[1], t), -1.0, x)) <= tol);
    const Vec u = lincomb(tau[0], lincomb(1.0, v.blocks[0], -1.0, x), tau[1], lincomb(1.0, v.blocks[1], -1.0, x));
    CHECK(norm2(u) <= tol);
  }

  TEST_CASE("N identical agents reproduce the single-agent fixed point") {
    std::mt19937_64 rng(6);
    const int n = 5;
    const Eigen::MatrixXd m = oracle::random_spd(rng, n, 0.1, 0.8);
    const Eigen::VectorXd c = oracle::to_eigen(oracle::random_vec(rng, n));
    const auto f = matrix_agent(m, c);
    const Eigen::VectorXd single = (Eigen::MatrixXd::Identity(n, n) - m).lu().solve(c);
    const Agent* three[] = {&f, &f, &f};
    CEConfig cfg;
    cfg.rho = 0.5;
    cfg.K = 400;
    const auto [v, diag] = mann_solve(three, CEState::replicated(Vec(n, 0.0), {1.0 / 3, 1.0 / 3, 1.0 - 2.0 / 3}), cfg, 1);
    CHECK(oracle::rel_err(consensus(v), oracle::from_eigen(single)) <= 1e-10);
    const Agent* one[] = {&f};
    const auto [w, d1] = mann_solve(one, CEState::replicated(Vec(n, 0.0), {1.0}), cfg, 1);
    CHECK(oracle::rel_err(consensus(w), oracle::from_eigen(single)) <= 1e-10);
  }

  TEST_CASE("early exit and diagnostics") {
    const auto id = scale_agent(2, 1.0);
    const Agent* ag[] = {&id, &id};
    CEConfig cfg;
    cfg.rho = 0.5;
    cfg.K = 1000;
    cfg.fixed_point_tol = 1e-8;
    const auto [v, diag] = mann_solve(ag, CEState{{{1, 0}, {0, 1}}, {0.5, 0.5}}, cfg, 1);
    CHECK(diag.early_exit);
    CHECK(diag.steps < 1000);
    CHECK(diag.residuals.back() < 1e-8);
    cfg.fixed_point_tol.reset();
    cfg.K = 7;
    const auto [w, d2] = mann_solve(ag, CEState{{{1, 0}, {0, 1}}, {0.5, 0.5}}, cfg, 1);
    CHECK(d2.steps == 7);
    CHECK(d2.residuals.size() == 7);
    CHECK_FALSE(d2.early_exit);
  }

  TEST_CASE("fixed-point residual has a floor for the zero state") {
    const CEState zero{{{0, 0}, {0, 0}}, {0.5, 0.5}};
    const CEState one{{{1e-13, 0}, {0, 0}}, {0.5, 0.5}};
    CHECK(fixed_point_residual(zero, zero) == 0.0);
    CHECK(fixed_point_residual(zero, one) == doctest::Approx(0.1));
  }

  TEST_CASE("Mann reports NaN with the step") {
    int calls = 0;
    FunctionAgent bad(1, [&calls](std::span<const double> v, int) {
      return ++calls > 4 ? Vec{NAN} : Vec(v.begin(), v.end());
    });
    const auto id = scale_agent(1, 1.0);
    const Agent* ag[] = {&id, &bad};
    CEConfig cfg;
    cfg.K = 10;
    try {
      (void)mann_solve(ag, CEState{{{1}, {2}}, {0.5, 0.5}}, cfg, 3);
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("k = 5") != std::string::npos);
    }
  }

  TEST_CASE("invalid CE config") {
    CEConfig c;
    c.rho = 1.0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c.rho = 0.5;
    c.K = 0;
    CHECK_THROWS_AS(c.validate(), ContractError);
  }

  TEST_CASE("consensus") {
    CHECK(consensus(CEState{{{4, 5}, {4, 5}}, {0.5, 0.5}}) == Vec{4, 5});
    CHECK(consensus(CEState{{{0}, {2}}, {0.5, 0.5}}) == Vec{1});
    std::mt19937_64 rng(7);
    const CEState r{{oracle::random_vec(rng, 9), oracle::random_vec(rng, 9)}, {0.3, 0.7}};
    CHECK(oracle::rel_err(consensus(weighted_average(r)), consensus(r)) <= 1e-12);
  }
}
