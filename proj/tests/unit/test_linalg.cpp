#include <algorithm>
#include <doctest.h>

#include <random>

#include "dice/errors.hpp"
#include "dice/geometry.hpp"
#include "dice/linalg.hpp"
#include "oracles.hpp"

using namespace dice;

TEST_SUITE("linalg") {
  TEST_CASE("dot by hand") {
    CHECK(dot(Vec{1, 2, 3}, Vec{4, 5, 6}) == 32.0);
    CHECK(dot(Vec{1.5, -2, 7}, Vec{0, 0, 0}) == 0.0);
  }

  TEST_CASE("dot matches a separate accumulation loop") {
    std::mt19937_64 rng(11);
    const Vec a = oracle::random_vec(rng, 64), b = oracle::random_vec(rng, 64);
    long double acc = 0.0L;
    for (std::size_t i = 64; i-- > 0;) acc += static_cast<long double>(a[i]) * b[i];
    CHECK(dot(a, b) == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
  }

  TEST_CASE("dot length mismatch") { CHECK_THROWS_AS(dot(Vec{1, 2}, Vec{1}), DimensionError); }

  TEST_CASE("cg: identity converges in one step") {
    IdentityOperator id(5);
    const Vec b{1, -2, 3, 0.5, 9};
    CgOptions o;
    o.max_iters = 1;
    const auto r = cg_solve(id, b, Vec(5, 0.0), o);
    CHECK(r.x == b);
  }

  TEST_CASE("cg: diagonal system") {
    DiagonalOperator d({1, 2, 4});
    CgOptions o;
    o.max_iters = 3;
    const auto r = cg_solve(d, Vec{1, 2, 4}, Vec(3, 0.0), o);
    for (double v : r.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("cg: random SPD 8x8 against a direct solve") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = oracle::random_spd(rng, 8, 0.5, 10.0);
      const Vec b = oracle::random_vec(rng, 8);
      const Vec direct = oracle::from_eigen(m.partialPivLu().solve(oracle::to_eigen(b)));
      DenseOperator op(oracle::from_eigen(m));
      CgOptions o;
      o.max_iters = 8;
      o.tol = 0.0;
      const auto r = cg_solve(op, b, Vec(8, 0.0), o);
      CHECK(oracle::rel_err(r.x, direct) <= 1e-8);
    }
  }

  TEST_CASE("cg: residual trace is non-increasing") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = oracle::random_spd(rng, 8, 0.5, 10.0);
      DenseOperator op(oracle::from_eigen(m));
      const Vec b = oracle::random_vec(rng, 8);
      CgOptions o;
      o.max_iters = 8;
      o.tol = 0.0;
      const auto r = cg_solve(op, b, oracle::random_vec(rng, 8), o);
      CHECK(r.residuals.size() == static_cast<std::size_t>(r.iterations + 1));
      for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1] + 1e-10);
    }
  }

  TEST_CASE("cg: energy norm of the error is non-increasing") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = oracle::random_spd(rng, 8, 0.5, 10.0);
      DenseOperator op(oracle::from_eigen(m));
      const Vec b = oracle::random_vec(rng, 8);
      const Vec x0 = oracle::random_vec(rng, 8);
      const Eigen::VectorXd xs = m.ldlt().solve(oracle::to_eigen(b));
      double prev = 1e300;
      for (int k = 0; k <= 8; ++k) {
        CgOptions o;
        o.max_iters = std::max(k, 1);
        o.tol = 0.0;
        const Eigen::VectorXd e = oracle::to_eigen(k == 0 ? x0 : cg_solve(op, b, x0, o).x) - xs;
        const double energy = e.dot(m * e);
        CHECK(energy <= prev * (1 + 1e-10) + 1e-20);
        prev = energy;
      }
    }
  }

  TEST_CASE("cg: warm start at the solution does not move") {
    DiagonalOperator d({2, 3});
    const auto r = cg_solve(d, Vec{2, 3}, Vec{1, 1});
    CHECK(r.x == Vec{1, 1});
    CHECK(r.iterations == 0);
  }

  TEST_CASE("cg: NaN input is a numerical error") {
    DiagonalOperator d({1, 1});
    CHECK_THROWS_AS(cg_solve(d, Vec{1, NAN}, Vec{0, 0}), NumericalError);
  }

  TEST_CASE("cg: symmetry probe rejects a non-symmetric operator") {
    DenseMatrix m(2, 2);
    m(0, 0) = 2;
    m(0, 1) = 1;
    m(1, 0) = 0;
    m(1, 1) = 2;
    DenseOperator op(m);
    CgOptions o;
    o.check_symmetry = true;
    CHECK_THROWS_AS(cg_solve(op, Vec{1, 1}, Vec{0, 0}, o), ContractError);
  }

  TEST_CASE("cg: P = n with tol = 0 solves a 32-dimensional system") {
    std::mt19937_64 rng(17);
    const auto m = oracle::random_spd(rng, 32, 1.0, 4.0);
    const Vec b = oracle::random_vec(rng, 32);
    CgOptions o;
    o.max_iters = 32;
    o.tol = 0.0;
    const auto r = cg_solve(DenseOperator(oracle::from_eigen(m)), b, Vec(32, 0.0), o);
    CHECK(oracle::rel_err(r.x, oracle::from_eigen(m.llt().solve(oracle::to_eigen(b)))) <= 1e-8);
  }

  TEST_CASE("adjoint identity for every shipped operator") {
    std::mt19937_64 rng(23);
    const auto g = build_geometry(16, {PatternKind::uniform, 12, 0});
    ParallelBeamProjector proj(g);
    DenseMatrix dm(5, 7);
    for (auto& v : dm.data) v = std::normal_distribution<double>()(rng);
    DenseOperator dense(dm);
    DiagonalOperator diag(oracle::random_vec(rng, 9));
    IdentityOperator id(9);
    RegularizedNormalOperator normal(proj, 0.7);
    const LinearOperator* ops[] = {&proj, &dense, &diag, &id, &normal};
    for (const LinearOperator* op : ops) {
      for (int probe = 0; probe < 20; ++probe) {
        const Vec x = oracle::random_vec(rng, op->cols());
        const Vec y = oracle::random_vec(rng, op->rows());
        const double lhs = dot(op->apply(x), y);
        const double rhs = dot(x, op->apply_adjoint(y));
        CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(std::abs(lhs), 1e-12));
      }
    }
  }

  TEST_CASE("operators are linear") {
    std::mt19937_64 rng(29);
    const auto g = build_geometry(16, {PatternKind::uniform, 12, 0});
    ParallelBeamProjector proj(g);
    const Vec x1 = oracle::random_vec(rng, proj.cols()), x2 = oracle::random_vec(rng, proj.cols());
    const Vec lhs = proj.apply(lincomb(2.5, x1, -0.75, x2));
    const Vec rhs = lincomb(2.5, proj.apply(x1), -0.75, proj.apply(x2));
    CHECK(oracle::rel_err(lhs, rhs) <= 1e-10);
  }

  TEST_CASE("repeat applications are deterministic") {
    std::mt19937_64 rng(31);
    const auto m = oracle::random_spd(rng, 6, 1, 2);
    DenseOperator op(oracle::from_eigen(m));
    const Vec b = oracle::random_vec(rng, 6);
    CHECK(cg_solve(op, b, Vec(6, 0.0)).x == cg_solve(op, b, Vec(6, 0.0)).x);
  }

  TEST_CASE("assemble reproduces a dense matrix") {
    DenseMatrix m(3, 2);
    m.data = {1, 2, 3, 4, 5, 6};
    CHECK(assemble(DenseOperator(m)).data == m.data);
  }

  TEST_CASE("symmetric_eigen against Eigen") {
    std::mt19937_64 rng(37);
    const auto m = oracle::random_spd(rng, 6, 0.1, 3.0);
    const auto ours = symmetric_eigen(oracle::from_eigen(m));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m);
    for (int i = 0; i < 6; ++i) CHECK(ours.values[i] == doctest::Approx(ref.eigenvalues()(i)).epsilon(1e-12));
  }
}
