#include "dice/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dice/errors.hpp"

namespace dice {

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec lincomb(double a, std::span<const double> x, double b, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "lincomb");
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

Vec scaled(double a, std::span<const double> x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_size(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual)
    throw DimensionError(std::string(what) + ": size mismatch (expected " + std::to_string(expected) + ", got " +
                         std::to_string(actual) + ")");
}

Vec LinearOperator::apply(std::span<const double> x) const {
  require_same_size(cols(), x.size(), "LinearOperator::apply");
  Vec out(rows());
  apply_to(x, out);
  return out;
}

Vec LinearOperator::apply_adjoint(std::span<const double> y) const {
  require_same_size(rows(), y.size(), "LinearOperator::apply_adjoint");
  Vec out(cols());
  apply_adjoint_to(y, out);
  return out;
}

void IdentityOperator::apply_to(std::span<const double> x, std::span<double> out) const {
  std::copy(x.begin(), x.end(), out.begin());
}

void IdentityOperator::apply_adjoint_to(std::span<const double> y, std::span<double> out) const {
  std::copy(y.begin(), y.end(), out.begin());
}

void DiagonalOperator::apply_to(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < diag_.size(); ++i) out[i] = diag_[i] * x[i];
}

void DiagonalOperator::apply_adjoint_to(std::span<const double> y, std::span<double> out) const { apply_to(y, out); }

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec DenseMatrix::multiply(std::span<const double> x) const {
  require_same_size(cols, x.size(), "DenseMatrix::multiply");
  Vec out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += (*this)(r, c) * x[c];
    out[r] = s;
  }
  return out;
}

Vec DenseMatrix::multiply_transposed(std::span<const double> y) const {
  require_same_size(rows, y.size(), "DenseMatrix::multiply_transposed");
  Vec out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += (*this)(r, c) * y[r];
  return out;
}

bool DenseMatrix::is_symmetric(double rel_tol) const {
  if (rows != cols) return false;
  double scale = 0.0;
  for (double v : data) scale = std::max(scale, std::abs(v));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = r + 1; c < cols; ++c)
      if (std::abs((*this)(r, c) - (*this)(c, r)) > rel_tol * scale) return false;
  return true;
}

void DenseOperator::apply_to(std::span<const double> x, std::span<double> out) const {
  Vec y = m_.multiply(x);
  std::copy(y.begin(), y.end(), out.begin());
}

void DenseOperator::apply_adjoint_to(std::span<const double> y, std::span<double> out) const {
  Vec x = m_.multiply_transposed(y);
  std::copy(x.begin(), x.end(), out.begin());
}

RegularizedNormalOperator::RegularizedNormalOperator(const LinearOperator& a, double zeta) : a_(a), zeta_(zeta) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw ContractError("RegularizedNormalOperator: zeta must be >= 0");
}

void RegularizedNormalOperator::apply_to(std::span<const double> x, std::span<double> out) const {
  Vec ax(a_.rows());
  a_.apply_to(x, ax);
  a_.apply_adjoint_to(ax, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += zeta_ * x[i];
}

void RegularizedNormalOperator::apply_adjoint_to(std::span<const double> y, std::span<double> out) const {
  apply_to(y, out);
}

DenseMatrix assemble(const LinearOperator& op) {
  DenseMatrix m(op.rows(), op.cols());
  Vec e(op.cols(), 0.0);
  Vec col(op.rows());
  for (std::size_t c = 0; c < op.cols(); ++c) {
    e[c] = 1.0;
    op.apply_to(e, col);
    e[c] = 0.0;
    for (std::size_t r = 0; r < op.rows(); ++r) m(r, c) = col[r];
  }
  return m;
}

SymmetricEigen symmetric_eigen(const DenseMatrix& m) {
  if (!m.is_symmetric(1e-10)) throw ContractError("symmetric_eigen: matrix is not symmetric");
  const auto n = static_cast<Eigen::Index>(m.rows);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(m.data.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(view);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric_eigen: decomposition failed");
  SymmetricEigen out;
  out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  out.vectors = DenseMatrix(m.rows, m.cols);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out.vectors(r, c) = solver.eigenvectors()(r, c);
  return out;
}

namespace {

void probe_symmetry(const LinearOperator& op) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vec a(op.cols()), b(op.cols());
  for (int probe = 0; probe < 3; ++probe) {
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng);
    const Vec oa = op.apply(a);
    const Vec ob = op.apply(b);
    const double lhs = dot(oa, b);
    const double rhs = dot(a, ob);
    const double scale = norm2(oa) * norm2(b) + norm2(a) * norm2(ob);
    if (std::abs(lhs - rhs) > 1e-8 * scale) throw ContractError("cg_solve: operator failed the symmetry probe");
  }
}

}  // namespace

CgResult cg_solve(const LinearOperator& op, std::span<const double> rhs, std::span<const double> x0,
                  const CgOptions& options) {
  if (op.rows() != op.cols()) throw DimensionError("cg_solve: operator must be square");
  require_same_size(op.rows(), rhs.size(), "cg_solve rhs");
  require_same_size(op.cols(), x0.size(), "cg_solve x0");
  if (options.max_iters < 1) throw ContractError("cg_solve: max_iters must be >= 1");
  if (options.check_symmetry) probe_symmetry(op);

  CgResult result;
  result.x.assign(x0.begin(), x0.end());
  Vec r = op.apply(result.x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
  double rr = dot(r, r);
  result.residuals.push_back(std::sqrt(rr));
  if (!std::isfinite(rr)) throw NumericalError("cg_solve: non-finite initial residual");

  const double stop = options.tol * norm2(rhs);
  Vec p = r;
  Vec ap(r.size());
  for (int k = 0; k < options.max_iters; ++k) {
    if (std::sqrt(rr) <= stop || rr == 0.0) break;
    op.apply_to(p, ap);
    const double pap = dot(p, ap);
    if (!std::isfinite(pap)) throw NumericalError("cg_solve: non-finite curvature at step " + std::to_string(k + 1));
    if (pap <= 0.0) throw ContractError("cg_solve: operator is not positive definite (p^T A p <= 0)");
    const double alpha = rr / pap;
    axpy(alpha, p, result.x);
    axpy(-alpha, ap, r);
    const double rr_next = dot(r, r);
    if (!std::isfinite(rr_next) || !all_finite(result.x))
      throw NumericalError("cg_solve: numerical breakdown at step " + std::to_string(k + 1));
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
    result.residuals.push_back(std::sqrt(rr));
    result.iterations = k + 1;
  }
  return result;
}

}  // namespace dice
