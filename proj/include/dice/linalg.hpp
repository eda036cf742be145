#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dice {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// a * x + b * y
Vec lincomb(double a, std::span<const double> x, double b, std::span<const double> y);
Vec scaled(double a, std::span<const double> x);

bool all_finite(std::span<const double> x);

/// Throws DimensionError naming `what` when the sizes differ.
void require_same_size(std::size_t expected, std::size_t actual, const char* what);

/// Linear map R^cols -> R^rows with an adjoint. Implementations are immutable
/// after construction and safe to apply concurrently.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;

  /// out = A x. `out` has rows() entries and is overwritten.
  virtual void apply_to(std::span<const double> x, std::span<double> out) const = 0;
  /// out = A^T y. `out` has cols() entries and is overwritten.
  virtual void apply_adjoint_to(std::span<const double> y, std::span<double> out) const = 0;

  Vec apply(std::span<const double> x) const;
  Vec apply_adjoint(std::span<const double> y) const;
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t n) : n_(n) {}
  std::size_t rows() const override { return n_; }
  std::size_t cols() const override { return n_; }
  void apply_to(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint_to(std::span<const double> y, std::span<double> out) const override;

 private:
  std::size_t n_;
};

class DiagonalOperator final : public LinearOperator {
 public:
  explicit DiagonalOperator(Vec diag) : diag_(std::move(diag)) {}
  std::size_t rows() const override { return diag_.size(); }
  std::size_t cols() const override { return diag_.size(); }
  void apply_to(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint_to(std::span<const double> y, std::span<double> out) const override;

 private:
  Vec diag_;
};

/// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Vec multiply(std::span<const double> x) const;
  Vec multiply_transposed(std::span<const double> y) const;
  bool is_symmetric(double rel_tol = 1e-12) const;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(DenseMatrix m) : m_(std::move(m)) {}
  std::size_t rows() const override { return m_.rows; }
  std::size_t cols() const override { return m_.cols; }
  void apply_to(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint_to(std::span<const double> y, std::span<double> out) const override;
  const DenseMatrix& matrix() const { return m_; }

 private:
  DenseMatrix m_;
};

/// s -> A^T A s + zeta s, the system matrix of the data-consistency prox.
/// Holds a reference to `a`; the operator must outlive this object.
class RegularizedNormalOperator final : public LinearOperator {
 public:
  RegularizedNormalOperator(const LinearOperator& a, double zeta);
  std::size_t rows() const override { return a_.cols(); }
  std::size_t cols() const override { return a_.cols(); }
  void apply_to(std::span<const double> x, std::span<double> out) const override;
  void apply_adjoint_to(std::span<const double> y, std::span<double> out) const override;

 private:
  const LinearOperator& a_;
  double zeta_;
};

/// Dense matrix of a linear operator, one column per basis vector.
DenseMatrix assemble(const LinearOperator& op);

struct SymmetricEigen {
  Vec values;           // ascending
  DenseMatrix vectors;  // columns are eigenvectors
};

SymmetricEigen symmetric_eigen(const DenseMatrix& m);

struct CgOptions {
  int max_iters = 5;
  /// Stop once ||rhs - op(x)|| <= tol * ||rhs||.
  double tol = 1e-10;
  /// Probe the operator for symmetry before iterating.
  bool check_symmetry = false;
};

struct CgResult {
  Vec x;
  /// ||rhs - op(x_k)||_2 for k = 0 (initial iterate) through the last step.
  std::vector<double> residuals;
  int iterations = 0;
};

/// Conjugate gradients on a symmetric positive definite operator, started at x0.
CgResult cg_solve(const LinearOperator& op, std::span<const double> rhs, std::span<const double> x0,
                  const CgOptions& options = {});

}  // namespace dice
