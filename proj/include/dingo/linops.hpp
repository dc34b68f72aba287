#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dingo {

/// Dense column vector of 64-bit reals. All library arithmetic keeps a fixed
/// summation order so that repeated runs are bit-identical.
using Vector = std::vector<double>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numeric invariant the library relies on is broken
/// (non-finite values at a module boundary, violated solver post-conditions).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_finite(std::span<const double> v, const std::string& what);

inline void require_same_dim(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": dimension mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
}

/// Inner product, fixed index order.
double dot(std::span<const double> a, std::span<const double> b);

double norm(std::span<const double> v);
double norm_sq(std::span<const double> v);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// v *= alpha
void scale(double alpha, std::span<double> v);

Vector scaled(double alpha, std::span<const double> v);

/// out = a + alpha * b
Vector add_scaled(std::span<const double> a, double alpha,
                  std::span<const double> b);

Vector zeros(std::size_t n);

/// Abstract matrix-free linear operator. Implementations must be safe to call
/// concurrently; any captured state is treated as read-only.
class LinearMap {
 public:
  virtual ~LinearMap() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual bool symmetric() const { return false; }

  /// y = A x, with x of length cols() and y of length rows().
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;

  /// x = A^T y. Defaults to apply() for symmetric maps.
  virtual void apply_transpose(std::span<const double> y,
                               std::span<double> x) const;

  Vector apply(const Vector& x) const;
  Vector apply_transpose(const Vector& y) const;
};

/// Operator from plain functions; used for ad-hoc maps and tests.
class FunctionMap final : public LinearMap {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;

  FunctionMap(std::size_t rows, std::size_t cols, Fn apply, Fn apply_t = {},
              bool symmetric = false)
      : rows_(rows),
        cols_(cols),
        apply_(std::move(apply)),
        apply_t_(std::move(apply_t)),
        symmetric_(symmetric) {
    if (symmetric_ && rows_ != cols_)
      throw DimensionError("FunctionMap: symmetric map must be square");
  }

  std::size_t rows() const override { return rows_; }
  std::size_t cols() const override { return cols_; }
  bool symmetric() const override { return symmetric_; }

  void apply(std::span<const double> x, std::span<double> y) const override {
    require_same_dim(x.size(), cols_, "FunctionMap::apply");
    apply_(x, y);
  }

  void apply_transpose(std::span<const double> y,
                       std::span<double> x) const override;

 private:
  std::size_t rows_, cols_;
  Fn apply_, apply_t_;
  bool symmetric_;
};

/// The damped stack [A; phi*I] over a square symmetric operator A. Full column
/// rank for any phi > 0: its smallest singular value is at least phi.
class StackedMap final : public LinearMap {
 public:
  StackedMap(const LinearMap& top, double phi) : top_(top), phi_(phi) {
    if (top.rows() != top.cols() || !top.symmetric())
      throw DimensionError("StackedMap: top block must be square symmetric");
    if (!(phi > 0.0))
      throw std::invalid_argument("StackedMap: phi must be positive");
  }

  std::size_t rows() const override { return 2 * top_.cols(); }
  std::size_t cols() const override { return top_.cols(); }
  double phi() const { return phi_; }
  const LinearMap& top() const { return top_; }

  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_transpose(std::span<const double> y,
                       std::span<double> x) const override;

 private:
  const LinearMap& top_;
  double phi_;
};

/// A^T A of an arbitrary operator, exposed as a symmetric map. For a
/// StackedMap this is the always-positive-definite A^T A = H^2 + phi^2 I.
class GramMap final : public LinearMap {
 public:
  explicit GramMap(const LinearMap& inner) : inner_(inner) {}

  std::size_t rows() const override { return inner_.cols(); }
  std::size_t cols() const override { return inner_.cols(); }
  bool symmetric() const override { return true; }

  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const LinearMap& inner_;
};

/// Max relative adjoint discrepancy |<Ax,y> - <x,A^T y>| / (|Ax||y| + tiny)
/// over random probes; validates a LinearMap implementation.
double adjoint_check(const LinearMap& a, std::size_t trials,
                     std::uint64_t seed);

}  // namespace dingo
