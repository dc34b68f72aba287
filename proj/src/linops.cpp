#include "dingo/linops.hpp"

#include <cmath>
#include <random>

namespace dingo {

void check_finite(std::span<const double> v, const std::string& what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw InvariantError(what + ": non-finite entry at index " +
                           std::to_string(i));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> v) { return dot(v, v); }

double norm(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_dim(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> v) {
  for (auto& e : v) e *= alpha;
}

Vector scaled(double alpha, std::span<const double> v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = alpha * v[i];
  return out;
}

Vector add_scaled(std::span<const double> a, double alpha,
                  std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "add_scaled");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + alpha * b[i];
  return out;
}

Vector zeros(std::size_t n) { return Vector(n, 0.0); }

void LinearMap::apply_transpose(std::span<const double> y,
                                std::span<double> x) const {
  if (symmetric()) {
    apply(y, x);
    return;
  }
  throw std::logic_error("LinearMap: apply_transpose not provided");
}

Vector LinearMap::apply(const Vector& x) const {
  Vector y(rows());
  apply(std::span<const double>(x), std::span<double>(y));
  return y;
}

Vector LinearMap::apply_transpose(const Vector& y) const {
  Vector x(cols());
  apply_transpose(std::span<const double>(y), std::span<double>(x));
  return x;
}

void FunctionMap::apply_transpose(std::span<const double> y,
                                  std::span<double> x) const {
  require_same_dim(y.size(), rows_, "FunctionMap::apply_transpose");
  if (apply_t_) {
    apply_t_(y, x);
    return;
  }
  LinearMap::apply_transpose(y, x);
}

void StackedMap::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t d = cols();
  require_same_dim(x.size(), d, "StackedMap::apply");
  require_same_dim(y.size(), 2 * d, "StackedMap::apply");
  top_.apply(x, y.subspan(0, d));
  for (std::size_t i = 0; i < d; ++i) y[d + i] = phi_ * x[i];
}

void StackedMap::apply_transpose(std::span<const double> y,
                                 std::span<double> x) const {
  const std::size_t d = cols();
  require_same_dim(y.size(), 2 * d, "StackedMap::apply_transpose");
  require_same_dim(x.size(), d, "StackedMap::apply_transpose");
  top_.apply(y.subspan(0, d), x);
  for (std::size_t i = 0; i < d; ++i) x[i] += phi_ * y[d + i];
}

void GramMap::apply(std::span<const double> x, std::span<double> y) const {
  Vector tmp(inner_.rows());
  inner_.apply(x, tmp);
  inner_.apply_transpose(tmp, y);
}

double adjoint_check(const LinearMap& a, std::size_t trials,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  Vector x(a.cols()), y(a.rows());
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& e : x) e = gauss(rng);
    for (auto& e : y) e = gauss(rng);
    const Vector ax = a.apply(x);
    const Vector aty = a.apply_transpose(y);
    const double lhs = dot(ax, y);
    const double rhs = dot(x, aty);
    const double scale = norm(ax) * norm(y) + 1e-300;
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace dingo
