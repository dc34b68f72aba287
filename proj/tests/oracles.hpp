// Dense reference computations the unit and acceptance tests check the
// matrix-free library against. Everything here goes through Eigen
// factorizations, independent of the iterative solve paths under test.
#pragma once

#include <Eigen/Dense>
#include <random>

#include "dingo/linops.hpp"

namespace oracles {

using Matrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;

inline EVector to_eigen(const dingo::Vector& v) {
  return Eigen::Map<const EVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline dingo::Vector to_std(const EVector& v) {
  return dingo::Vector(v.data(), v.data() + v.size());
}

/// Materialise a LinearMap column by column.
inline Matrix to_dense(const dingo::LinearMap& a) {
  Matrix out(a.rows(), a.cols());
  dingo::Vector e(a.cols(), 0.0), col(a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    e[j] = 1.0;
    a.apply(e, col);
    out.col(static_cast<Eigen::Index>(j)) = to_eigen(col);
    e[j] = 0.0;
  }
  return out;
}

/// Dense symmetric operator for driving the solvers in tests.
class DenseMap final : public dingo::LinearMap {
 public:
  explicit DenseMap(Matrix m, bool symmetric = true)
      : m_(std::move(m)), symmetric_(symmetric) {}

  std::size_t rows() const override { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const override { return static_cast<std::size_t>(m_.cols()); }
  bool symmetric() const override { return symmetric_; }

  void apply(std::span<const double> x, std::span<double> y) const override {
    Eigen::Map<const EVector> xe(x.data(), m_.cols());
    Eigen::Map<Eigen::VectorXd> ye(y.data(), m_.rows());
    ye = m_ * xe;
  }
  void apply_transpose(std::span<const double> y,
                       std::span<double> x) const override {
    Eigen::Map<const EVector> ye(y.data(), m_.rows());
    Eigen::Map<Eigen::VectorXd> xe(x.data(), m_.cols());
    xe = m_.transpose() * ye;
  }

  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
  bool symmetric_;
};

inline Matrix random_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng) {
  const Matrix g = random_gaussian(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline Matrix random_spd(int n, std::mt19937_64& rng) {
  const Matrix g = random_gaussian(n, n, rng);
  return g.transpose() * g + Matrix::Identity(n, n);
}

/// Symmetric with exactly `rank` nonzero eigenvalues.
inline Matrix random_symmetric_rank(int n, int rank, std::mt19937_64& rng) {
  const Matrix g = random_gaussian(n, n, rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  EVector d = EVector::Zero(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < rank; ++i) {
    double v = gauss(rng);
    while (std::abs(v) < 0.3) v = gauss(rng);  // keep it well separated from 0
    d(i) = v;
  }
  return q * d.asDiagonal() * q.transpose();
}

/// Symmetric with a prescribed spectrum, random eigenbasis.
inline Matrix symmetric_with_spectrum(const EVector& spectrum,
                                      std::mt19937_64& rng) {
  const int n = static_cast<int>(spectrum.size());
  const Matrix g = random_gaussian(n, n, rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  return q * spectrum.asDiagonal() * q.transpose();
}

inline dingo::Vector random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  dingo::Vector v(n);
  for (auto& e : v) e = gauss(rng);
  return v;
}

/// Moore-Penrose solve via SVD with rank cutoff.
inline dingo::Vector pinv_solve(const Matrix& a, const dingo::Vector& b) {
  const Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? s(0) * 1e-12 : 0.0;
  EVector inv = EVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  const EVector x = svd.matrixV() * inv.asDiagonal() *
                    (svd.matrixU().transpose() * to_eigen(b));
  return to_std(x);
}

inline dingo::Vector dense_solve(const Matrix& a, const dingo::Vector& b) {
  return to_std(a.fullPivLu().solve(to_eigen(b)));
}

inline dingo::Vector cholesky_solve(const Matrix& a, const dingo::Vector& b) {
  return to_std(a.llt().solve(to_eigen(b)));
}

inline double smallest_singular_value(const Matrix& a) {
  const Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().tail(1)(0);
}

/// Kahan compensated summation inner product.
inline double kahan_dot(const dingo::Vector& a, const dingo::Vector& b) {
  double sum = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double term = a[i] * b[i] - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

struct KktSolution {
  dingo::Vector p;
  double lambda = 0.0;
};

/// Equality-constrained damped least squares
///   min 0.5 |H p + g|^2 + 0.5 phi^2 |p|^2   s.t.  <p, hg> = -theta |g|^2
/// solved through its dense KKT system.
inline KktSolution constrained_lsq(const Matrix& h, double phi,
                                   const dingo::Vector& g,
                                   const dingo::Vector& hg, double theta) {
  const int n = static_cast<int>(h.rows());
  Matrix kkt = Matrix::Zero(n + 1, n + 1);
  kkt.topLeftCorner(n, n) =
      h.transpose() * h + phi * phi * Matrix::Identity(n, n);
  const EVector hge = to_eigen(hg);
  kkt.topRightCorner(n, 1) = hge;
  kkt.bottomLeftCorner(1, n) = hge.transpose();
  EVector rhs(n + 1);
  rhs.head(n) = -(h.transpose() * to_eigen(g));
  rhs(n) = -theta * to_eigen(g).squaredNorm();
  const EVector sol = kkt.fullPivLu().solve(rhs);
  KktSolution out;
  out.p = dingo::Vector(sol.data(), sol.data() + n);
  out.lambda = sol(n);
  return out;
}

/// Central finite difference of a scalar function.
template <typename F>
dingo::Vector fd_gradient(const F& f, const dingo::Vector& w, double h) {
  dingo::Vector g(w.size());
  dingo::Vector probe = w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    probe[k] = w[k] + h;
    const double up = f(probe);
    probe[k] = w[k] - h;
    const double down = f(probe);
    probe[k] = w[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracles
