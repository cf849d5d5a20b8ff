#include "moffle/regression.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

namespace {

constexpr double kJitter = 1e-10;
constexpr double kRadiusRelTol = 1e-8;
constexpr int kMaxBisect = 100;

Vector solve_shifted(const Matrix& gram, const Vector& b, double shift) {
  Matrix g = gram;
  g.diagonal().array() += shift;
  return Eigen::LDLT<Matrix>(g).solve(b);
}

}  // namespace

LossValue empirical_loss(const Matrix& X, const Vector& w, const Vector& y) {
  if (X.rows() != y.size()) throw ShapeMismatch("loss: rows vs targets");
  if (X.cols() != w.size()) throw DimMismatch("loss: cols vs weight dim");
  if (X.rows() == 0) throw InvalidArgument("loss on empty design");
  LossValue out;
  out.sum = (X * w - y).squaredNorm();
  out.mean = out.sum / X.rows();
  return out;
}

LsqResult constrained_lsq_gram(const Matrix& gram, const Vector& b, double B) {
  if (gram.rows() != gram.cols() || gram.rows() != b.size()) {
    throw ShapeMismatch("constrained lsq gram shapes");
  }
  if (B < 0.0) throw InvalidArgument("radius must be nonnegative");
  LsqResult out;
  if (B == 0.0) {
    out.w = Vector::Zero(b.size());
    out.clamped = true;
    return out;
  }
  out.w = solve_shifted(gram, b, 0.0);
  if (!out.w.allFinite()) out.w = solve_shifted(gram, b, kJitter);
  if (out.w.norm() <= B) return out;

  out.clamped = true;
  double lo = 0.0;
  double hi = 1.0;
  while (solve_shifted(gram, b, hi).norm() > B) {
    hi *= 2.0;
    if (hi > 1e18) break;
  }
  Vector w = solve_shifted(gram, b, hi);
  for (int it = 0; it < kMaxBisect; ++it) {
    ++out.iterations;
    const double mid = 0.5 * (lo + hi);
    w = solve_shifted(gram, b, mid);
    const double norm = w.norm();
    if (std::abs(norm - B) <= kRadiusRelTol * B) {
      out.lambda = mid;
      out.w = w;
      return out;
    }
    if (norm > B) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.lambda = hi;
  out.w = solve_shifted(gram, b, hi);
  return out;
}

LsqResult constrained_lsq(const Matrix& X, const Vector& y, double B) {
  if (X.rows() != y.size()) throw ShapeMismatch("constrained lsq rows vs targets");
  if (X.rows() == 0) throw InvalidArgument("constrained lsq on empty design");
  const double n = static_cast<double>(X.rows());
  const Matrix gram = X.transpose() * X / n;
  const Vector b = X.transpose() * y / n;
  return constrained_lsq_gram(gram, b, B);
}

Vector ridge_solve(const Matrix& X, const Vector& y, double lambda) {
  if (X.rows() != y.size()) throw ShapeMismatch("ridge rows vs targets");
  if (X.rows() == 0) throw InvalidArgument("ridge on empty design");
  if (lambda <= 0.0) throw InvalidArgument("ridge needs lambda > 0");
  const double n = static_cast<double>(X.rows());
  Matrix g = X.transpose() * X / n;
  g.diagonal().array() += lambda;
  return Eigen::LDLT<Matrix>(g).solve(X.transpose() * y / n);
}

ResidualOperator::ResidualOperator(const Matrix& X, double lambda) : X_(X) {
  if (lambda <= 0.0) throw InvalidArgument("residual operator needs lambda > 0");
  if (X.rows() == 0) throw InvalidArgument("residual operator on empty design");
  n_ = static_cast<double>(X.rows());
  Matrix g = X.transpose() * X / n_;
  g.diagonal().array() += lambda;
  chol_ = Eigen::LDLT<Matrix>(g);
}

Vector ResidualOperator::apply(const Vector& y) const {
  if (y.size() != X_.rows()) throw ShapeMismatch("residual operator apply size");
  return y - X_ * chol_.solve(X_.transpose() * y / n_);
}

Matrix ResidualOperator::apply_matrix(const Matrix& Y) const {
  if (Y.rows() != X_.rows()) throw ShapeMismatch("residual operator apply size");
  return Y - X_ * chol_.solve(X_.transpose() * Y / n_);
}

Matrix ResidualOperator::dense() const {
  const long n = X_.rows();
  return apply_matrix(Matrix::Identity(n, n));
}

QuadMax sym_quad_max(const Matrix& M, double radius) {
  if (M.rows() != M.cols()) throw ShapeMismatch("sym_quad_max needs a square matrix");
  if (radius < 0.0) throw InvalidArgument("radius must be nonnegative");
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const int top = static_cast<int>(sym.rows()) - 1;  // eigenvalues ascend
  const double lam = eig.eigenvalues()[top];
  QuadMax out;
  if (lam <= 0.0) {
    out.value = 0.0;
    out.argmax = Vector::Zero(M.rows());
    return out;
  }
  Vector v = eig.eigenvectors().col(top);
  int pivot = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
  }
  if (v[pivot] < 0.0) v = -v;  // deterministic sign
  out.value = radius * radius * lam;
  out.argmax = radius * v;
  return out;
}

}  // namespace moffle
