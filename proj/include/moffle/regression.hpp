#pragma once

#include <Eigen/Cholesky>

#include "moffle/common.hpp"

namespace moffle {

struct LossValue {
  double sum = 0.0;
  double mean = 0.0;
};

// Squared loss of w on design X against targets y, in both normalizations.
// All solvers and comparisons in this codebase use the mean form.
LossValue empirical_loss(const Matrix& X, const Vector& w, const Vector& y);

struct LsqResult {
  Vector w;
  double lambda = 0.0;  // KKT multiplier when the ball constraint is active
  int iterations = 0;
  bool clamped = false;
};

// argmin_{||w|| <= B} (1/n) ||X w - y||^2. Interior solutions come from the
// normal equations (jittered only if the plain solve degenerates); boundary
// solutions bisect lambda on the ridge path until the radius matches B to
// 1e-8 relative.
LsqResult constrained_lsq(const Matrix& X, const Vector& y, double B);

// Same, from precomputed gram = X^T X / n and b = X^T y / n.
LsqResult constrained_lsq_gram(const Matrix& gram, const Vector& b, double B);

// (X^T X / n + lambda I)^{-1} X^T y / n.
Vector ridge_solve(const Matrix& X, const Vector& y, double lambda);

// y |-> y - X (X^T X/n + lambda I)^{-1} X^T y / n, applied without forming the
// n x n matrix. dense() materializes it for small-scale checks.
class ResidualOperator {
 public:
  ResidualOperator(const Matrix& X, double lambda);
  Vector apply(const Vector& y) const;
  Matrix apply_matrix(const Matrix& Y) const;
  Matrix dense() const;

 private:
  Matrix X_;
  Eigen::LDLT<Matrix> chol_;
  double n_;
};

struct QuadMax {
  double value = 0.0;
  Vector argmax;
};

// max_{||theta|| <= radius} theta^T M theta for symmetric part of M; the
// maximizer is radius times the top eigenvector when the top eigenvalue is
// positive, else zero.
QuadMax sym_quad_max(const Matrix& M, double radius);

}  // namespace moffle
