#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moffle/errors.hpp"
#include "moffle/regression.hpp"
#include "moffle/rng.hpp"

using namespace moffle;

namespace {

Matrix random_design(int n, int d, RngStream& rng, double scale = 1.0) {
  Matrix X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
  }
  return X;
}

Vector random_vector(int n, RngStream& rng) {
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  return y;
}

Vector ball_point(int d, double B, RngStream& rng) {
  Vector v(d);
  for (int j = 0; j < d; ++j) v[j] = rng.normal();
  v.normalize();
  return std::pow(rng.uniform(), 1.0 / d) * B * v;
}

}  // namespace

TEST_CASE("empirical loss basics") {
  Matrix X(2, 1);
  X << 1.0, 2.0;
  Vector y(2);
  y << 1.0, 2.0;
  Vector w(1);
  w << 1.0;
  LossValue lv = empirical_loss(X, w, y);
  CHECK(lv.sum == doctest::Approx(0.0));
  CHECK(lv.mean == doctest::Approx(0.0));

  w << 0.0;
  lv = empirical_loss(X, w, y);
  CHECK(lv.sum == doctest::Approx(5.0));
  CHECK(lv.mean == doctest::Approx(2.5));

  RngStream rng(1);
  const Matrix Xr = random_design(17, 3, rng);
  const Vector yr = random_vector(17, rng);
  const Vector wr = random_vector(3, rng);
  double manual = 0.0;
  for (int i = 0; i < 17; ++i) {
    const double r = Xr.row(i).dot(wr) - yr[i];
    manual += r * r;
  }
  lv = empirical_loss(Xr, wr, yr);
  CHECK(lv.sum == doctest::Approx(manual).epsilon(1e-12));
  CHECK(lv.mean == doctest::Approx(manual / 17.0).epsilon(1e-12));

  CHECK_THROWS_AS(empirical_loss(Xr, random_vector(2, rng), yr), DimMismatch);
  CHECK_THROWS_AS(empirical_loss(Xr, wr, random_vector(5, rng)), ShapeMismatch);
}

TEST_CASE("constrained least squares reduces to the unconstrained fit inside the ball") {
  RngStream rng(2);
  const Matrix X = random_design(40, 3, rng);
  const Vector w_true = 0.1 * random_vector(3, rng);
  const Vector y = X * w_true;
  const LsqResult res = constrained_lsq(X, y, 10.0);
  CHECK_FALSE(res.clamped);
  CHECK((res.w - w_true).norm() < 1e-8);
}

TEST_CASE("repeated unit design recovers the mean target") {
  Matrix X = Matrix::Zero(6, 2);
  X.col(0).setOnes();
  const Vector y = Vector::Constant(6, 2.0);
  const LsqResult res = constrained_lsq(X, y, 1.0);
  CHECK(res.clamped);
  CHECK(res.w[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.w[1] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("no candidate in the ball beats the constrained solution") {
  RngStream rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 10 + static_cast<int>(rng.uniform_int(30));
    const int d = 2 + static_cast<int>(rng.uniform_int(3));
    const double B = 0.05 + rng.uniform();
    const Matrix X = random_design(n, d, rng);
    const Vector y = random_vector(n, rng);
    const LsqResult res = constrained_lsq(X, y, B);
    CHECK(res.w.norm() <= B + 1e-8);
    const double best = empirical_loss(X, res.w, y).mean;
    for (int t = 0; t < 2000; ++t) {
      const Vector cand = ball_point(d, B, rng);
      CHECK(empirical_loss(X, cand, y).mean >= best - 1e-9);
    }
  }
}

TEST_CASE("boundary solutions satisfy the ridge stationarity condition") {
  RngStream rng(4);
  for (int inst = 0; inst < 20; ++inst) {
    const Matrix X = random_design(30, 3, rng);
    const Vector y = 5.0 * random_vector(30, rng);
    const double B = 0.2;
    const LsqResult res = constrained_lsq(X, y, B);
    if (!res.clamped) continue;
    CHECK(res.w.norm() == doctest::Approx(B).epsilon(1e-6));
    CHECK(res.lambda > 0.0);
    // KKT: X^T (X w - y) / n + lambda w = 0.
    const Vector grad = X.transpose() * (X * res.w - y) / 30.0 + res.lambda * res.w;
    CHECK(grad.norm() < 1e-6);
  }
}

TEST_CASE("zero design maps every target to the zero fit") {
  const Matrix X = Matrix::Zero(8, 2);
  RngStream rng(5);
  const Vector y = random_vector(8, rng);
  const LsqResult res = constrained_lsq(X, y, 1.0);
  CHECK(res.w.norm() == doctest::Approx(0.0));
}

TEST_CASE("gram form matches the design form") {
  RngStream rng(6);
  for (int inst = 0; inst < 10; ++inst) {
    const int n = 25;
    const Matrix X = random_design(n, 3, rng);
    const Vector y = random_vector(n, rng);
    const double B = 0.1 + rng.uniform();
    const Matrix gram = X.transpose() * X / n;
    const Vector b = X.transpose() * y / n;
    const LsqResult a = constrained_lsq(X, y, B);
    const LsqResult g = constrained_lsq_gram(gram, b, B);
    CHECK((a.w - g.w).norm() < 1e-7);
    CHECK(a.clamped == g.clamped);
  }
}

TEST_CASE("ridge solve closed forms") {
  CHECK(ridge_solve(Matrix::Zero(4, 2), Vector::Zero(4), 0.1).norm() == 0.0);

  // Single row x = e1, y = 1: w = x y / (x x^T + lambda) on the e1 axis.
  Matrix X(1, 2);
  X << 1.0, 0.0;
  Vector y(1);
  y << 1.0;
  const Vector w = ridge_solve(X, y, 1.0);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.0).epsilon(1e-12));

  RngStream rng(7);
  const Matrix Xr = random_design(30, 4, rng);
  const Vector yr = random_vector(30, rng);
  const double lambda = 0.3;
  const Vector wr = ridge_solve(Xr, yr, lambda);
  // Normal equations: (X^T X / n + lambda I) w = X^T y / n.
  const Vector resid =
      (Xr.transpose() * Xr / 30.0 + lambda * Matrix::Identity(4, 4)) * wr -
      Xr.transpose() * yr / 30.0;
  CHECK(resid.norm() < 1e-10);

  // Heavier regularization shrinks the fit.
  CHECK(ridge_solve(Xr, yr, 3.0).norm() < wr.norm());
}

TEST_CASE("residual operator with an empty design is the identity") {
  const ResidualOperator A(Matrix::Zero(5, 2), 0.1);
  RngStream rng(8);
  const Vector y = random_vector(5, rng);
  CHECK((A.apply(y) - y).norm() < 1e-12);
  CHECK((A.dense() - Matrix::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("residual operator annihilates in-span targets as regularization vanishes") {
  RngStream rng(9);
  const Matrix X = random_design(20, 3, rng);
  const Vector w = random_vector(3, rng);
  const Vector y = X * w;
  const ResidualOperator A(X, 1e-8);
  CHECK(A.apply(y).norm() < 1e-4 * y.norm());
}

TEST_CASE("residual operator dense and batched forms agree with apply") {
  RngStream rng(10);
  const Matrix X = random_design(15, 3, rng);
  const ResidualOperator A(X, 0.2);
  const Matrix D = A.dense();
  Matrix Y(15, 4);
  for (int c = 0; c < 4; ++c) Y.col(c) = random_vector(15, rng);
  const Matrix AY = A.apply_matrix(Y);
  for (int c = 0; c < 4; ++c) {
    const Vector one = A.apply(Y.col(c));
    CHECK((AY.col(c) - one).norm() < 1e-12);
    CHECK((D * Y.col(c) - one).norm() < 1e-10);
  }
  // Definition check: A y = y - X ridge_solve(X, y, lambda).
  const Vector y0 = Y.col(0);
  CHECK((A.apply(y0) - (y0 - X * ridge_solve(X, y0, 0.2))).norm() < 1e-12);
}

TEST_CASE("residual norm equals the ridge fit loss in sum form") {
  RngStream rng(11);
  for (int inst = 0; inst < 10; ++inst) {
    const Matrix X = random_design(25, 3, rng);
    const Vector y = random_vector(25, rng);
    const double lambda = 0.05 + rng.uniform();
    const ResidualOperator A(X, lambda);
    const double lhs = A.apply(y).squaredNorm();
    const double rhs = empirical_loss(X, ridge_solve(X, y, lambda), y).sum;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("quadratic maximization over the ball") {
  Matrix M(2, 2);
  M << 2.0, 0.0, 0.0, -1.0;
  const QuadMax qm = sym_quad_max(M, std::sqrt(2.0));
  CHECK(qm.value == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(std::abs(qm.argmax[0]) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
  CHECK(qm.argmax[1] == doctest::Approx(0.0).epsilon(1e-8));

  // Negative definite: the maximum over the ball is attained at zero.
  const QuadMax neg = sym_quad_max(Matrix(-Matrix::Identity(3, 3)), 1.0);
  CHECK(neg.value == doctest::Approx(0.0));
  CHECK(neg.argmax.norm() == doctest::Approx(0.0));

  const QuadMax id = sym_quad_max(Matrix(Matrix::Identity(3, 3)), 1.0);
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-12));

  // Asymmetric input uses the symmetric part.
  Matrix asym(2, 2);
  asym << 1.0, 3.0, -1.0, 1.0;
  const QuadMax qa = sym_quad_max(asym, 1.0);
  CHECK(qa.value == doctest::Approx(2.0).epsilon(1e-10));  // eigmax of [[1,1],[1,1]]

  // The reported argmax reproduces the value.
  RngStream rng(12);
  for (int inst = 0; inst < 20; ++inst) {
    Matrix R(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) R(i, j) = rng.normal();
    }
    const double radius = 0.5 + rng.uniform();
    const QuadMax q = sym_quad_max(R, radius);
    const Matrix S = 0.5 * (R + R.transpose());
    CHECK(q.argmax.norm() <= radius + 1e-9);
    CHECK(q.value == doctest::Approx(q.argmax.dot(S * q.argmax)).epsilon(1e-9));
    // No sampled point does better.
    for (int t = 0; t < 500; ++t) {
      const Vector cand = ball_point(3, radius, rng);
      CHECK(cand.dot(S * cand) <= q.value + 1e-9);
    }
  }
}
