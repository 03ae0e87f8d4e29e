#include <cmath>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "vemrb/error.hpp"
#include "vemrb/jacobi.hpp"
#include "vemrb/rb_offline.hpp"

using namespace vemrb;

namespace {

// Number of eigenvalues below s: count of negative pivots of A - sI
// (Sylvester's law of inertia, LDL^T without pivoting).
int count_below(const Eigen::MatrixXd& a, double s) {
  Eigen::MatrixXd m = a - s * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const int n = static_cast<int>(a.rows());
  int neg = 0;
  for (int k = 0; k < n; ++k) {
    double d = m(k, k);
    if (d == 0.0) d = 1e-300;
    if (d < 0.0) ++neg;
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / d;
      for (int j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return neg;
}

// k-th smallest eigenvalue by bisection on the inertia count.
double bisect(const Eigen::MatrixXd& a, int k) {
  double lo = -a.cwiseAbs().rowwise().sum().maxCoeff() - 1.0;
  double hi = -lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(a, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd random_symmetric(int n, Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  return 0.5 * (a + a.transpose());
}

SpMat sparse_identity(int n) {
  SpMat s(n, n);
  s.setIdentity();
  return s;
}

}  // namespace

TEST(Jacobi, BisectionOracle) {
  Rng rng(2024);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd a = random_symmetric(5, rng);
    const SymmetricEigen e = jacobi_eigen(a);
    for (int k = 0; k < 5; ++k) {
      EXPECT_NEAR(e.values[k], bisect(a, 4 - k), 1e-10) << t << ' ' << k;
      const Eigen::VectorXd v = e.vectors.col(k);
      EXPECT_LT((a * v - e.values[k] * v).norm(), 1e-10);
      Eigen::Index idx;
      v.cwiseAbs().maxCoeff(&idx);
      EXPECT_GT(v[idx], 0.0);
    }
    EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-12);
  }
}

TEST(Jacobi, DescendingAndDiagonal) {
  Eigen::MatrixXd d = Eigen::VectorXd::LinSpaced(6, 1.0, 6.0).asDiagonal();
  const SymmetricEigen e = jacobi_eigen(d);
  for (int k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(e.values[k], 6.0 - k);
}

TEST(Jacobi, Deterministic) {
  Rng rng(5);
  const Eigen::MatrixXd a = random_symmetric(30, rng);
  const SymmetricEigen e1 = jacobi_eigen(a);
  const SymmetricEigen e2 = jacobi_eigen(a);
  EXPECT_EQ(e1.values, e2.values);
  EXPECT_EQ(e1.vectors, e2.vectors);
}

TEST(Jacobi, SweepCapRaisesNumericFailure) {
  Rng rng(6);
  const Eigen::MatrixXd a = random_symmetric(20, rng);
  try {
    jacobi_eigen(a, 1e-12, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericFailure);
  }
}

TEST(Pod, IdenticalColumnsRankOne) {
  Mat u(4, 2);
  u.col(0) << 1, 2, 3, 4;
  u.col(1) = u.col(0);
  const PODResult r = pod(u, 1, sparse_identity(4));
  EXPECT_NEAR(r.eigenvalues[1], 0.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[0], 30.0, 1e-12);
}

TEST(Pod, OrthonormalColumns) {
  Rng rng(7);
  std::normal_distribution<double> g;
  Mat a(12, 5);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 5; ++j) a(i, j) = g(rng);
  }
  const Mat q = Eigen::HouseholderQR<Mat>(a).householderQ() * Mat::Identity(12, 5);
  // two stacked blocks of 6 interior values each
  const PODResult r = pod(q, 2, sparse_identity(6));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(r.eigenvalues[k], 0.2, 1e-12);
}

TEST(Pod, CorrelationUsesBlockScalarProduct) {
  Rng rng(8);
  std::normal_distribution<double> g;
  Mat u(6, 4);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 4; ++j) u(i, j) = g(rng);
  }
  SpMat s(3, 3);
  s.insert(0, 0) = 2.0;
  s.insert(1, 1) = 3.0;
  s.insert(2, 2) = 1.0;
  s.insert(0, 1) = -1.0;
  s.insert(1, 0) = -1.0;
  Mat full = Mat::Zero(6, 6);
  full.topLeftCorner(3, 3) = Mat(s);
  full.bottomRightCorner(3, 3) = Mat(s);
  const Mat c = u.transpose() * full * u / 4.0;
  const PODResult r = pod(u, 2, s);
  EXPECT_LT((r.correlation - c).cwiseAbs().maxCoeff(), 1e-13);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.eigenvalues[k], bisect(c, 3 - k), 1e-10);
}
