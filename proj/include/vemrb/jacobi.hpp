#pragma once

#include <Eigen/Core>

namespace vemrb {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, sign-fixed
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Iterates until the off-diagonal Frobenius norm drops below
/// tol * max(1, ||A||_F); throws numeric-failure after max_sweeps. Each
/// eigenvector's largest-magnitude entry is made positive; eigenvalues closer
/// than 1e-14 are ordered by the index of that entry.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-12, int max_sweeps = 100);

}  // namespace vemrb
