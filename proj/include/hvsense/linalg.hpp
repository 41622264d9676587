// Small dense linear-algebra helpers shared by the solvers.
#ifndef HVSENSE_LINALG_HPP
#define HVSENSE_LINALG_HPP

#include <Eigen/Dense>

namespace hvsense {

struct LeastSquaresResult {
  Eigen::VectorXd solution;
  double residual_norm = 0.0;
  int rank = 0;
};

/// Numerical rank tolerance: max(m, n) * eps * sigma_max.
double svd_rank_tolerance(int rows, int cols, double sigma_max);

/// Orthonormal basis of the left null space of A (the null space of A^T),
/// i.e. the orthogonal complement of A's column range. Returns an
/// m x (m - rank) matrix; zero columns when A spans R^m.
Eigen::MatrixXd left_null_basis(const Eigen::MatrixXd& a);

/// Minimum-norm least-squares solution of A x = b via SVD, with the
/// residual norm ||A x - b|| and the numerical rank.
LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& a,
                                       const Eigen::VectorXd& b);

/// ||N^T b|| where N spans the left null space of A. Vanishes exactly when
/// b lies in A's column range.
double null_space_discriminant(const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& b);

}  // namespace hvsense

#endif  // HVSENSE_LINALG_HPP
