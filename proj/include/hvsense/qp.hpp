// Dense primal active-set solver for small convex quadratic programs
//
//   minimize    0.5 x' H x + g' x
//   subject to  C x <= d        (row-wise)
//
// H only needs to be positive semidefinite: flat directions of the reduced
// Hessian are followed until a constraint blocks, so size-minimization
// problems whose curvature lives in a two- or three-dimensional subspace
// solve exactly. Problems here have a few dozen variables and a few hundred
// constraints at most.
#ifndef HVSENSE_QP_HPP
#define HVSENSE_QP_HPP

#include <Eigen/Dense>
#include <vector>

#include "hvsense/common.hpp"

namespace hvsense {

struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd constraints;
  Eigen::VectorXd bounds;

  int vars() const { return static_cast<int>(hessian.rows()); }
  int cons() const { return static_cast<int>(constraints.rows()); }
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // per constraint, zero when inactive
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<int> active_set;
};

/// Solves the QP from a feasible starting point. Throws ConvergenceError
/// when the iteration cap is hit or the problem is unbounded, and
/// InfeasibleError when x0 violates the constraints.
QpResult solve_qp(const QpProblem& problem, const Eigen::VectorXd& x0);

/// Max KKT violation (stationarity, primal/dual feasibility,
/// complementarity) of a candidate solution; the exactness gauge the size
/// solvers assert on.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& multipliers);

}  // namespace hvsense

#endif  // HVSENSE_QP_HPP
