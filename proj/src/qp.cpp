#include "hvsense/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hvsense {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kStepTol = 1e-12;
constexpr double kMultiplierTol = 1e-10;

struct EqpStep {
  Eigen::VectorXd p;
  bool unbounded_direction = false;  // zero curvature with descent
};

// Equality-constrained subproblem: minimize 0.5 p'Hp + grad'p with rows of
// C_W p = 0, via the null-space method. Flat directions with a descent
// component are returned as rays.
EqpStep eqp_step(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& grad,
                 const Eigen::MatrixXd& c_active) {
  const int n = static_cast<int>(hessian.rows());
  const int k = static_cast<int>(c_active.rows());
  EqpStep step;
  if (k >= n) {
    step.p = Eigen::VectorXd::Zero(n);
    return step;
  }

  Eigen::MatrixXd null_basis;
  if (k == 0) {
    null_basis = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c_active.transpose());
    null_basis =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, n).rightCols(n - k);
  }

  const Eigen::MatrixXd reduced_h =
      null_basis.transpose() * hessian * null_basis;
  const Eigen::VectorXd reduced_g = null_basis.transpose() * grad;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced_h);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lambda_max = std::max(lambda.maxCoeff(), 0.0);
  const double curve_tol =
      std::max(1e-12, (n - k) * std::numeric_limits<double>::epsilon() *
                          lambda_max * 16.0);

  // Descent along zero-curvature directions is unbounded until blocked.
  Eigen::VectorXd flat_descent = Eigen::VectorXd::Zero(n - k);
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= curve_tol) {
      const double comp = eig.eigenvectors().col(i).dot(reduced_g);
      flat_descent -= comp * eig.eigenvectors().col(i);
    }
  }
  if (flat_descent.norm() > 1e-10 * (1.0 + reduced_g.norm())) {
    step.p = null_basis * flat_descent;
    step.p.normalize();
    step.unbounded_direction = true;
    return step;
  }

  Eigen::VectorXd reduced_p = Eigen::VectorXd::Zero(n - k);
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > curve_tol) {
      const double comp = eig.eigenvectors().col(i).dot(reduced_g);
      reduced_p -= (comp / lambda(i)) * eig.eigenvectors().col(i);
    }
  }
  step.p = null_basis * reduced_p;
  return step;
}

Eigen::VectorXd active_multipliers(const Eigen::MatrixXd& c_active,
                                   const Eigen::VectorXd& grad) {
  // Least-squares solve of C_W' mult = -grad.
  return c_active.transpose().colPivHouseholderQr().solve(-grad);
}

}  // namespace

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& multipliers) {
  const Eigen::VectorXd stationarity = problem.hessian * x +
                                       problem.gradient +
                                       problem.constraints.transpose() *
                                           multipliers;
  double residual = stationarity.lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd slack = problem.constraints * x - problem.bounds;
  for (int i = 0; i < problem.cons(); ++i) {
    residual = std::max(residual, slack(i));                  // primal
    residual = std::max(residual, -multipliers(i));           // dual
    residual = std::max(residual,
                        std::abs(multipliers(i) * slack(i)));  // compl.
  }
  return residual;
}

QpResult solve_qp(const QpProblem& problem, const Eigen::VectorXd& x0) {
  const int n = problem.vars();
  const int m = problem.cons();
  const Eigen::VectorXd violation =
      problem.constraints * x0 - problem.bounds;
  if (m > 0 && violation.maxCoeff() > kFeasTol * 100.0) {
    throw InfeasibleError("QP start point is infeasible");
  }

  Eigen::VectorXd x = x0;
  std::vector<int> active;
  const int max_iter = 100 + 20 * m;

  QpResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd c_active(active.size(), n);
    for (size_t i = 0; i < active.size(); ++i) {
      c_active.row(static_cast<Eigen::Index>(i)) =
          problem.constraints.row(active[i]);
    }

    const Eigen::VectorXd grad = problem.hessian * x + problem.gradient;
    const EqpStep step = eqp_step(problem.hessian, grad, c_active);

    if (!step.unbounded_direction &&
        step.p.norm() <= kStepTol * (1.0 + x.norm())) {
      // Stationary on the working set; check the multipliers.
      Eigen::VectorXd mult_active;
      if (!active.empty()) mult_active = active_multipliers(c_active, grad);
      int worst = -1;
      double worst_value = -kMultiplierTol;
      for (size_t i = 0; i < active.size(); ++i) {
        if (mult_active(static_cast<Eigen::Index>(i)) < worst_value) {
          worst_value = mult_active(static_cast<Eigen::Index>(i));
          worst = static_cast<int>(i);
        }
      }
      if (worst < 0) {
        result.x = x;
        result.multipliers = Eigen::VectorXd::Zero(m);
        for (size_t i = 0; i < active.size(); ++i) {
          result.multipliers(active[i]) =
              std::max(0.0, mult_active(static_cast<Eigen::Index>(i)));
        }
        result.objective =
            0.5 * x.dot(problem.hessian * x) + problem.gradient.dot(x);
        result.kkt_residual = kkt_residual(problem, x, result.multipliers);
        result.iterations = iter;
        result.active_set = active;
        return result;
      }
      active.erase(active.begin() + worst);
      continue;
    }

    // Largest feasible step along p.
    double alpha = step.unbounded_direction ?
        std::numeric_limits<double>::infinity() : 1.0;
    int blocking = -1;
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) {
        continue;
      }
      const double rate = problem.constraints.row(i).dot(step.p);
      if (rate <= 1e-13) continue;
      const double room = problem.bounds(i) - problem.constraints.row(i) * x;
      const double limit = std::max(room, 0.0) / rate;
      if (limit < alpha) {
        alpha = limit;
        blocking = i;
      }
    }
    if (step.unbounded_direction && blocking < 0) {
      throw ConvergenceError("QP is unbounded along a flat direction");
    }
    x += alpha * step.p;
    if (blocking >= 0) active.push_back(blocking);
  }
  throw ConvergenceError("QP active-set iteration cap exceeded");
}

}  // namespace hvsense
