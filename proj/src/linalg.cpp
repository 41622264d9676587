#include "hvsense/linalg.hpp"

#include <algorithm>
#include <limits>

namespace hvsense {

double svd_rank_tolerance(int rows, int cols, double sigma_max) {
  return std::max(rows, cols) * std::numeric_limits<double>::epsilon() *
         sigma_max;
}

Eigen::MatrixXd left_null_basis(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double tol =
      svd_rank_tolerance(static_cast<int>(a.rows()),
                         static_cast<int>(a.cols()), sigma_max);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return svd.matrixU().rightCols(a.rows() - rank);
}

LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& a,
                                       const Eigen::VectorXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double tol =
      svd_rank_tolerance(static_cast<int>(a.rows()),
                         static_cast<int>(a.cols()), sigma_max);

  LeastSquaresResult out;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) {
      inv_sv(i) = 1.0 / sv(i);
      ++out.rank;
    }
  }
  out.solution = svd.matrixV() * inv_sv.asDiagonal() *
                 (svd.matrixU().transpose() * b);
  out.residual_norm = (a * out.solution - b).norm();
  return out;
}

double null_space_discriminant(const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& b) {
  // ||N^T b|| equals the least-squares residual ||b - P_range(A) b||; the
  // pivoted-QR route avoids forming the null basis on the search hot path.
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  return (a * x - b).norm();
}

}  // namespace hvsense
