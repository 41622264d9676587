// Single-cluster HV sensing: linear-system assembly from TDoA/AoA/AoD
// observations, orientation recovery via the null-space discriminant, and
// least-squares distance estimation. 2D and 3D variants.
#ifndef HVSENSE_SOLVER_SINGLE_HPP
#define HVSENSE_SOLVER_SINGLE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hvsense/geometry.hpp"
#include "hvsense/linalg.hpp"

namespace hvsense {

/// The assembled system A(omega) z = B(omega) with z = (nu_1..nu_P, d_1).
/// A is 2(P-1) x (P+1): the cosine row block stacked on the sine block.
struct LinearSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double omega = 0.0;
  int path_count = 0;
};

struct SensingEstimate {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  std::optional<double> z;       // 3D only
  double omega = 0.0;
  std::optional<double> varrho;  // 3D only
  double d1 = 0.0;
  std::vector<double> nu;
  double residual = 0.0;
  bool feasible = false;
  int paths_used = 0;

  // Decoupled-cluster extras.
  std::vector<Eigen::Vector2d> cluster_points;
  std::optional<double> length;
  std::optional<double> width;

  // Sequential-combining extra.
  std::optional<double> velocity;
};

/// Validates that obs[0] is the unique rho = 0 reference path.
void require_reference(const std::vector<PathObservation>& obs);

LinearSystem assemble(const std::vector<PathObservation>& obs, double omega);

/// 3D variant of the system: 3(P-1) x (P+1), blocks x/y/z.
LinearSystem assemble_3d(const std::vector<PathObservation3D>& obs,
                         double omega, double varrho);

/// Norm of B projected onto the left null space of A; zero at the true
/// orientation of a noiseless scene. Requires P >= 4.
double discriminant(const std::vector<PathObservation>& obs, double omega);

/// Orientation candidates from a coarse-grid scan of a periodic discriminant
/// followed by golden-section refinement, sorted by refined value.
struct OrientationCandidate {
  double omega = 0.0;
  double value = 0.0;
};
std::vector<OrientationCandidate> scan_orientation(
    const std::function<double(double)>& disc, double grid_step,
    int refine_count = 24);

/// Global orientation search; returns the discriminant minimizer in [0, 2pi).
double search_orientation(const std::vector<PathObservation>& obs,
                          double grid_step = deg2rad(0.5));

/// nu columns whose coefficients vanish at this omega: straight-through
/// paths (the LoS path in particular) whose reflection distance cannot be
/// identified because every nu yields the same origin.
std::vector<int> unidentifiable_nu_columns(const Eigen::MatrixXd& a,
                                           int path_count);

struct LsSolution {
  Eigen::VectorXd z;
  double residual = 0.0;
};

/// Least-squares solve of the assembled system; throws RankDeficiencyError
/// when A loses column rank (degenerate geometry).
LsSolution solve_ls(const LinearSystem& sys);

/// Full 2D pipeline: orientation search, LS solve, per-path origins averaged
/// into the position estimate. Requires P >= 4.
SensingEstimate estimate_2d(const std::vector<PathObservation>& obs,
                            double grid_step = deg2rad(0.5));

/// Full 3D pipeline with the (omega, varrho) grid search. Requires P >= 3.
SensingEstimate estimate_3d(const std::vector<PathObservation3D>& obs,
                            double grid_step = deg2rad(2.0));

}  // namespace hvsense

#endif  // HVSENSE_SOLVER_SINGLE_HPP
