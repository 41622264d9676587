// Decoupled-cluster sensing: the single-cluster system extended with
// length/width columns so all four cluster positions, the orientation, and
// the rectangle size are recovered jointly.
#ifndef HVSENSE_SOLVER_MULTICLUSTER_HPP
#define HVSENSE_SOLVER_MULTICLUSTER_HPP

#include <array>
#include <vector>

#include "hvsense/solver_single.hpp"

namespace hvsense {

/// Observations grouped by originating cluster. Cluster 1 must be non-empty
/// and hold the rho = 0 reference as its first path.
struct GroupedObservations {
  std::array<std::vector<PathObservation>, 4> clusters;

  int total() const {
    int n = 0;
    for (const auto& c : clusters) n += static_cast<int>(c.size());
    return n;
  }

  /// Flattened in cluster order (the row ordering of the extended system).
  std::vector<PathObservation> flattened() const;
};

/// Builds groups from tagged observations; throws MissingTagError when a
/// path lacks its cluster tag.
GroupedObservations group_by_cluster(const std::vector<PathObservation>& obs);

/// A_hat = [A | L(omega) | W(omega)], 2(P-1) x (P+3).
struct ExtendedSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double omega = 0.0;
  int path_count = 0;
};

ExtendedSystem assemble_extended(const GroupedObservations& grouped,
                                 double omega);

double discriminant_extended(const GroupedObservations& grouped, double omega);

/// Joint estimate of the four cluster vertices, centroid, orientation, and
/// rectangle size. Requires P >= 6.
SensingEstimate estimate_decoupled(const GroupedObservations& grouped,
                                   double grid_step = deg2rad(0.5));

}  // namespace hvsense

#endif  // HVSENSE_SOLVER_MULTICLUSTER_HPP
