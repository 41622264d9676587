// Exact single-bounce path geometry.
//
// Convention: the sensing vehicle (SV) sits at the origin with its heading
// along +X. All angles are azimuths measured counterclockwise from +X,
// except departure angles, which are measured counterclockwise from the
// hidden vehicle's (HV) own heading. 3D elevations are polar angles from +Z.
#ifndef HVSENSE_GEOMETRY_HPP
#define HVSENSE_GEOMETRY_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hvsense/common.hpp"

namespace hvsense {

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double omega = 0.0;  // heading, in [0, 2*pi)

  Eigen::Vector2d point() const { return {x, y}; }
  Eigen::Vector2d heading() const {
    return {std::cos(omega), std::sin(omega)};
  }
};

struct Pose3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double omega = 0.0;   // heading azimuth, in [0, 2*pi)
  double varrho = 0.0;  // heading elevation (polar, from +Z), in [0, pi]

  Eigen::Vector3d point() const { return {x, y, z}; }
};

/// Ground-truth parameters of one single-bounce path.
struct PathTruth {
  double theta = 0.0;  // AoA azimuth at SV
  double phi = 0.0;    // AoD azimuth at HV, relative to HV heading
  double d = 0.0;      // total propagation distance, m
  double nu = 0.0;     // scatterer-to-SV leg, m
  Eigen::Vector2d scatterer = Eigen::Vector2d::Zero();
};

struct PathTruth3D {
  double theta = 0.0;     // AoA azimuth
  double vartheta = 0.0;  // AoA elevation (polar)
  double phi = 0.0;       // AoD azimuth relative to HV heading
  double psi = 0.0;       // AoD elevation relative to HV heading elevation
  double d = 0.0;
  double nu = 0.0;
  Eigen::Vector3d scatterer = Eigen::Vector3d::Zero();
};

/// One resolved path as seen by the solvers: angles plus ToA/TDoA.
struct PathObservation {
  double theta = 0.0;
  double phi = 0.0;
  double lambda = 0.0;  // ToA, s (includes the unknown clock gap)
  double rho = 0.0;     // TDoA vs. the reference path, s
  std::optional<int> cluster_tag;  // set only in decoupled-cluster mode
  std::optional<int> slot;         // transmission index for path combining
};

struct PathObservation3D {
  double theta = 0.0;
  double vartheta = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  std::optional<int> cluster_tag;
  std::optional<int> slot;
};

/// HV antenna-cluster layout: a single cluster at the pose point, or four
/// clusters on the vertices of a length x width rectangle around it.
struct ClusterLayout {
  enum class Mode { kSingle, kRectangle };
  Mode mode = Mode::kSingle;
  double length = 0.0;  // along the HV heading, m
  double width = 0.0;   // across the HV heading, m
};

struct SceneTruth {
  Pose2D hv_pose;  // single-cluster point, or rectangle centroid
  ClusterLayout layout;
  std::vector<Eigen::Vector2d> scatterers;
  std::vector<int> scatterer_cluster;  // emitting cluster per scatterer;
                                       // empty means all from cluster 0
  double gamma_clock = 0.0;            // HV-SV clock gap, s
  double velocity = 0.0;               // HV speed along heading, m/s
};

struct SceneTruth3D {
  Pose3D hv_pose;
  std::vector<Eigen::Vector3d> scatterers;
  double gamma_clock = 0.0;
};

/// Cluster vertex positions in SV coordinates, ordered 1..4 as: front-left,
/// rear-left, rear-right, front-right of the heading-aligned rectangle.
/// Single mode returns just the pose point.
std::vector<Eigen::Vector2d> cluster_positions(const Pose2D& pose,
                                               const ClusterLayout& layout);

/// Forward synthesis: path parameters of the single bounce
/// HV point -> scatterer -> SV (origin).
PathTruth path_from_scatterer(const Eigen::Vector2d& hv_point, double omega,
                              const Eigen::Vector2d& scatterer);

PathTruth3D path_from_scatterer_3d(const Eigen::Vector3d& hv_point,
                                   double omega, double varrho,
                                   const Eigen::Vector3d& scatterer);

/// Inverse position equation: the path origin implied by (theta, phi, d, nu)
/// at HV orientation omega.
Eigen::Vector2d hv_position_from_path(double theta, double phi, double omega,
                                      double d, double nu);

Eigen::Vector3d hv_position_from_path_3d(double theta, double vartheta,
                                         double phi, double psi, double omega,
                                         double varrho, double d, double nu);

/// Emits the observation set for a scene: lambda = d/c + clock gap, rho
/// referenced to the first path and computed from distances so the clock gap
/// cancels exactly. Order is deterministic: by cluster, then scatterer index.
/// Cluster tags are filled only when tag_clusters is set.
std::vector<PathObservation> synthesize_observations(const SceneTruth& scene,
                                                     bool tag_clusters = false);

std::vector<PathObservation3D> synthesize_observations_3d(
    const SceneTruth3D& scene);

/// Planar rotation mapping world offsets into the omega-aligned body frame.
Eigen::Matrix2d rotation_2d(double omega);

/// 3D rotation built from the heading azimuth/elevation pair; maps body
/// offsets into world coordinates (the transpose maps world to body).
Eigen::Matrix3d rotation_3d(double omega, double varrho);

}  // namespace hvsense

#endif  // HVSENSE_GEOMETRY_HPP
