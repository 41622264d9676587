#include "hvsense/geometry.hpp"

#include <cmath>

namespace hvsense {

namespace {
constexpr double kDegenerateDistance = 1e-9;  // m

double azimuth(const Eigen::Vector2d& v) {
  return normalize_angle(std::atan2(v.y(), v.x()));
}

double azimuth(const Eigen::Vector3d& v) {
  return normalize_angle(std::atan2(v.y(), v.x()));
}

double polar(const Eigen::Vector3d& v) {
  const double n = v.norm();
  return n > 0.0 ? std::acos(std::clamp(v.z() / n, -1.0, 1.0)) : 0.0;
}
}  // namespace

std::vector<Eigen::Vector2d> cluster_positions(const Pose2D& pose,
                                               const ClusterLayout& layout) {
  if (layout.mode == ClusterLayout::Mode::kSingle) {
    return {pose.point()};
  }
  const Eigen::Vector2d h = pose.heading();
  const Eigen::Vector2d n{-h.y(), h.x()};  // left normal
  const Eigen::Vector2d front_left =
      pose.point() + 0.5 * layout.length * h + 0.5 * layout.width * n;
  return {
      front_left,
      front_left - layout.length * h,
      front_left - layout.length * h - layout.width * n,
      front_left - layout.width * n,
  };
}

PathTruth path_from_scatterer(const Eigen::Vector2d& hv_point, double omega,
                              const Eigen::Vector2d& scatterer) {
  const double nu = scatterer.norm();
  const Eigen::Vector2d leg = scatterer - hv_point;
  const double hv_leg = leg.norm();
  if (nu < kDegenerateDistance || hv_leg < kDegenerateDistance) {
    throw DegenerateGeometryError(
        "scatterer coincides with a path endpoint");
  }
  PathTruth path;
  path.theta = azimuth(scatterer);
  path.nu = nu;
  path.phi = normalize_angle(azimuth(leg) - omega);
  path.d = nu + hv_leg;
  path.scatterer = scatterer;
  return path;
}

PathTruth3D path_from_scatterer_3d(const Eigen::Vector3d& hv_point,
                                   double omega, double varrho,
                                   const Eigen::Vector3d& scatterer) {
  const double nu = scatterer.norm();
  const Eigen::Vector3d leg = scatterer - hv_point;
  const double hv_leg = leg.norm();
  if (nu < kDegenerateDistance || hv_leg < kDegenerateDistance) {
    throw DegenerateGeometryError(
        "scatterer coincides with a path endpoint");
  }
  PathTruth3D path;
  path.theta = azimuth(scatterer);
  path.vartheta = polar(scatterer);
  path.phi = normalize_angle(azimuth(leg) - omega);
  path.psi = polar(leg) - varrho;  // may leave [0, pi]; only psi+varrho is used
  path.d = nu + hv_leg;
  path.nu = nu;
  path.scatterer = scatterer;
  return path;
}

Eigen::Vector2d hv_position_from_path(double theta, double phi, double omega,
                                      double d, double nu) {
  const double dep = phi + omega;
  return {nu * std::cos(theta) - (d - nu) * std::cos(dep),
          nu * std::sin(theta) - (d - nu) * std::sin(dep)};
}

Eigen::Vector3d hv_position_from_path_3d(double theta, double vartheta,
                                         double phi, double psi, double omega,
                                         double varrho, double d, double nu) {
  const double dep_az = phi + omega;
  const double dep_el = psi + varrho;
  const double rem = d - nu;
  return {nu * std::sin(vartheta) * std::cos(theta) -
              rem * std::sin(dep_el) * std::cos(dep_az),
          nu * std::sin(vartheta) * std::sin(theta) -
              rem * std::sin(dep_el) * std::sin(dep_az),
          nu * std::cos(vartheta) - rem * std::cos(dep_el)};
}

std::vector<PathObservation> synthesize_observations(const SceneTruth& scene,
                                                     bool tag_clusters) {
  if (scene.scatterers.empty()) {
    throw DegenerateGeometryError("scene has no scatterers");
  }
  const auto clusters = cluster_positions(scene.hv_pose, scene.layout);
  const int cluster_count = static_cast<int>(clusters.size());

  // Gather (cluster, scatterer index) pairs in deterministic order.
  std::vector<std::pair<int, int>> order;
  for (int k = 0; k < cluster_count; ++k) {
    for (int i = 0; i < static_cast<int>(scene.scatterers.size()); ++i) {
      const int assigned = scene.scatterer_cluster.empty()
                               ? 0
                               : scene.scatterer_cluster.at(i);
      if (assigned == k) order.emplace_back(k, i);
    }
  }
  if (order.empty()) {
    throw DegenerateGeometryError("no scatterer assigned to any cluster");
  }

  std::vector<PathObservation> obs;
  obs.reserve(order.size());
  double d_ref = 0.0;
  for (const auto& [k, i] : order) {
    const PathTruth path = path_from_scatterer(
        clusters[static_cast<size_t>(k)], scene.hv_pose.omega,
        scene.scatterers[static_cast<size_t>(i)]);
    if (obs.empty()) d_ref = path.d;
    PathObservation o;
    o.theta = path.theta;
    o.phi = path.phi;
    o.lambda = path.d / kSpeedOfLight + scene.gamma_clock;
    o.rho = (path.d - d_ref) / kSpeedOfLight;
    if (tag_clusters) o.cluster_tag = k;
    obs.push_back(o);
  }
  return obs;
}

std::vector<PathObservation3D> synthesize_observations_3d(
    const SceneTruth3D& scene) {
  if (scene.scatterers.empty()) {
    throw DegenerateGeometryError("scene has no scatterers");
  }
  std::vector<PathObservation3D> obs;
  obs.reserve(scene.scatterers.size());
  double d_ref = 0.0;
  for (const auto& s : scene.scatterers) {
    const PathTruth3D path = path_from_scatterer_3d(
        scene.hv_pose.point(), scene.hv_pose.omega, scene.hv_pose.varrho, s);
    if (obs.empty()) d_ref = path.d;
    PathObservation3D o;
    o.theta = path.theta;
    o.vartheta = path.vartheta;
    o.phi = path.phi;
    o.psi = path.psi;
    o.lambda = path.d / kSpeedOfLight + scene.gamma_clock;
    o.rho = (path.d - d_ref) / kSpeedOfLight;
    obs.push_back(o);
  }
  return obs;
}

Eigen::Matrix2d rotation_2d(double omega) {
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  Eigen::Matrix2d r;
  r << c, s, -s, c;
  return r;
}

Eigen::Matrix3d rotation_3d(double omega, double varrho) {
  const double cw = std::cos(omega);
  const double sw = std::sin(omega);
  const double cr = std::cos(varrho);
  const double sr = std::sin(varrho);
  Eigen::Matrix3d r;
  r << cw, -sw * cr, sw * sr,
       sw, cw * cr, -cw * sr,
       0.0, sr, cr;
  return r;
}

}  // namespace hvsense
