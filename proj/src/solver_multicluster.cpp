#include "hvsense/solver_multicluster.hpp"

#include <algorithm>
#include <cmath>

#include "hvsense/search.hpp"

namespace hvsense {

namespace {

// Rectangle-offset coefficients per cluster: eta_k = L*etaL_k*cos(omega)
// - W*etaW_k*sin(omega) and zeta_k = L*etaL_k*sin(omega) +
// W*etaW_k*cos(omega), relative to vertex 1.
constexpr double kEtaL[4] = {0.0, 1.0, 1.0, 0.0};
constexpr double kEtaW[4] = {0.0, 0.0, 1.0, 1.0};

Eigen::Vector2d vertex_offset(int cluster, double omega, double length,
                              double width) {
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  return {length * kEtaL[cluster] * c - width * kEtaW[cluster] * s,
          length * kEtaL[cluster] * s + width * kEtaW[cluster] * c};
}

}  // namespace

std::vector<PathObservation> GroupedObservations::flattened() const {
  std::vector<PathObservation> flat;
  flat.reserve(static_cast<size_t>(total()));
  for (const auto& c : clusters) flat.insert(flat.end(), c.begin(), c.end());
  return flat;
}

GroupedObservations group_by_cluster(
    const std::vector<PathObservation>& obs) {
  GroupedObservations grouped;
  for (const auto& o : obs) {
    if (!o.cluster_tag || *o.cluster_tag < 0 || *o.cluster_tag > 3) {
      throw MissingTagError("decoupled sensing needs cluster tags in 0..3");
    }
    grouped.clusters[static_cast<size_t>(*o.cluster_tag)].push_back(o);
  }
  return grouped;
}

ExtendedSystem assemble_extended(const GroupedObservations& grouped,
                                 double omega) {
  const auto flat = grouped.flattened();
  const int path_count = static_cast<int>(flat.size());
  if (path_count < 2) {
    throw InfeasibleError("assemble_extended needs at least two paths");
  }

  // Cluster index per flattened path.
  std::vector<int> cluster_of;
  cluster_of.reserve(flat.size());
  for (int k = 0; k < 4; ++k) {
    for (size_t i = 0; i < grouped.clusters[static_cast<size_t>(k)].size();
         ++i) {
      cluster_of.push_back(k);
    }
  }

  const LinearSystem base = assemble(flat, omega);
  const int rows = path_count - 1;
  ExtendedSystem sys;
  sys.omega = omega;
  sys.path_count = path_count;
  sys.a = Eigen::MatrixXd::Zero(2 * rows, path_count + 3);
  sys.a.leftCols(path_count + 1) = base.a;
  sys.b = base.b;

  // The rectangle offsets enter relative to the reference path's cluster,
  // which reduces to the plain block pattern when the reference sits in
  // cluster 1.
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  const int ref_cluster = cluster_of[0];
  for (int p = 1; p < path_count; ++p) {
    const int k = cluster_of[static_cast<size_t>(p)];
    const double dl = kEtaL[k] - kEtaL[ref_cluster];
    const double dw = kEtaW[k] - kEtaW[ref_cluster];
    const int rc = p - 1;
    const int rs = rows + p - 1;
    sys.a(rc, path_count + 1) = -dl * c;
    sys.a(rs, path_count + 1) = -dl * s;
    sys.a(rc, path_count + 2) = dw * s;
    sys.a(rs, path_count + 2) = -dw * c;
  }
  return sys;
}

double discriminant_extended(const GroupedObservations& grouped,
                             double omega) {
  if (grouped.total() < 6) {
    throw InfeasibleError("extended discriminant needs at least 6 paths");
  }
  const ExtendedSystem sys = assemble_extended(grouped, omega);
  return null_space_discriminant(sys.a, sys.b);
}

SensingEstimate estimate_decoupled(const GroupedObservations& grouped,
                                   double grid_step) {
  const int path_count = grouped.total();
  if (path_count < 6) {
    throw InfeasibleError("decoupled sensing needs at least 6 paths");
  }
  const auto flat = grouped.flattened();
  require_reference(flat);

  std::vector<int> cluster_of;
  for (int k = 0; k < 4; ++k) {
    for (size_t i = 0; i < grouped.clusters[static_cast<size_t>(k)].size();
         ++i) {
      cluster_of.push_back(k);
    }
  }

  const auto disc = [&grouped](double w) {
    return discriminant_extended(grouped, w);
  };
  const auto candidates =
      scan_orientation(disc, grid_step, path_count <= 7 ? 24 : 8);

  // Min-norm LS: with paths from fewer than two distinct clusters the L/W
  // columns vanish and the solve falls back to length = width = 0. Only the
  // core (nu, d1) block must stay full rank.
  struct Scored {
    double omega;
    LeastSquaresResult ls;
    bool physical;
    std::vector<int> free_nu;
  };
  std::optional<Scored> chosen;
  for (const auto& cand : candidates) {
    const ExtendedSystem sys = assemble_extended(grouped, cand.omega);
    const std::vector<int> free_nu =
        unidentifiable_nu_columns(sys.a, path_count);
    // The size columns may legitimately vanish (single contributing
    // cluster) and so may straight-through nu columns; only the remaining
    // core block must stay identifiable.
    const LeastSquaresResult ls = solve_least_squares(sys.a, sys.b);
    if (ls.rank < path_count + 1 - static_cast<int>(free_nu.size())) {
      continue;
    }
    const double d1 = ls.solution(path_count);
    bool physical = d1 > 0.0 && d1 < 2000.0;
    for (int p = 0; p < path_count && physical; ++p) {
      if (std::find(free_nu.begin(), free_nu.end(), p) != free_nu.end()) {
        continue;
      }
      const double d_p =
          d1 + kSpeedOfLight * flat[static_cast<size_t>(p)].rho;
      physical = ls.solution(p) > 0.0 && ls.solution(p) < d_p;
    }
    if (physical) {
      chosen = Scored{cand.omega, ls, true, free_nu};
      break;
    }
    if (!chosen) chosen = Scored{cand.omega, ls, false, free_nu};
  }
  if (!chosen) {
    throw RankDeficiencyError("extended system is rank deficient");
  }

  const double omega = chosen->omega;
  Eigen::VectorXd z = chosen->ls.solution;
  for (int p : chosen->free_nu) {
    const double t =
        z(path_count) + kSpeedOfLight * flat[static_cast<size_t>(p)].rho;
    if (!(z(p) > 0.0 && z(p) < t)) z(p) = 0.5 * t;
  }
  const double raw_length = z(path_count + 1);
  const double raw_width = z(path_count + 2);
  // Noise can push the LS size negative; clamp to a small positive floor.
  const double length = raw_length < 0.0 ? 0.1 : raw_length;
  const double width = raw_width < 0.0 ? 0.1 : raw_width;

  // Every path votes for vertex 1 through its own cluster offset; the
  // average fixes the rectangle, and the reported vertices are exact
  // corners of (centroid, omega, length, width).
  Eigen::Vector2d vertex1 = Eigen::Vector2d::Zero();
  for (int p = 0; p < path_count; ++p) {
    const auto& o = flat[static_cast<size_t>(p)];
    const double d_p = z(path_count) + kSpeedOfLight * o.rho;
    const Eigen::Vector2d origin =
        hv_position_from_path(o.theta, o.phi, omega, d_p, z(p));
    vertex1 += origin + vertex_offset(cluster_of[static_cast<size_t>(p)],
                                      omega, raw_length, raw_width);
  }
  vertex1 /= path_count;

  SensingEstimate est;
  est.omega = omega;
  est.d1 = z(path_count);
  est.nu.assign(z.data(), z.data() + path_count);
  est.residual = chosen->ls.residual_norm;
  est.paths_used = path_count;
  est.feasible = chosen->physical;
  est.length = length;
  est.width = width;
  est.cluster_points.resize(4);
  for (int k = 0; k < 4; ++k) {
    est.cluster_points[static_cast<size_t>(k)] =
        vertex1 - vertex_offset(k, omega, length, width);
  }
  est.position = 0.25 * (est.cluster_points[0] + est.cluster_points[1] +
                         est.cluster_points[2] + est.cluster_points[3]);
  return est;
}

}  // namespace hvsense
