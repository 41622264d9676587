// Coupled-cluster size sensing around a previously estimated centroid and
// orientation: enclosing-disk minimization via closed-form feasibility
// intervals and bisection, and enclosing-box minimization via the dense
// active-set QP. Sphere and cuboid 3D variants.
#ifndef HVSENSE_SOLVER_SIZE_HPP
#define HVSENSE_SOLVER_SIZE_HPP

#include <Eigen/Dense>
#include <vector>

#include "hvsense/geometry.hpp"

namespace hvsense {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
};

/// Sorted, disjoint intervals.
using IntervalSet = std::vector<Interval>;

IntervalSet merge_intervals(IntervalSet set, double glue = 1e-12);
IntervalSet intersect_intervals(const IntervalSet& a, const IntervalSet& b);
bool interval_subset(const IntervalSet& inner, const IntervalSet& outer,
                     double tol);

/// Feasible d_1 values for one path at disk radius r: those d_1 admitting a
/// reflection distance nu in (0, d_1 + c rho) whose implied origin lies in
/// the disk around p0. Closed form through the point-to-moving-segment
/// distance, which is piecewise quadratic in d_1.
IntervalSet feasible_d1_interval(const PathObservation& obs, double r,
                                 const Eigen::Vector2d& p0, double omega);

/// Intersection over all paths (Eq. S(r) = cap of per-path sets).
IntervalSet feasible_set(const std::vector<PathObservation>& obs, double r,
                         const Eigen::Vector2d& p0, double omega);

struct DiskResult {
  double r_star = 0.0;
  double d1 = 0.0;
  std::vector<double> nu;
  std::vector<Eigen::Vector2d> origins;
  std::vector<int> boundary_paths;  // origins with |dist - r*| <= 1e-5
};

DiskResult min_disk(const std::vector<PathObservation>& obs,
                    const Eigen::Vector2d& p0, double omega);

struct BoxResult {
  double l_star = 0.0;
  double w_star = 0.0;
  double d1 = 0.0;
  std::vector<double> nu;
  std::vector<Eigen::Vector2d> origins;
  std::vector<int> vertex_paths;  // origins within 1e-5 of a box vertex
  std::vector<int> vertex_ids;    // matching vertex index, 0..3
  double kkt_residual = 0.0;
};

struct BoxOptions {
  bool refine_omega = false;      // optional 1D polish of omega
  double omega_halfwidth = deg2rad(5.0);
};

BoxResult min_box(const std::vector<PathObservation>& obs,
                  const Eigen::Vector2d& p0, double omega,
                  const BoxOptions& options = {});

struct SphereResult {
  double r_star = 0.0;
  double d1 = 0.0;
  std::vector<double> nu;
  std::vector<Eigen::Vector3d> origins;
  std::vector<int> boundary_paths;
};

SphereResult min_sphere(const std::vector<PathObservation3D>& obs,
                        const Eigen::Vector3d& p0, double omega,
                        double varrho);

struct CuboidResult {
  double l_star = 0.0;
  double w_star = 0.0;
  double h_star = 0.0;
  double d1 = 0.0;
  std::vector<double> nu;
  std::vector<Eigen::Vector3d> origins;
  std::vector<int> vertex_paths;
  double kkt_residual = 0.0;
};

CuboidResult min_cuboid(const std::vector<PathObservation3D>& obs,
                        const Eigen::Vector3d& p0, double omega,
                        double varrho);

struct SizingError {
  double area_error = 0.0;  // estimated minus true area, m^2
  bool overestimated = false;
};

SizingError sizing_error_disk(const DiskResult& result, double true_area);
SizingError sizing_error_box(const BoxResult& result, double true_area);

}  // namespace hvsense

#endif  // HVSENSE_SOLVER_SIZE_HPP
