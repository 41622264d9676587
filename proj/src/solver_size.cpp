#include "hvsense/solver_size.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hvsense/qp.hpp"
#include "hvsense/search.hpp"

namespace hvsense {

namespace {

constexpr double kBisectTol = 1e-6;     // m, on the disk radius
constexpr double kNuMargin = 1e-9;      // m, strict interior margin for nu
constexpr double kBoundaryTol = 1e-5;   // m, boundary/vertex detection

const double kInf = std::numeric_limits<double>::infinity();

// {t : c1 * t <= c0}.
IntervalSet linear_le(double c1, double c0) {
  constexpr double tiny = 1e-14;
  if (c1 > tiny) return {{-kInf, c0 / c1}};
  if (c1 < -tiny) return {{c0 / c1, kInf}};
  if (c0 >= -tiny) return {{-kInf, kInf}};
  return {};
}

// {t : a t^2 + b t + c <= 0} with a >= 0 up to roundoff.
IntervalSet quadratic_le(double a, double b, double c) {
  constexpr double tiny = 1e-14;
  if (std::abs(a) <= tiny) {
    return linear_le(b, -c);
  }
  double disc = b * b - 4.0 * a * c;
  const double scale = b * b + std::abs(4.0 * a * c) + 1e-300;
  if (disc < 0.0 && disc > -1e-10 * scale) disc = 0.0;  // grazing tangency
  if (disc < 0.0) return {};
  const double root = std::sqrt(disc);
  return {{(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}};
}

// Reachable-time set of one path: {t >= 0 such that the segment from t*w
// (nu = 0) to t*e (nu = t) passes within r of the point q}. The distance is
// piecewise quadratic in t with regimes keyed to where the closest point
// falls on the segment.
template <typename Vec>
IntervalSet reach_interval(const Vec& w, const Vec& e, const Vec& q,
                           double r) {
  const Vec u = e - w;
  const double r2 = r * r;
  IntervalSet result;

  const auto append = [&result](const IntervalSet& pieces,
                                const IntervalSet& valid) {
    const IntervalSet clipped = intersect_intervals(pieces, valid);
    result.insert(result.end(), clipped.begin(), clipped.end());
  };

  if (u.norm() <= 1e-12) {
    // Origin does not depend on nu; plain point-to-ray distance.
    append(quadratic_le(1.0, -2.0 * w.dot(q), q.squaredNorm() - r2),
           {{0.0, kInf}});
    return merge_intervals(std::move(result));
  }

  const Vec uhat = u.normalized();
  const double wu = w.dot(u);
  const double eu = e.dot(u);
  const double qu = q.dot(u);

  // Closest point at nu = 0 when h(t) = qu - t*wu <= 0.
  append(quadratic_le(1.0, -2.0 * w.dot(q), q.squaredNorm() - r2),
         linear_le(-wu, -qu));
  // Closest point at nu = t when t * eu <= qu.
  append(quadratic_le(1.0, -2.0 * e.dot(q), q.squaredNorm() - r2),
         linear_le(eu, qu));
  // Interior projection: distance to the supporting line.
  {
    const double a = 1.0 - std::pow(w.dot(uhat), 2);
    const double b =
        -2.0 * (w.dot(q) - w.dot(uhat) * q.dot(uhat));
    const double c = q.squaredNorm() - std::pow(q.dot(uhat), 2) - r2;
    IntervalSet valid = intersect_intervals(linear_le(wu, qu),
                                            linear_le(-eu, -qu));
    append(quadratic_le(a, b, c), valid);
  }

  IntervalSet clipped = intersect_intervals(merge_intervals(std::move(result)),
                                            {{0.0, kInf}});
  return clipped;
}

struct OriginMap2D {
  Eigen::Vector2d w;  // nu = 0 direction (unit)
  Eigen::Vector2d e;  // nu = t direction (unit)
  double c_rho = 0.0;
};

OriginMap2D origin_map(const PathObservation& obs, double omega) {
  const double dep = obs.phi + omega;
  return {{-std::cos(dep), -std::sin(dep)},
          {std::cos(obs.theta), std::sin(obs.theta)},
          kSpeedOfLight * obs.rho};
}

struct OriginMap3D {
  Eigen::Vector3d w;
  Eigen::Vector3d e;
  double c_rho = 0.0;
};

OriginMap3D origin_map_3d(const PathObservation3D& obs, double omega,
                          double varrho) {
  const double az = obs.phi + omega;
  const double el = obs.psi + varrho;
  return {{-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az),
           -std::cos(el)},
          {std::sin(obs.vartheta) * std::cos(obs.theta),
           std::sin(obs.vartheta) * std::sin(obs.theta),
           std::cos(obs.vartheta)},
          kSpeedOfLight * obs.rho};
}

template <typename Vec>
Vec origin_at(const Vec& w, const Vec& e, double nu, double t) {
  return nu * e + (t - nu) * w;
}

// Distance minimizer over nu in [margin, t - margin].
template <typename Vec>
double best_nu(const Vec& w, const Vec& e, const Vec& q, double t) {
  const Vec u = e - w;
  const double uu = u.squaredNorm();
  double nu = 0.5 * t;
  if (uu > 1e-24) nu = -(t * w - q).dot(u) / uu;
  const double margin = std::min(kNuMargin, 0.25 * t);
  return std::clamp(nu, margin, t - margin);
}

template <typename Obs, typename Map, typename Vec>
struct SizeProblem {
  std::vector<Map> maps;
  Vec p0;

  IntervalSet per_path(size_t p, double r) const {
    IntervalSet set =
        reach_interval<Vec>(maps[p].w, maps[p].e, p0, r);
    // Shift from total distance t to d1 = t - c rho.
    for (auto& iv : set) {
      iv.lo -= maps[p].c_rho;
      iv.hi -= maps[p].c_rho;
    }
    return set;
  }

  IntervalSet all_paths(double r) const {
    IntervalSet set = per_path(0, r);
    for (size_t p = 1; p < maps.size() && !set.empty(); ++p) {
      set = intersect_intervals(set, per_path(p, r));
    }
    return set;
  }
};

template <typename Obs, typename Map, typename Vec>
std::tuple<double, double, IntervalSet> bisect_radius(
    const SizeProblem<Obs, Map, Vec>& problem) {
  double r_hi = 1.0;
  IntervalSet hi_set = problem.all_paths(r_hi);
  int doublings = 0;
  while (hi_set.empty()) {
    r_hi *= 2.0;
    hi_set = problem.all_paths(r_hi);
    if (++doublings > 60) {
      throw ConvergenceError("no feasible enclosing radius found");
    }
  }
  double r_lo = 0.0;
  int steps = 0;
  while (r_hi - r_lo > kBisectTol) {
    if (++steps > 200) {
      throw ConvergenceError("radius bisection exceeded 200 steps");
    }
    const double mid = 0.5 * (r_lo + r_hi);
    IntervalSet mid_set = problem.all_paths(mid);
    if (mid_set.empty()) {
      r_lo = mid;
    } else {
      r_hi = mid;
      hi_set = std::move(mid_set);
    }
  }
  // Witness d1: start at the midpoint of the tightest feasible interval,
  // then polish by minimizing the (convex) max origin distance directly.
  // This pins the contact distances well below the boundary tolerance.
  const auto tightest = std::min_element(
      hi_set.begin(), hi_set.end(), [](const Interval& a, const Interval& b) {
        return a.width() < b.width();
      });
  const auto max_distance = [&problem](double d1) {
    double worst = 0.0;
    for (const auto& map : problem.maps) {
      const double t = d1 + map.c_rho;
      if (t <= 0.0) return kInf;
      const double nu = best_nu(map.w, map.e, problem.p0, t);
      worst = std::max(
          worst, (origin_at(map.w, map.e, nu, t) - problem.p0).norm());
    }
    return worst;
  };
  double lo = tightest->lo - 1.0;
  double hi = tightest->hi + 1.0;
  for (int i = 0; i < 300 && hi - lo > 1e-12; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (max_distance(m1) < max_distance(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double d1 = 0.5 * (lo + hi);
  return {max_distance(d1), d1, hi_set};
}

}  // namespace

IntervalSet merge_intervals(IntervalSet set, double glue) {
  std::sort(set.begin(), set.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  IntervalSet merged;
  for (const auto& iv : set) {
    if (iv.hi < iv.lo) continue;
    if (!merged.empty() && iv.lo <= merged.back().hi + glue) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

IntervalSet intersect_intervals(const IntervalSet& a, const IntervalSet& b) {
  IntervalSet out;
  size_t i = 0;
  size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

bool interval_subset(const IntervalSet& inner, const IntervalSet& outer,
                     double tol) {
  for (const auto& iv : inner) {
    bool covered = false;
    for (const auto& ov : outer) {
      if (iv.lo >= ov.lo - tol && iv.hi <= ov.hi + tol) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

IntervalSet feasible_d1_interval(const PathObservation& obs, double r,
                                 const Eigen::Vector2d& p0, double omega) {
  const OriginMap2D map = origin_map(obs, omega);
  IntervalSet set = reach_interval<Eigen::Vector2d>(map.w, map.e, p0, r);
  for (auto& iv : set) {
    iv.lo -= map.c_rho;
    iv.hi -= map.c_rho;
  }
  return set;
}

IntervalSet feasible_set(const std::vector<PathObservation>& obs, double r,
                         const Eigen::Vector2d& p0, double omega) {
  if (obs.empty()) return {};
  IntervalSet set = feasible_d1_interval(obs[0], r, p0, omega);
  for (size_t p = 1; p < obs.size() && !set.empty(); ++p) {
    set = intersect_intervals(set, feasible_d1_interval(obs[p], r, p0, omega));
  }
  return set;
}

DiskResult min_disk(const std::vector<PathObservation>& obs,
                    const Eigen::Vector2d& p0, double omega) {
  if (obs.empty()) throw InfeasibleError("min_disk needs paths");
  if (!p0.allFinite()) throw InfeasibleError("min_disk centroid is not finite");

  SizeProblem<PathObservation, OriginMap2D, Eigen::Vector2d> problem;
  problem.p0 = p0;
  for (const auto& o : obs) problem.maps.push_back(origin_map(o, omega));

  const auto [r_star, d1, set] = bisect_radius(problem);

  DiskResult result;
  result.r_star = r_star;
  result.d1 = d1;
  for (size_t p = 0; p < obs.size(); ++p) {
    const auto& map = problem.maps[p];
    const double t = d1 + map.c_rho;
    const double nu = best_nu(map.w, map.e, p0, t);
    const Eigen::Vector2d origin = origin_at(map.w, map.e, nu, t);
    result.nu.push_back(nu);
    result.origins.push_back(origin);
    if (std::abs((origin - p0).norm() - r_star) <= kBoundaryTol) {
      result.boundary_paths.push_back(static_cast<int>(p));
    }
  }
  return result;
}

SphereResult min_sphere(const std::vector<PathObservation3D>& obs,
                        const Eigen::Vector3d& p0, double omega,
                        double varrho) {
  if (obs.empty()) throw InfeasibleError("min_sphere needs paths");
  if (!p0.allFinite()) {
    throw InfeasibleError("min_sphere centroid is not finite");
  }

  SizeProblem<PathObservation3D, OriginMap3D, Eigen::Vector3d> problem;
  problem.p0 = p0;
  for (const auto& o : obs) {
    problem.maps.push_back(origin_map_3d(o, omega, varrho));
  }

  const auto [r_star, d1, set] = bisect_radius(problem);

  SphereResult result;
  result.r_star = r_star;
  result.d1 = d1;
  for (size_t p = 0; p < obs.size(); ++p) {
    const auto& map = problem.maps[p];
    const double t = d1 + map.c_rho;
    const double nu = best_nu(map.w, map.e, p0, t);
    const Eigen::Vector3d origin = origin_at(map.w, map.e, nu, t);
    result.nu.push_back(nu);
    result.origins.push_back(origin);
    if (std::abs((origin - p0).norm() - r_star) <= kBoundaryTol) {
      result.boundary_paths.push_back(static_cast<int>(p));
    }
  }
  return result;
}

namespace {

BoxResult solve_box_at(const std::vector<PathObservation>& obs,
                       const Eigen::Vector2d& p0, double omega,
                       const DiskResult& warm) {
  const int path_count = static_cast<int>(obs.size());
  const int n = path_count + 2 + 1;  // nu, d1, l, w
  const int il = path_count + 1;
  const int iw = path_count + 2;

  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(n, n);
  qp.hessian(il, il) = 2.0;
  qp.hessian(iw, iw) = 2.0;
  qp.gradient = Eigen::VectorXd::Zero(n);
  qp.constraints = Eigen::MatrixXd::Zero(6 * path_count, n);
  qp.bounds = Eigen::VectorXd::Zero(6 * path_count);

  const Eigen::Matrix2d rot = rotation_2d(omega);
  for (int p = 0; p < path_count; ++p) {
    const OriginMap2D map = origin_map(obs[static_cast<size_t>(p)], omega);
    // Body-frame offset of the origin: rot * (nu e + (d1 + c rho - nu) w - p0)
    const Eigen::Vector2d ru = rot * (map.e - map.w);
    const Eigen::Vector2d rw = rot * map.w;
    const Eigen::Vector2d r0 = map.c_rho * rw - rot * p0;
    const int base = 6 * p;
    for (int axis = 0; axis < 2; ++axis) {
      const int half = il + axis;  // l bounds x', w bounds y'
      // +coord - size/2 <= 0
      qp.constraints(base + 2 * axis, p) = ru(axis);
      qp.constraints(base + 2 * axis, path_count) = rw(axis);
      qp.constraints(base + 2 * axis, half) = -0.5;
      qp.bounds(base + 2 * axis) = -r0(axis);
      // -coord - size/2 <= 0
      qp.constraints(base + 2 * axis + 1, p) = -ru(axis);
      qp.constraints(base + 2 * axis + 1, path_count) = -rw(axis);
      qp.constraints(base + 2 * axis + 1, half) = -0.5;
      qp.bounds(base + 2 * axis + 1) = r0(axis);
    }
    // nu bounds: margin <= nu <= d1 + c rho - margin.
    qp.constraints(base + 4, p) = -1.0;
    qp.bounds(base + 4) = -kNuMargin;
    qp.constraints(base + 5, p) = 1.0;
    qp.constraints(base + 5, path_count) = -1.0;
    qp.bounds(base + 5) = map.c_rho - kNuMargin;
  }

  // Warm start from the disk witness, with a box wide enough to be
  // strictly feasible.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < path_count; ++p) {
    x0(p) = warm.nu[static_cast<size_t>(p)];
  }
  x0(path_count) = warm.d1;
  double need_l = 0.0;
  double need_w = 0.0;
  for (int p = 0; p < path_count; ++p) {
    const Eigen::Vector2d body =
        rot * (warm.origins[static_cast<size_t>(p)] - p0);
    need_l = std::max(need_l, 2.0 * std::abs(body.x()));
    need_w = std::max(need_w, 2.0 * std::abs(body.y()));
  }
  x0(il) = need_l + 1.0;
  x0(iw) = need_w + 1.0;

  const QpResult sol = solve_qp(qp, x0);
  if (sol.kkt_residual > 1e-8) {
    throw ConvergenceError("box QP did not reach the KKT tolerance");
  }

  BoxResult result;
  result.l_star = sol.x(il);
  result.w_star = sol.x(iw);
  result.d1 = sol.x(path_count);
  result.kkt_residual = sol.kkt_residual;
  for (int p = 0; p < path_count; ++p) {
    const OriginMap2D map = origin_map(obs[static_cast<size_t>(p)], omega);
    const double t = result.d1 + map.c_rho;
    const Eigen::Vector2d origin = origin_at(map.w, map.e, sol.x(p), t);
    result.nu.push_back(sol.x(p));
    result.origins.push_back(origin);
  }
  // Vertex contacts of the optimum (extremal-structure post-condition).
  for (int p = 0; p < path_count; ++p) {
    for (int v = 0; v < 4; ++v) {
      const double sx = (v == 0 || v == 3) ? 0.5 : -0.5;
      const double sy = (v < 2) ? 0.5 : -0.5;
      const Eigen::Vector2d vertex =
          p0 + rot.transpose() * Eigen::Vector2d{sx * result.l_star,
                                                 sy * result.w_star};
      if ((result.origins[static_cast<size_t>(p)] - vertex).norm() <=
          kBoundaryTol) {
        result.vertex_paths.push_back(p);
        result.vertex_ids.push_back(v);
        break;
      }
    }
  }
  return result;
}

}  // namespace

BoxResult min_box(const std::vector<PathObservation>& obs,
                  const Eigen::Vector2d& p0, double omega,
                  const BoxOptions& options) {
  if (obs.empty()) throw InfeasibleError("min_box needs paths");
  const DiskResult warm = min_disk(obs, p0, omega);
  if (!options.refine_omega) {
    return solve_box_at(obs, p0, omega, warm);
  }
  const auto objective = [&](double w) {
    const BoxResult r = solve_box_at(obs, p0, w, min_disk(obs, p0, w));
    return r.l_star * r.l_star + r.w_star * r.w_star;
  };
  const double refined = golden_section_minimize(
      objective, omega - options.omega_halfwidth,
      omega + options.omega_halfwidth, 1e-6, 80);
  return solve_box_at(obs, p0, refined, min_disk(obs, p0, refined));
}

CuboidResult min_cuboid(const std::vector<PathObservation3D>& obs,
                        const Eigen::Vector3d& p0, double omega,
                        double varrho) {
  if (obs.empty()) throw InfeasibleError("min_cuboid needs paths");
  const SphereResult warm = min_sphere(obs, p0, omega, varrho);

  const int path_count = static_cast<int>(obs.size());
  const int n = path_count + 1 + 3;  // nu, d1, l, w, h
  const int il = path_count + 1;

  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < 3; ++k) qp.hessian(il + k, il + k) = 2.0;
  qp.gradient = Eigen::VectorXd::Zero(n);
  qp.constraints = Eigen::MatrixXd::Zero(8 * path_count, n);
  qp.bounds = Eigen::VectorXd::Zero(8 * path_count);

  // World-to-body rotation: transpose of the heading rotation.
  const Eigen::Matrix3d rot = rotation_3d(omega, varrho).transpose();
  for (int p = 0; p < path_count; ++p) {
    const OriginMap3D map =
        origin_map_3d(obs[static_cast<size_t>(p)], omega, varrho);
    const Eigen::Vector3d ru = rot * (map.e - map.w);
    const Eigen::Vector3d rw = rot * map.w;
    const Eigen::Vector3d r0 = map.c_rho * rw - rot * p0;
    const int base = 8 * p;
    for (int axis = 0; axis < 3; ++axis) {
      qp.constraints(base + 2 * axis, p) = ru(axis);
      qp.constraints(base + 2 * axis, path_count) = rw(axis);
      qp.constraints(base + 2 * axis, il + axis) = -0.5;
      qp.bounds(base + 2 * axis) = -r0(axis);
      qp.constraints(base + 2 * axis + 1, p) = -ru(axis);
      qp.constraints(base + 2 * axis + 1, path_count) = -rw(axis);
      qp.constraints(base + 2 * axis + 1, il + axis) = -0.5;
      qp.bounds(base + 2 * axis + 1) = r0(axis);
    }
    qp.constraints(base + 6, p) = -1.0;
    qp.bounds(base + 6) = -kNuMargin;
    qp.constraints(base + 7, p) = 1.0;
    qp.constraints(base + 7, path_count) = -1.0;
    qp.bounds(base + 7) = map.c_rho - kNuMargin;
  }

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < path_count; ++p) x0(p) = warm.nu[static_cast<size_t>(p)];
  x0(path_count) = warm.d1;
  Eigen::Vector3d need = Eigen::Vector3d::Zero();
  for (int p = 0; p < path_count; ++p) {
    const Eigen::Vector3d body =
        rot * (warm.origins[static_cast<size_t>(p)] - p0);
    need = need.cwiseMax(2.0 * body.cwiseAbs());
  }
  for (int k = 0; k < 3; ++k) x0(il + k) = need(k) + 1.0;

  const QpResult sol = solve_qp(qp, x0);
  if (sol.kkt_residual > 1e-8) {
    throw ConvergenceError("cuboid QP did not reach the KKT tolerance");
  }

  CuboidResult result;
  result.l_star = sol.x(il);
  result.w_star = sol.x(il + 1);
  result.h_star = sol.x(il + 2);
  result.d1 = sol.x(path_count);
  result.kkt_residual = sol.kkt_residual;
  for (int p = 0; p < path_count; ++p) {
    const OriginMap3D map =
        origin_map_3d(obs[static_cast<size_t>(p)], omega, varrho);
    const double t = result.d1 + map.c_rho;
    result.nu.push_back(sol.x(p));
    result.origins.push_back(origin_at(map.w, map.e, sol.x(p), t));
  }
  for (int p = 0; p < path_count; ++p) {
    const Eigen::Vector3d body =
        rot * (result.origins[static_cast<size_t>(p)] - p0);
    const Eigen::Vector3d half{0.5 * result.l_star, 0.5 * result.w_star,
                               0.5 * result.h_star};
    if (((body.cwiseAbs() - half).cwiseAbs().maxCoeff()) <= kBoundaryTol) {
      result.vertex_paths.push_back(p);
    }
  }
  return result;
}

SizingError sizing_error_disk(const DiskResult& result, double true_area) {
  const double area = kPi * result.r_star * result.r_star;
  return {area - true_area, area >= true_area};
}

SizingError sizing_error_box(const BoxResult& result, double true_area) {
  const double area = result.l_star * result.w_star;
  return {area - true_area, area >= true_area};
}

}  // namespace hvsense
