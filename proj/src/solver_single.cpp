#include "hvsense/solver_single.hpp"

#include <algorithm>
#include <cmath>

#include "hvsense/search.hpp"

namespace hvsense {

namespace {

// Solutions beyond the V2V coverage range cannot correspond to a detected
// transmission; pruning them disambiguates noisy minimal-path scans.
constexpr double kMaxPlausibleRange = 2000.0;  // m

bool physical_solution(const Eigen::VectorXd& z,
                       const std::vector<double>& rho,
                       const std::vector<int>& free_nu = {}) {
  const int path_count = static_cast<int>(rho.size());
  const double d1 = z(path_count);
  if (!(d1 > 0.0 && d1 < kMaxPlausibleRange)) return false;
  for (int p = 0; p < path_count; ++p) {
    if (std::find(free_nu.begin(), free_nu.end(), p) != free_nu.end()) {
      continue;  // unidentifiable reflection distance carries no constraint
    }
    const double d_p = d1 + kSpeedOfLight * rho[static_cast<size_t>(p)];
    if (!(z(p) > 0.0 && z(p) < d_p)) return false;
  }
  return true;
}

}  // namespace

std::vector<int> unidentifiable_nu_columns(const Eigen::MatrixXd& a,
                                           int path_count) {
  // The nu coefficients sum the arrival direction with the reversed
  // departure direction; a straight-through path (LoS, or a scatterer
  // sitting on the SV-HV line within a few degrees) leaves them near zero
  // and its least-squares nu meaningless.
  constexpr double kStraightThreshold = 0.05;  // ~ 3 degrees of bend
  std::vector<int> degenerate;
  for (int p = 0; p < path_count; ++p) {
    if (a.col(p).norm() <= kStraightThreshold) degenerate.push_back(p);
  }
  return degenerate;
}

void require_reference(const std::vector<PathObservation>& obs) {
  int zero_count = 0;
  for (const auto& o : obs) {
    if (o.rho == 0.0) ++zero_count;
  }
  if (zero_count != 1 || obs.empty() || obs.front().rho != 0.0) {
    throw ReferenceMissingError(
        "observations need exactly one rho = 0 reference at index 0");
  }
}

LinearSystem assemble(const std::vector<PathObservation>& obs, double omega) {
  const int path_count = static_cast<int>(obs.size());
  if (path_count < 2) {
    throw InfeasibleError("assemble needs at least two paths");
  }
  require_reference(obs);

  const int rows = path_count - 1;
  LinearSystem sys;
  sys.omega = omega;
  sys.path_count = path_count;
  sys.a = Eigen::MatrixXd::Zero(2 * rows, path_count + 1);
  sys.b = Eigen::VectorXd::Zero(2 * rows);

  const double dep0 = obs[0].phi + omega;
  const double a0_cos = std::cos(obs[0].theta) + std::cos(dep0);
  const double a0_sin = std::sin(obs[0].theta) + std::sin(dep0);

  for (int p = 1; p < path_count; ++p) {
    const auto& o = obs[static_cast<size_t>(p)];
    const double dep = o.phi + omega;
    const double dep_cos = std::cos(dep);
    const double dep_sin = std::sin(dep);
    const int rc = p - 1;         // cosine-block row
    const int rs = rows + p - 1;  // sine-block row

    sys.a(rc, 0) = a0_cos;
    sys.a(rc, p) = -(std::cos(o.theta) + dep_cos);
    sys.a(rc, path_count) = dep_cos - std::cos(dep0);
    sys.a(rs, 0) = a0_sin;
    sys.a(rs, p) = -(std::sin(o.theta) + dep_sin);
    sys.a(rs, path_count) = dep_sin - std::sin(dep0);

    const double c_rho = kSpeedOfLight * o.rho;
    sys.b(rc) = -c_rho * dep_cos;
    sys.b(rs) = -c_rho * dep_sin;
  }
  return sys;
}

LinearSystem assemble_3d(const std::vector<PathObservation3D>& obs,
                         double omega, double varrho) {
  const int path_count = static_cast<int>(obs.size());
  if (path_count < 2) {
    throw InfeasibleError("assemble_3d needs at least two paths");
  }

  const int rows = path_count - 1;
  LinearSystem sys;
  sys.omega = omega;
  sys.path_count = path_count;
  sys.a = Eigen::MatrixXd::Zero(3 * rows, path_count + 1);
  sys.b = Eigen::VectorXd::Zero(3 * rows);

  // Arrival and departure unit vectors per path.
  const auto arrival = [](const PathObservation3D& o) {
    return Eigen::Vector3d{std::sin(o.vartheta) * std::cos(o.theta),
                           std::sin(o.vartheta) * std::sin(o.theta),
                           std::cos(o.vartheta)};
  };
  const auto departure = [omega, varrho](const PathObservation3D& o) {
    const double az = o.phi + omega;
    const double el = o.psi + varrho;
    return Eigen::Vector3d{std::sin(el) * std::cos(az),
                           std::sin(el) * std::sin(az), std::cos(el)};
  };

  const Eigen::Vector3d c0 = arrival(obs[0]);
  const Eigen::Vector3d d0 = departure(obs[0]);
  for (int p = 1; p < path_count; ++p) {
    const auto& o = obs[static_cast<size_t>(p)];
    const Eigen::Vector3d cp = arrival(o);
    const Eigen::Vector3d dp = departure(o);
    const double c_rho = kSpeedOfLight * o.rho;
    for (int axis = 0; axis < 3; ++axis) {
      const int r = axis * rows + p - 1;
      sys.a(r, 0) = c0(axis) + d0(axis);
      sys.a(r, p) = -(cp(axis) + dp(axis));
      sys.a(r, path_count) = dp(axis) - d0(axis);
      sys.b(r) = -c_rho * dp(axis);
    }
  }
  return sys;
}

double discriminant(const std::vector<PathObservation>& obs, double omega) {
  if (obs.size() < 4) {
    throw InfeasibleError("orientation discriminant needs at least 4 paths");
  }
  const LinearSystem sys = assemble(obs, omega);
  return null_space_discriminant(sys.a, sys.b);
}

std::vector<OrientationCandidate> scan_orientation(
    const std::function<double(double)>& disc, double grid_step,
    int refine_count) {
  const int cells = std::max(8, static_cast<int>(std::ceil(kTwoPi / grid_step)));
  const double step = kTwoPi / cells;
  std::vector<double> values(static_cast<size_t>(cells));
  for (int i = 0; i < cells; ++i) {
    values[static_cast<size_t>(i)] = disc(i * step);
  }

  // Refine every local minimum of the circular grid: the coarse value is a
  // poor ranking key because the discriminant dips steeply near its zeros.
  std::vector<int> minima;
  for (int i = 0; i < cells; ++i) {
    const double prev = values[static_cast<size_t>((i + cells - 1) % cells)];
    const double next = values[static_cast<size_t>((i + 1) % cells)];
    const double here = values[static_cast<size_t>(i)];
    if (here <= prev && here <= next) minima.push_back(i);
  }
  if (static_cast<int>(minima.size()) > refine_count) {
    std::sort(minima.begin(), minima.end(), [&](int a, int b) {
      return values[static_cast<size_t>(a)] < values[static_cast<size_t>(b)];
    });
    minima.resize(static_cast<size_t>(refine_count));
  }

  std::vector<OrientationCandidate> candidates;
  for (int idx : minima) {
    const double center = idx * step;
    // Two-stage refinement: sharp basins can defeat one golden pass over a
    // full cell, and a poorly resolved true zero would rank behind a
    // spurious one.
    double refined = golden_section_minimize(
        disc, center - step, center + step, 1e-10, 200);
    refined = golden_section_minimize(disc, refined - step / 64.0,
                                      refined + step / 64.0, 1e-12, 200);
    candidates.push_back({normalize_angle(refined), disc(refined)});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });
  return candidates;
}

namespace {

struct SelectedOrientation {
  double omega;
  Eigen::VectorXd z;
  double residual;
  bool physical;
  std::vector<int> free_nu;
};

// Walks candidates in ascending discriminant order and returns the first
// whose LS solution is physical (the spurious exact zeros of a P = 4 system
// produce negative distances); falls back to the best value otherwise.
// Straight-through paths are solved in the minimum-norm sense and exempted
// from the physicality check.
SelectedOrientation select_orientation(
    const std::vector<OrientationCandidate>& candidates,
    const std::function<LinearSystem(double)>& assemble_at,
    const std::vector<double>& rho) {
  const int path_count = static_cast<int>(rho.size());
  std::optional<SelectedOrientation> fallback;
  for (const auto& cand : candidates) {
    const LinearSystem sys = assemble_at(cand.omega);
    const std::vector<int> free_nu =
        unidentifiable_nu_columns(sys.a, path_count);
    const LeastSquaresResult ls = solve_least_squares(sys.a, sys.b);
    if (ls.rank < static_cast<int>(sys.a.cols()) -
                      static_cast<int>(free_nu.size())) {
      continue;
    }
    const bool physical = physical_solution(ls.solution, rho, free_nu);
    if (physical) {
      return {cand.omega, ls.solution, ls.residual_norm, true, free_nu};
    }
    if (!fallback) {
      fallback = {cand.omega, ls.solution, ls.residual_norm, false, free_nu};
    }
  }
  if (!fallback) {
    throw RankDeficiencyError("no orientation candidate admits an LS solve");
  }
  return *fallback;
}

}  // namespace

double search_orientation(const std::vector<PathObservation>& obs,
                          double grid_step) {
  if (obs.size() < 4) {
    throw InfeasibleError("orientation search needs at least 4 paths");
  }
  const auto disc = [&obs](double w) { return discriminant(obs, w); };
  const auto candidates = scan_orientation(disc, grid_step);
  std::vector<double> rho(obs.size());
  for (size_t p = 0; p < obs.size(); ++p) rho[p] = obs[p].rho;
  return select_orientation(candidates,
                            [&obs](double w) { return assemble(obs, w); }, rho)
      .omega;
}

LsSolution solve_ls(const LinearSystem& sys) {
  const LeastSquaresResult ls = solve_least_squares(sys.a, sys.b);
  if (ls.rank < sys.path_count + 1) {
    throw RankDeficiencyError("assembled system is rank deficient");
  }
  return {ls.solution, ls.residual_norm};
}

SensingEstimate estimate_2d(const std::vector<PathObservation>& obs,
                            double grid_step) {
  const int path_count = static_cast<int>(obs.size());
  if (path_count < 4) {
    throw InfeasibleError("2D sensing needs at least 4 paths");
  }
  require_reference(obs);

  std::vector<double> rho(obs.size());
  for (size_t p = 0; p < obs.size(); ++p) rho[p] = obs[p].rho;

  const auto disc = [&obs](double w) { return discriminant(obs, w); };
  // Minimal-path sets need every minimum refined to sort out exact ghosts;
  // overdetermined sets have a clear global basin.
  const int refine_count = path_count <= 5 ? 24 : 8;
  const auto candidates = scan_orientation(disc, grid_step, refine_count);
  SelectedOrientation chosen = select_orientation(
      candidates, [&obs](double w) { return assemble(obs, w); }, rho);

  SensingEstimate est;
  est.omega = chosen.omega;
  est.d1 = chosen.z(path_count);
  est.nu.resize(obs.size());
  est.residual = chosen.residual;
  est.paths_used = path_count;
  est.feasible = chosen.physical;

  // A straight-through path barely constrains nu; keep the LS value when
  // it is plausible, otherwise report the midpoint (exact for pure LoS).
  for (int p : chosen.free_nu) {
    const double t = est.d1 + kSpeedOfLight * obs[static_cast<size_t>(p)].rho;
    if (!(chosen.z(p) > 0.0 && chosen.z(p) < t)) chosen.z(p) = 0.5 * t;
  }

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int p = 0; p < path_count; ++p) {
    const auto& o = obs[static_cast<size_t>(p)];
    est.nu[static_cast<size_t>(p)] = chosen.z(p);
    const double d_p = est.d1 + kSpeedOfLight * o.rho;
    mean += hv_position_from_path(o.theta, o.phi, est.omega, d_p,
                                  chosen.z(p));
  }
  est.position = mean / path_count;
  return est;
}

SensingEstimate estimate_3d(const std::vector<PathObservation3D>& obs,
                            double grid_step) {
  const int path_count = static_cast<int>(obs.size());
  if (path_count < 3) {
    throw InfeasibleError("3D sensing needs at least 3 paths");
  }

  const auto disc = [&obs](double w, double r) {
    const LinearSystem sys = assemble_3d(obs, w, r);
    return null_space_discriminant(sys.a, sys.b);
  };

  // Coarse lattice over the (omega, varrho) rectangle; omega wraps.
  const int w_cells =
      std::max(8, static_cast<int>(std::ceil(kTwoPi / grid_step)));
  const int r_cells =
      std::max(4, static_cast<int>(std::ceil(kPi / grid_step)));
  Eigen::MatrixXd grid(w_cells, r_cells + 1);
  for (int i = 0; i < w_cells; ++i) {
    for (int j = 0; j <= r_cells; ++j) {
      grid(i, j) = disc(i * kTwoPi / w_cells, j * kPi / r_cells);
    }
  }

  // Collect lattice local minima, refine each with Nelder-Mead, and keep
  // them ordered by refined value. As in 2D, a minimal-path system admits
  // exact but unphysical ghost roots that the selection below rejects.
  struct Candidate {
    double omega, varrho, value;
  };
  std::vector<Candidate> raw;
  for (int i = 0; i < w_cells; ++i) {
    for (int j = 0; j <= r_cells; ++j) {
      const double here = grid(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int jj = j + dj;
          if (jj < 0 || jj > r_cells) continue;
          const int ii = (i + di + w_cells) % w_cells;
          if (grid(ii, jj) < here) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) raw.push_back({i * kTwoPi / w_cells, j * kPi / r_cells, here});
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });
  if (raw.size() > 16) raw.resize(16);

  const auto disc_vec = [&disc](const Eigen::Vector2d& x) {
    return disc(x(0), x(1));
  };
  std::vector<Candidate> refined;
  for (const auto& c : raw) {
    const Eigen::Vector2d opt = nelder_mead_2d(
        disc_vec, {c.omega, c.varrho}, kTwoPi / w_cells, 1e-13, 600);
    // Per-axis golden polish.
    const double span = 1e-5;
    const double w_fine = golden_section_minimize(
        [&](double w) { return disc(w, opt(1)); }, opt(0) - span,
        opt(0) + span, 1e-13, 200);
    const double r_fine = golden_section_minimize(
        [&](double r) { return disc(w_fine, r); }, opt(1) - span,
        opt(1) + span, 1e-13, 200);
    refined.push_back({w_fine, r_fine, disc(w_fine, r_fine)});
  }
  std::sort(refined.begin(), refined.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });

  std::vector<double> rho(obs.size());
  for (size_t p = 0; p < obs.size(); ++p) rho[p] = obs[p].rho;

  struct Solved {
    double omega, varrho;
    Eigen::VectorXd z;
    double residual;
    bool physical;
    std::vector<int> free_nu;
  };
  std::optional<Solved> chosen;
  for (const auto& c : refined) {
    double omega = c.omega;
    double varrho = c.varrho;
    if (varrho < 0.0) {
      varrho = -varrho;
      omega += kPi;
    } else if (varrho > kPi) {
      varrho = kTwoPi - varrho;
      omega += kPi;
    }
    omega = normalize_angle(omega);
    const LinearSystem sys = assemble_3d(obs, omega, varrho);
    const std::vector<int> free_nu =
        unidentifiable_nu_columns(sys.a, path_count);
    const LeastSquaresResult ls = solve_least_squares(sys.a, sys.b);
    if (ls.rank < static_cast<int>(sys.a.cols()) -
                      static_cast<int>(free_nu.size())) {
      continue;
    }
    const bool physical = physical_solution(ls.solution, rho, free_nu);
    if (physical) {
      chosen = Solved{omega, varrho, ls.solution, ls.residual_norm, true,
                      free_nu};
      break;
    }
    if (!chosen) {
      chosen = Solved{omega, varrho, ls.solution, ls.residual_norm, false,
                      free_nu};
    }
  }
  if (!chosen) {
    throw RankDeficiencyError("no orientation candidate admits an LS solve");
  }

  SensingEstimate est;
  est.omega = chosen->omega;
  est.varrho = chosen->varrho;
  est.d1 = chosen->z(path_count);
  est.nu.resize(obs.size());
  est.residual = chosen->residual;
  est.paths_used = path_count;
  est.feasible = chosen->physical;

  for (int p : chosen->free_nu) {
    const double t = est.d1 + kSpeedOfLight * obs[static_cast<size_t>(p)].rho;
    if (!(chosen->z(p) > 0.0 && chosen->z(p) < t)) chosen->z(p) = 0.5 * t;
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int p = 0; p < path_count; ++p) {
    const auto& o = obs[static_cast<size_t>(p)];
    est.nu[static_cast<size_t>(p)] = chosen->z(p);
    const double d_p = est.d1 + kSpeedOfLight * o.rho;
    mean += hv_position_from_path_3d(o.theta, o.vartheta, o.phi, o.psi,
                                     est.omega, *est.varrho, d_p,
                                     chosen->z(p));
  }
  mean /= path_count;
  est.position = mean.head<2>();
  est.z = mean.z();
  return est;
}

}  // namespace hvsense
