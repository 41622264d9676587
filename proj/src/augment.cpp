#include "hvsense/augment.hpp"

#include <algorithm>
#include <cmath>

#include "hvsense/search.hpp"

namespace hvsense {

double beam_gain_db(double beamwidth) {
  const double quarter = kPi / 2.0;  // 90 degrees
  const double sixth = kPi / 6.0;    // 30 degrees
  if (beamwidth >= kTwoPi) return 0.0;
  if (beamwidth >= quarter) {
    // 3 dB at 90 degrees, 0 dB at isotropic.
    return 3.0 * (kTwoPi - beamwidth) / (kTwoPi - quarter);
  }
  // 3 dB at 90 degrees up to 10 dB at 30 degrees, same slope below.
  const double gain = 3.0 + 7.0 * (quarter - beamwidth) / (quarter - sixth);
  return std::min(gain, 15.0);
}

std::vector<PathBudget> apply_beam(std::vector<PathBudget> budgets,
                                   const BeamConfig& beam, Rng& rng) {
  const double center =
      beam.center ? *beam.center : rng.uniform(0.0, kTwoPi);
  const double gain = beam_gain_db(beam.beamwidth);
  for (auto& budget : budgets) {
    const bool in_beam =
        angle_distance(budget.path.phi, center) <= 0.5 * beam.beamwidth;
    budget.beam_gain_db = in_beam ? gain : beam.back_lobe_db;
  }
  return budgets;
}

namespace {

struct FlatSlotted {
  std::vector<PathObservation> obs;
  std::vector<int> slot;
};

FlatSlotted flatten(const std::vector<std::vector<PathObservation>>& slotted) {
  FlatSlotted flat;
  for (size_t q = 0; q < slotted.size(); ++q) {
    for (const auto& o : slotted[q]) {
      flat.obs.push_back(o);
      flat.obs.back().slot = static_cast<int>(q);
      flat.slot.push_back(static_cast<int>(q));
    }
  }
  return flat;
}

// Base system plus the velocity column Delta * slot * (cos, sin)(omega).
LinearSystem assemble_combined(const FlatSlotted& flat, double omega,
                               double interval) {
  const LinearSystem base = assemble(flat.obs, omega);
  const int path_count = base.path_count;
  const int rows = path_count - 1;
  LinearSystem sys;
  sys.omega = omega;
  sys.path_count = path_count;
  sys.a = Eigen::MatrixXd::Zero(2 * rows, path_count + 2);
  sys.a.leftCols(path_count + 1) = base.a;
  sys.b = base.b;
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  const int ref_slot = flat.slot[0];
  for (int p = 1; p < path_count; ++p) {
    const double factor =
        interval * (flat.slot[static_cast<size_t>(p)] - ref_slot);
    sys.a(p - 1, path_count + 1) = factor * c;
    sys.a(rows + p - 1, path_count + 1) = factor * s;
  }
  return sys;
}

}  // namespace

SensingEstimate combine_and_estimate(
    const std::vector<std::vector<PathObservation>>& slotted_obs,
    const CombiningConfig& cfg, double grid_step) {
  FlatSlotted flat = flatten(slotted_obs);
  const int path_count = static_cast<int>(flat.obs.size());
  if (path_count < 5) {
    throw InfeasibleError("path combining needs at least 5 paths in total");
  }
  require_reference(flat.obs);

  const auto disc = [&flat, &cfg](double w) {
    const LinearSystem sys = assemble_combined(flat, w, cfg.interval);
    return null_space_discriminant(sys.a, sys.b);
  };
  const auto candidates =
      scan_orientation(disc, grid_step, path_count <= 6 ? 24 : 8);

  struct Scored {
    double omega;
    LeastSquaresResult ls;
    bool physical;
    std::vector<int> free_nu;
  };
  std::optional<Scored> chosen;
  for (const auto& cand : candidates) {
    const LinearSystem sys = assemble_combined(flat, cand.omega, cfg.interval);
    const std::vector<int> free_nu =
        unidentifiable_nu_columns(sys.a, path_count);
    const LeastSquaresResult ls = solve_least_squares(sys.a, sys.b);
    if (ls.rank < static_cast<int>(sys.a.cols()) -
                      static_cast<int>(free_nu.size())) {
      continue;
    }
    const double d1 = ls.solution(path_count);
    bool physical = d1 > 0.0 && d1 < 2000.0;
    for (int p = 0; p < path_count && physical; ++p) {
      if (std::find(free_nu.begin(), free_nu.end(), p) != free_nu.end()) {
        continue;
      }
      const double d_p =
          d1 + kSpeedOfLight * flat.obs[static_cast<size_t>(p)].rho;
      physical = ls.solution(p) > 0.0 && ls.solution(p) < d_p;
    }
    if (physical) {
      chosen = Scored{cand.omega, ls, true, free_nu};
      break;
    }
    if (!chosen) chosen = Scored{cand.omega, ls, false, free_nu};
  }
  if (!chosen) {
    throw RankDeficiencyError("combined system is rank deficient");
  }

  const double omega = chosen->omega;
  const Eigen::VectorXd& z = chosen->ls.solution;
  const double velocity =
      cfg.velocity_unknown ? z(path_count + 1) : cfg.known_velocity;
  const Eigen::Vector2d heading{std::cos(omega), std::sin(omega)};

  SensingEstimate est;
  est.omega = omega;
  est.d1 = z(path_count);
  est.nu.assign(z.data(), z.data() + path_count);
  est.residual = chosen->ls.residual_norm;
  est.paths_used = path_count;
  est.feasible = chosen->physical;
  est.velocity = velocity;

  // Each origin is the HV position at its slot; subtracting the slot
  // displacement refers everything back to the slot-0 pose.
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int ref_slot = flat.slot[0];
  for (int p = 0; p < path_count; ++p) {
    const auto& o = flat.obs[static_cast<size_t>(p)];
    const double d_p = est.d1 + kSpeedOfLight * o.rho;
    const double shift =
        velocity * cfg.interval * (flat.slot[static_cast<size_t>(p)] - ref_slot);
    mean += hv_position_from_path(o.theta, o.phi, omega, d_p, z(p)) -
            shift * heading;
  }
  est.position = mean / path_count;
  return est;
}

std::vector<std::vector<PathObservation>> slotted_observations(
    const ScenarioConfig& cfg, const SceneTruth& scene,
    const CombiningConfig& combining, const BeamConfig& beam, Rng& rng) {
  // Static scatterers persist over the burst; mobile ones are other
  // vehicles and get redrawn each slot.
  const auto field = generate_scatterers(cfg, rng);
  std::vector<Scatterer> static_field;
  for (const auto& s : field) {
    if (!s.mobile) static_field.push_back(s);
  }
  auto mobile_cfg = cfg;
  mobile_cfg.static_density = 0.0;

  std::vector<PathObservation> all_obs;
  std::vector<double> all_snrs;
  std::vector<size_t> slot_sizes;
  double d_ref = 0.0;
  bool have_ref = false;
  for (int q = 0; q < combining.transmissions; ++q) {
    SceneTruth slot_scene = scene;
    const double shift = scene.velocity * combining.interval * q;
    slot_scene.hv_pose.x += shift * std::cos(scene.hv_pose.omega);
    slot_scene.hv_pose.y += shift * std::sin(scene.hv_pose.omega);

    std::vector<Scatterer> slot_field = static_field;
    const auto mobile = generate_scatterers(mobile_cfg, rng);
    slot_field.insert(slot_field.end(), mobile.begin(), mobile.end());

    auto budgets = enumerate_budgets(slot_scene, slot_field, cfg, rng);
    budgets = merge_unresolvable(std::move(budgets));
    if (combining.transmissions > 1 || beam.beamwidth < kTwoPi) {
      budgets = apply_beam(std::move(budgets), beam, rng);
    }
    std::vector<PathBudget> kept;
    for (const auto& budget : budgets) {
      if (observable(budget, cfg)) kept.push_back(budget);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const PathBudget& a, const PathBudget& b) {
                       return a.path.d < b.path.d;
                     });
    const int cap = cfg.path_count > 0 ? cfg.path_count : kMaxObservedPaths;
    if (static_cast<int>(kept.size()) > cap) {
      kept.resize(static_cast<size_t>(cap));
    }

    slot_sizes.push_back(kept.size());
    for (const auto& budget : kept) {
      if (!have_ref) {
        d_ref = budget.path.d;
        have_ref = true;
      }
      PathObservation o;
      o.theta = budget.path.theta;
      o.phi = budget.path.phi;
      // Schedule-corrected arrival time: the known q*interval transmit
      // offset is already removed, so all slots share one clock reference.
      o.lambda = budget.path.d / kSpeedOfLight + scene.gamma_clock;
      o.rho = (budget.path.d - d_ref) / kSpeedOfLight;
      o.slot = q;
      all_obs.push_back(o);
      all_snrs.push_back(snr_db(budget, cfg));
    }
  }

  if (!cfg.noiseless && !all_obs.empty()) {
    // One global pass keeps the cross-slot reference exact.
    const auto slots_backup = all_obs;
    all_obs = perturb_paths(all_obs, all_snrs, cfg.noise, rng);
    for (size_t i = 0; i < all_obs.size(); ++i) {
      all_obs[i].slot = slots_backup[i].slot;
    }
  }

  std::vector<std::vector<PathObservation>> slotted;
  size_t cursor = 0;
  for (size_t q = 0; q < slot_sizes.size(); ++q) {
    slotted.emplace_back(all_obs.begin() + static_cast<long>(cursor),
                         all_obs.begin() +
                             static_cast<long>(cursor + slot_sizes[q]));
    cursor += slot_sizes[q];
  }
  return slotted;
}

double success_probability(const ScenarioConfig& scenario,
                           const CombiningConfig& combining,
                           const BeamConfig& beam, int trials,
                           std::uint64_t seed) {
  if (trials < 1) throw ConfigError("success_probability needs trials >= 1");
  Rng master(seed);
  int successes = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = master.fork(static_cast<std::uint64_t>(trial));
    SceneTruth scene;
    scene.hv_pose = {scenario.inter_vehicle_distance, 0.0, kPi};
    scene.velocity = scenario.relative_velocity;
    const auto slotted =
        slotted_observations(scenario, scene, combining, beam, rng);
    int total = 0;
    for (const auto& slot : slotted) total += static_cast<int>(slot.size());
    if (combining.transmissions <= 1) {
      successes += (total >= 4) ? 1 : 0;
    } else {
      successes += (total >= 5) ? 1 : 0;
    }
  }
  return static_cast<double>(successes) / trials;
}

}  // namespace hvsense
