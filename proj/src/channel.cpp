#include "hvsense/channel.hpp"

#include <algorithm>
#include <cmath>

namespace hvsense {

namespace {

constexpr double kExclusionRadius = 1.5;  // m around either vehicle

double pathloss_db(double distance, double exponent) {
  return 10.0 * exponent * std::log10(std::max(distance, 1.0));
}

double los_exponent(Scenario scenario) {
  return scenario == Scenario::kRural ? 1.6 : 1.8;
}

}  // namespace

ScenarioConfig default_config(Scenario scenario) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  if (scenario == Scenario::kRural) {
    cfg.road_width = 8.0;
    cfg.mobile_density = 0.0015;
    cfg.static_density = 0.008;
  } else {
    cfg.road_width = 18.0;
    cfg.mobile_density = 0.0015;
    cfg.static_density = 0.0016;
  }
  return cfg;
}

std::vector<Scatterer> generate_scatterers(const ScenarioConfig& cfg,
                                           Rng& rng) {
  std::vector<Scatterer> field;
  const Eigen::Vector2d hv{cfg.inter_vehicle_distance, 0.0};
  const auto keep = [&hv](const Eigen::Vector2d& p) {
    return p.norm() > kExclusionRadius &&
           (p - hv).norm() > kExclusionRadius;
  };

  const double half_len = 0.5 * cfg.road_length;
  const double half_wid = 0.5 * cfg.road_width;
  const auto n_mobile =
      rng.poisson(cfg.mobile_density * cfg.road_length * cfg.road_width);
  for (std::uint64_t i = 0; i < n_mobile; ++i) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      const Eigen::Vector2d p{rng.uniform(-half_len, half_len),
                              rng.uniform(-half_wid, half_wid)};
      if (keep(p)) {
        field.push_back({p, true});
        break;
      }
    }
  }

  const auto n_static = rng.poisson(cfg.static_density * cfg.road_length *
                                    cfg.roadside_band * 2.0);
  for (std::uint64_t i = 0; i < n_static; ++i) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
      const Eigen::Vector2d p{
          rng.uniform(-half_len, half_len),
          side * rng.uniform(half_wid, half_wid + cfg.roadside_band)};
      if (keep(p)) {
        field.push_back({p, false});
        break;
      }
    }
  }
  return field;
}

PathBudget budget_path(const PathTruth& path, const ScenarioConfig& cfg,
                       Rng& rng, bool is_los, int cluster) {
  PathBudget budget;
  budget.path = path;
  budget.cluster = cluster;
  budget.is_los = is_los;
  budget.pathloss_exponent =
      is_los ? los_exponent(cfg.scenario) : rng.uniform(0.0, 3.5);
  // The direct path has no diffuse component to fade.
  budget.fading_gain = is_los ? 1.0 : rng.rayleigh(1.0);
  budget.rx_power_dbm = cfg.tx_power_dbm -
                        pathloss_db(path.d, budget.pathloss_exponent) +
                        20.0 * std::log10(budget.fading_gain);
  return budget;
}

double snr_db(const PathBudget& budget, const ScenarioConfig& cfg) {
  return budget.rx_power_dbm + budget.beam_gain_db +
         10.0 * std::log10(budget.bounce_attenuation) - cfg.noise_power_dbm;
}

bool observable(const PathBudget& budget, const ScenarioConfig& cfg) {
  return snr_db(budget, cfg) >= cfg.observability_threshold_db;
}

PathTruth los_path(const SceneTruth& scene) {
  const Eigen::Vector2d hv = scene.hv_pose.point();
  if (hv.norm() < 1e-9) {
    throw DegenerateGeometryError("LoS path needs a nonzero baseline");
  }
  return path_from_scatterer(hv, scene.hv_pose.omega,
                             Eigen::Vector2d{0.5 * hv});
}

std::vector<PathBudget> merge_unresolvable(std::vector<PathBudget> budgets,
                                           double angle_threshold) {
  // Strongest-first greedy absorption keeps the winner's geometry.
  std::stable_sort(budgets.begin(), budgets.end(),
                   [](const PathBudget& a, const PathBudget& b) {
                     return a.rx_power_dbm > b.rx_power_dbm;
                   });
  std::vector<PathBudget> merged;
  for (const auto& budget : budgets) {
    bool absorbed = false;
    for (auto& host : merged) {
      if (angle_distance(host.path.theta, budget.path.theta) <
              angle_threshold &&
          angle_distance(host.path.phi, budget.path.phi) < angle_threshold) {
        const double total = db_to_linear(host.rx_power_dbm) +
                             db_to_linear(budget.rx_power_dbm);
        host.rx_power_dbm = linear_to_db(total);
        absorbed = true;
        break;
      }
    }
    if (!absorbed) merged.push_back(budget);
  }
  return merged;
}

std::vector<PathBudget> inject_multibounce(std::vector<PathBudget> budgets,
                                           double fraction,
                                           double reflection_coeff, Rng& rng) {
  for (auto& budget : budgets) {
    if (budget.is_los) continue;
    if (rng.uniform() >= fraction) continue;
    budget.is_multibounce = true;
    budget.bounce_attenuation = reflection_coeff;
    // An extra bounce breaks the triangle closure: the measured angles and
    // excess delay no longer agree with any single-bounce origin.
    const double sign1 = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double sign2 = rng.uniform() < 0.5 ? -1.0 : 1.0;
    budget.path.theta = normalize_angle(
        budget.path.theta + sign1 * rng.uniform(deg2rad(2.0), deg2rad(8.0)));
    budget.path.phi = normalize_angle(
        budget.path.phi + sign2 * rng.uniform(deg2rad(2.0), deg2rad(8.0)));
    budget.path.d += rng.uniform(2.0, 15.0);
  }
  return budgets;
}

std::vector<PathBudget> enumerate_budgets(const SceneTruth& scene,
                                          const std::vector<Scatterer>& field,
                                          const ScenarioConfig& cfg,
                                          Rng& rng) {
  const auto clusters = cluster_positions(scene.hv_pose, scene.layout);
  std::vector<PathBudget> budgets;
  for (size_t k = 0; k < clusters.size(); ++k) {
    for (const auto& scatterer : field) {
      PathTruth path;
      try {
        path = path_from_scatterer(clusters[k], scene.hv_pose.omega,
                                   scatterer.position);
      } catch (const DegenerateGeometryError&) {
        continue;
      }
      budgets.push_back(
          budget_path(path, cfg, rng, false, static_cast<int>(k)));
    }
  }
  if (cfg.los_enabled) {
    budgets.push_back(budget_path(los_path(scene), cfg, rng, true, 0));
  }
  return budgets;
}

std::vector<PathObservation> observations_from(
    const std::vector<PathBudget>& budgets, double gamma_clock,
    bool tag_clusters) {
  std::vector<PathObservation> obs;
  obs.reserve(budgets.size());
  double d_ref = 0.0;
  for (const auto& budget : budgets) {
    if (obs.empty()) d_ref = budget.path.d;
    PathObservation o;
    o.theta = budget.path.theta;
    o.phi = budget.path.phi;
    o.lambda = budget.path.d / kSpeedOfLight + gamma_clock;
    o.rho = (budget.path.d - d_ref) / kSpeedOfLight;
    if (tag_clusters) o.cluster_tag = budget.cluster;
    obs.push_back(o);
  }
  return obs;
}

PathObservation perturb(const PathObservation& obs, double snr_db,
                        const NoiseModel& nm, Rng& rng) {
  PathObservation out = obs;
  const double sa = nm.angle_sigma(snr_db);
  const double st = nm.toa_sigma(snr_db);
  out.theta = normalize_angle(obs.theta + rng.gauss(0.0, sa));
  out.phi = normalize_angle(obs.phi + rng.gauss(0.0, sa));
  const double toa_noise = rng.gauss(0.0, st);
  out.lambda = obs.lambda + toa_noise;
  out.rho = obs.rho + toa_noise;
  return out;
}

std::vector<PathObservation> perturb_paths(
    const std::vector<PathObservation>& obs, const std::vector<double>& snrs,
    const NoiseModel& nm, Rng& rng) {
  std::vector<PathObservation> out;
  out.reserve(obs.size());
  double reference_noise = 0.0;
  for (size_t p = 0; p < obs.size(); ++p) {
    PathObservation o = perturb(obs[p], snrs.at(p), nm, rng);
    const double noise = o.rho - obs[p].rho;
    if (p == 0) {
      reference_noise = noise;
      o.rho = 0.0;
    } else {
      o.rho = obs[p].rho + (noise - reference_noise);
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace hvsense
