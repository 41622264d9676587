// Geometry-based stochastic V2V channel: scatterer fields, per-path power
// budgets, observability, parametric estimation noise, multi-bounce
// contamination, and the optional LoS path.
#ifndef HVSENSE_CHANNEL_HPP
#define HVSENSE_CHANNEL_HPP

#include <cstdint>
#include <vector>

#include "hvsense/geometry.hpp"
#include "hvsense/rng.hpp"

namespace hvsense {

enum class Scenario { kHighway, kRural };

/// Resolvable-path budget of the receiver chain.
inline constexpr int kMaxObservedPaths = 32;

/// Parametric surrogate for the estimation error of the signal chain:
/// zero-mean Gaussian noise whose sigma scales as 10^(-(SNR - ref)/20),
/// with resolution floors so strong paths stay as accurate as a real
/// grid-limited estimator, not arbitrarily better.
struct NoiseModel {
  double angle_sigma_ref = deg2rad(0.5);       // rad at the reference SNR
  double toa_sigma_ref = 1.0 / (2.0 * 1e8);    // s at the reference SNR
  double ref_snr_db = 20.0;
  double angle_sigma_floor = deg2rad(0.1);     // ~ MUSIC grid resolution
  double toa_sigma_floor = 3e-10;              // ~ sub-sample interpolation

  double scale(double snr_db) const {
    return std::pow(10.0, -(snr_db - ref_snr_db) / 20.0);
  }
  double angle_sigma(double snr_db) const {
    return std::max(angle_sigma_floor, angle_sigma_ref * scale(snr_db));
  }
  double toa_sigma(double snr_db) const {
    return std::max(toa_sigma_floor, toa_sigma_ref * scale(snr_db));
  }
};

struct ScenarioConfig {
  Scenario scenario = Scenario::kHighway;
  double road_length = 600.0;       // m
  double road_width = 18.0;         // m (8 rural / 18 highway)
  double roadside_band = 10.0;      // m of static-scatterer strip per side
  double inter_vehicle_distance = 50.0;  // m
  double mobile_density = 0.0015;    // scatterers / m^2 on the road
  double static_density = 0.0016;    // scatterers / m^2 on the roadside
  double fc = 5.9e9;                // Hz
  double bandwidth = 1e8;           // Hz
  double tx_power_dbm = 23.0;
  double noise_power_dbm = -70.0;
  double observability_threshold_db = 25.0;
  double relative_velocity = 200.0 / 3.6;  // m/s
  std::uint64_t rng_seed = 1;

  double vehicle_length = 6.0;  // m, rectangle side along the heading
  double vehicle_width = 3.0;   // m

  bool los_enabled = false;
  double multibounce_fraction = 0.0;
  double reflection_coeff = 0.1;    // linear power factor per extra bounce
  int path_count = 0;   // keep the strongest P paths; 0 = all observable,
                        // capped at kMaxObservedPaths
  bool noiseless = false;
  NoiseModel noise;
};

/// Per-scenario defaults: road width and scatterer densities differ between
/// the highway and rural layouts (densities are repo choices; see README).
ScenarioConfig default_config(Scenario scenario);

struct Scatterer {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool mobile = false;
};

/// Poisson-count scatterer field: mobile uniform on the road strip, static
/// uniform on both roadside bands. Positions too close to either vehicle
/// are redrawn.
std::vector<Scatterer> generate_scatterers(const ScenarioConfig& cfg,
                                           Rng& rng);

struct PathBudget {
  PathTruth path;
  int cluster = 0;
  double rx_power_dbm = 0.0;
  double pathloss_exponent = 0.0;
  double fading_gain = 1.0;         // linear amplitude
  double beam_gain_db = 0.0;
  bool is_los = false;
  bool is_multibounce = false;
  double bounce_attenuation = 1.0;  // linear power factor
};

/// Draws the path-loss exponent (LoS fixed per scenario, NLoS uniform on
/// [0, 3.5]) and Rayleigh fading, then fills the received power.
PathBudget budget_path(const PathTruth& path, const ScenarioConfig& cfg,
                       Rng& rng, bool is_los = false, int cluster = 0);

double snr_db(const PathBudget& budget, const ScenarioConfig& cfg);

bool observable(const PathBudget& budget, const ScenarioConfig& cfg);

/// LoS as a virtual scatterer at the midpoint of the SV-HV segment.
PathTruth los_path(const SceneTruth& scene);

/// Unresolvably close paths (both angles within 1 degree) collapse into the
/// strongest one with their powers added linearly.
std::vector<PathBudget> merge_unresolvable(std::vector<PathBudget> budgets,
                                           double angle_threshold =
                                               deg2rad(1.0));

/// Flags a Bernoulli(fraction) subset as multi-bounce: their parameters are
/// perturbed so the single-bounce position equation no longer closes, and
/// their power drops by the reflection coefficient.
std::vector<PathBudget> inject_multibounce(std::vector<PathBudget> budgets,
                                           double fraction,
                                           double reflection_coeff, Rng& rng);

/// All candidate single-bounce paths of a scene: every emitting cluster
/// against every scatterer, in deterministic (cluster, scatterer) order,
/// plus the LoS path when requested.
std::vector<PathBudget> enumerate_budgets(const SceneTruth& scene,
                                          const std::vector<Scatterer>& field,
                                          const ScenarioConfig& cfg, Rng& rng);

/// Observations for a budget list: lambda = d/c + clock gap; rho referenced
/// to the first path and computed from distances (the clock gap cancels
/// exactly). Cluster tags filled when tag_clusters is set.
std::vector<PathObservation> observations_from(
    const std::vector<PathBudget>& budgets, double gamma_clock,
    bool tag_clusters);

/// Gaussian perturbation of a single observation; rho shifts by the same
/// ToA noise. Set-level re-referencing is perturb_paths' job.
PathObservation perturb(const PathObservation& obs, double snr_db,
                        const NoiseModel& nm, Rng& rng);

/// Perturbs a whole set and re-references rho to the first path using the
/// noise values only, so inputs differing by a clock gap stay bitwise
/// identical downstream.
std::vector<PathObservation> perturb_paths(
    const std::vector<PathObservation>& obs, const std::vector<double>& snrs,
    const NoiseModel& nm, Rng& rng);

}  // namespace hvsense

#endif  // HVSENSE_CHANNEL_HPP
