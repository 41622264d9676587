// Coping with insufficient paths: sequential path combining across repeated
// transmissions (joint pose + relative-velocity estimation) and random
// directional beamforming that changes which paths clear the observability
// threshold.
#ifndef HVSENSE_AUGMENT_HPP
#define HVSENSE_AUGMENT_HPP

#include <optional>
#include <vector>

#include "hvsense/channel.hpp"
#include "hvsense/solver_single.hpp"

namespace hvsense {

struct CombiningConfig {
  int transmissions = 1;      // Q
  double interval = 0.2;      // s between transmissions
  bool velocity_unknown = true;
  double known_velocity = 0.0;  // used only when velocity_unknown is false
};

struct BeamConfig {
  double beamwidth = kTwoPi;  // isotropic by default
  std::optional<double> center;  // drawn uniformly per transmission if unset
  double back_lobe_db = -20.0;
};

/// Main-lobe gain for a sector beam: pinned to 3 dB at 90 degrees and
/// 10 dB at 30 degrees, tapering to 0 dB at isotropic width.
double beam_gain_db(double beamwidth);

/// Applies one random steering draw: paths whose AoD falls inside the lobe
/// get the width's gain, all others drop to the back-lobe floor. Geometry
/// is never touched, only power.
std::vector<PathBudget> apply_beam(std::vector<PathBudget> budgets,
                                   const BeamConfig& beam, Rng& rng);

/// The combined system over all transmission slots: the per-slot HV
/// displacement v * interval * slot joins the unknowns next to d1, so the
/// orientation search stays one-dimensional. Slot 0's first path anchors
/// the TDoA reference. Requires a total of at least five paths.
SensingEstimate combine_and_estimate(
    const std::vector<std::vector<PathObservation>>& slotted_obs,
    const CombiningConfig& cfg, double grid_step = deg2rad(0.5));

/// Fraction of Monte Carlo trials in which sensing is feasible: at least 4
/// observable paths for a single isotropic shot, or at least 5 pooled over
/// the Q beamformed transmissions.
double success_probability(const ScenarioConfig& scenario,
                           const CombiningConfig& combining,
                           const BeamConfig& beam, int trials,
                           std::uint64_t seed);

/// Per-slot observable observations of a moving-HV scene, schedule-aligned
/// so every slot shares slot 0's clock reference. Used by the combining
/// pipeline and the success-probability study.
std::vector<std::vector<PathObservation>> slotted_observations(
    const ScenarioConfig& cfg, const SceneTruth& scene,
    const CombiningConfig& combining, const BeamConfig& beam, Rng& rng);

}  // namespace hvsense

#endif  // HVSENSE_AUGMENT_HPP
