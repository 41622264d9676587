// Monte Carlo harness: end-to-end trials (channel or signal frontend into
// the solvers), sweeps over scenario knobs, and CSV emission.
#ifndef HVSENSE_BENCH_HPP
#define HVSENSE_BENCH_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "hvsense/augment.hpp"
#include "hvsense/channel.hpp"

namespace hvsense {

enum class SolverKind {
  kSingle2D,
  kSingle3D,
  kDecoupled,
  kDisk,
  kBox,
  kSphere,
  kCuboid,
  kCombine,
};

SolverKind solver_from_name(const std::string& name);
std::string solver_name(SolverKind kind);

enum class FrontendKind { kParametric, kSignal };

struct TrialRecord {
  int trial_id = 0;
  std::string scenario;
  std::string solver;
  std::string swept_name = "none";
  double swept_value = 0.0;
  int paths_observed = 0;
  bool success = false;
  double positioning_error = 0.0;  // m^2; NaN when the trial failed
  double sizing_error = 0.0;       // m^2; NaN unless a sizing solver ran
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string solver_version;
};

struct TrialOptions {
  SolverKind solver = SolverKind::kSingle2D;
  FrontendKind frontend = FrontendKind::kParametric;
  int beam_transmissions = 0;  // 0 disables beam + combining
};

/// One full pipeline run. Infeasible trials come back success = false with
/// NaN errors; configuration problems throw ConfigError.
TrialRecord run_trial(const ScenarioConfig& cfg, const TrialOptions& options,
                      std::uint64_t seed, int trial_id = 0);

struct SweepSpec {
  ScenarioConfig base;
  TrialOptions options;
  std::string variable = "none";  // paths|distance|tx_power|
                                  // multibounce_fraction|Q|none
  std::vector<double> values = {0.0};
  int trials_per_point = 1;
  std::uint64_t master_seed = 1;
};

struct SweepPointSummary {
  std::string variable;
  double value = 0.0;
  int trials = 0;
  int solved = 0;
  double success_rate = 0.0;
  double mean_positioning_error = 0.0;  // over solved trials
  double std_positioning_error = 0.0;
  double mean_sizing_error = 0.0;       // over solved sizing trials
};

struct SweepResult {
  std::vector<TrialRecord> rows;
  std::vector<SweepPointSummary> summary;
};

/// Deterministic given the master seed: per-trial seeds derive from the
/// (point, trial) index pair regardless of worker scheduling.
SweepResult run_sweep(const SweepSpec& spec, int workers = 0);

/// Aggregates recomputed from rows only.
std::vector<SweepPointSummary> summarize(const std::vector<TrialRecord>& rows);

void write_csv(std::ostream& out, const std::vector<TrialRecord>& rows);
void print_summary(std::ostream& out,
                   const std::vector<SweepPointSummary>& summary);

}  // namespace hvsense

#endif  // HVSENSE_BENCH_HPP
