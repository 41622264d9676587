#include "hvsense/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "hvsense/config_io.hpp"
#include "hvsense/signal_frontend.hpp"
#include "hvsense/solver_multicluster.hpp"
#include "hvsense/solver_size.hpp"

namespace hvsense {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point,
                          std::uint64_t trial) {
  std::uint64_t state = master ^ (0x9E3779B97F4A7C15ULL * (point + 1));
  splitmix64(state);
  state ^= 0xD1B54A32D192ED03ULL * (trial + 1);
  return splitmix64(state);
}

struct Pipeline2D {
  SceneTruth scene;
  std::vector<PathBudget> kept;
  std::vector<PathObservation> obs;
};

/// Channel pipeline: scatterers -> budgets -> merge -> multibounce ->
/// (beam) -> observability -> strongest-P -> observations (+noise).
Pipeline2D run_channel_2d(const ScenarioConfig& cfg, bool rectangle,
                          bool tag_clusters, int beam_transmissions,
                          Rng& rng) {
  Pipeline2D out;
  out.scene.hv_pose = {cfg.inter_vehicle_distance,
                       rng.uniform(-0.25, 0.25) * cfg.road_width,
                       normalize_angle(kPi + rng.uniform(-0.1, 0.1))};
  if (rectangle) {
    out.scene.layout = {ClusterLayout::Mode::kRectangle, cfg.vehicle_length,
                        cfg.vehicle_width};
  }
  out.scene.gamma_clock = rng.uniform(-0.5, 0.5);
  out.scene.velocity = cfg.relative_velocity;

  const auto field = generate_scatterers(cfg, rng);
  auto budgets = enumerate_budgets(out.scene, field, cfg, rng);
  budgets = merge_unresolvable(std::move(budgets));
  if (cfg.multibounce_fraction > 0.0) {
    budgets = inject_multibounce(std::move(budgets),
                                 cfg.multibounce_fraction,
                                 cfg.reflection_coeff, rng);
  }
  if (beam_transmissions > 1) {
    BeamConfig beam;
    beam.beamwidth = kTwoPi / beam_transmissions;
    budgets = apply_beam(std::move(budgets), beam, rng);
  }
  for (const auto& budget : budgets) {
    if (observable(budget, cfg)) out.kept.push_back(budget);
  }
  // Receiver delay-window truncation: the earliest arrivals are resolved.
  std::stable_sort(out.kept.begin(), out.kept.end(),
                   [](const PathBudget& a, const PathBudget& b) {
                     return a.path.d < b.path.d;
                   });
  const int cap = cfg.path_count > 0 ? cfg.path_count : kMaxObservedPaths;
  if (static_cast<int>(out.kept.size()) > cap) {
    out.kept.resize(static_cast<size_t>(cap));
  }

  out.obs = observations_from(out.kept, out.scene.gamma_clock, tag_clusters);
  if (!cfg.noiseless && !out.obs.empty()) {
    std::vector<double> snrs;
    snrs.reserve(out.kept.size());
    for (const auto& budget : out.kept) snrs.push_back(snr_db(budget, cfg));
    out.obs = perturb_paths(out.obs, snrs, cfg.noise, rng);
  }
  return out;
}

struct Pipeline3D {
  Pose3D pose;
  std::vector<Eigen::Vector3d> vertices;  // emitting cluster points
  std::vector<PathObservation3D> obs;
  int kept = 0;
};

Pipeline3D run_channel_3d(const ScenarioConfig& cfg, bool rectangle,
                          Rng& rng) {
  Pipeline3D out;
  out.pose = {cfg.inter_vehicle_distance,
              rng.uniform(-0.25, 0.25) * cfg.road_width, 0.0,
              normalize_angle(kPi + rng.uniform(-0.1, 0.1)), kPi / 2};

  if (rectangle) {
    const Eigen::Vector3d h{std::cos(out.pose.omega), std::sin(out.pose.omega),
                            0.0};
    const Eigen::Vector3d n{-h.y(), h.x(), 0.0};
    const Eigen::Vector3d c = out.pose.point();
    out.vertices = {
        c + 0.5 * cfg.vehicle_length * h + 0.5 * cfg.vehicle_width * n,
        c - 0.5 * cfg.vehicle_length * h + 0.5 * cfg.vehicle_width * n,
        c - 0.5 * cfg.vehicle_length * h - 0.5 * cfg.vehicle_width * n,
        c + 0.5 * cfg.vehicle_length * h - 0.5 * cfg.vehicle_width * n,
    };
  } else {
    out.vertices = {out.pose.point()};
  }

  const double gamma = rng.uniform(-0.5, 0.5);
  const auto field = generate_scatterers(cfg, rng);

  struct Raw {
    PathTruth3D path;
    double snr;
  };
  std::vector<Raw> kept;
  for (const auto& vertex : out.vertices) {
    for (const auto& scatterer : field) {
      const double z = scatterer.mobile ? rng.uniform(0.5, 2.0)
                                        : rng.uniform(0.5, 8.0);
      const Eigen::Vector3d s3{scatterer.position.x(), scatterer.position.y(),
                               z};
      PathTruth3D path3;
      try {
        path3 = path_from_scatterer_3d(vertex, out.pose.omega,
                                       out.pose.varrho, s3);
      } catch (const DegenerateGeometryError&) {
        continue;
      }
      PathTruth flat;
      flat.theta = path3.theta;
      flat.phi = path3.phi;
      flat.d = path3.d;
      flat.nu = path3.nu;
      const PathBudget budget = budget_path(flat, cfg, rng, false);
      if (!observable(budget, cfg)) continue;
      kept.push_back({path3, snr_db(budget, cfg)});
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Raw& a, const Raw& b) {
    return a.path.d < b.path.d;
  });
  const int cap = cfg.path_count > 0 ? cfg.path_count : kMaxObservedPaths;
  if (static_cast<int>(kept.size()) > cap) {
    kept.resize(static_cast<size_t>(cap));
  }
  out.kept = static_cast<int>(kept.size());

  double d_ref = 0.0;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i == 0) d_ref = kept[i].path.d;
    PathObservation3D o;
    o.theta = kept[i].path.theta;
    o.vartheta = kept[i].path.vartheta;
    o.phi = kept[i].path.phi;
    o.psi = kept[i].path.psi;
    o.lambda = kept[i].path.d / kSpeedOfLight + gamma;
    o.rho = (kept[i].path.d - d_ref) / kSpeedOfLight;
    out.obs.push_back(o);
  }
  if (!cfg.noiseless && !out.obs.empty()) {
    double ref_noise = 0.0;
    for (size_t i = 0; i < out.obs.size(); ++i) {
      auto& o = out.obs[i];
      const double sa = cfg.noise.angle_sigma(kept[i].snr);
      const double st = cfg.noise.toa_sigma(kept[i].snr);
      o.theta = normalize_angle(o.theta + rng.gauss(0.0, sa));
      o.phi = normalize_angle(o.phi + rng.gauss(0.0, sa));
      o.vartheta = std::clamp(o.vartheta + rng.gauss(0.0, sa), 0.0, kPi);
      o.psi += rng.gauss(0.0, sa);
      const double noise = rng.gauss(0.0, st);
      o.lambda += noise;
      if (i == 0) {
        ref_noise = noise;
      } else {
        o.rho += noise - ref_noise;
      }
    }
  }
  return out;
}

/// Rectangle-symmetric vertex labelings: the box cannot tell front from
/// back or left from right, so score the best of the four.
double vertex_error(const std::vector<Eigen::Vector2d>& estimate,
                    const std::vector<Eigen::Vector2d>& truth) {
  static const int relabel[4][4] = {
      {0, 1, 2, 3}, {1, 0, 3, 2}, {3, 2, 1, 0}, {2, 3, 0, 1}};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& label : relabel) {
    double err = 0.0;
    for (int k = 0; k < 4; ++k) {
      err += (estimate[static_cast<size_t>(label[k])] -
              truth[static_cast<size_t>(k)])
                 .squaredNorm();
    }
    best = std::min(best, 0.25 * err);
  }
  return best;
}

std::vector<Eigen::Vector2d> box_vertices(const Eigen::Vector2d& p0,
                                          double omega, double length,
                                          double width) {
  const Eigen::Matrix2d rot_t = rotation_2d(omega).transpose();
  return {
      p0 + rot_t * Eigen::Vector2d{0.5 * length, 0.5 * width},
      p0 + rot_t * Eigen::Vector2d{-0.5 * length, 0.5 * width},
      p0 + rot_t * Eigen::Vector2d{-0.5 * length, -0.5 * width},
      p0 + rot_t * Eigen::Vector2d{0.5 * length, -0.5 * width},
  };
}

}  // namespace

SolverKind solver_from_name(const std::string& name) {
  if (name == "single2d") return SolverKind::kSingle2D;
  if (name == "single3d") return SolverKind::kSingle3D;
  if (name == "decoupled") return SolverKind::kDecoupled;
  if (name == "disk") return SolverKind::kDisk;
  if (name == "box") return SolverKind::kBox;
  if (name == "sphere") return SolverKind::kSphere;
  if (name == "cuboid") return SolverKind::kCuboid;
  if (name == "combine") return SolverKind::kCombine;
  throw ConfigError("unknown solver: " + name);
}

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kSingle2D: return "single2d";
    case SolverKind::kSingle3D: return "single3d";
    case SolverKind::kDecoupled: return "decoupled";
    case SolverKind::kDisk: return "disk";
    case SolverKind::kBox: return "box";
    case SolverKind::kSphere: return "sphere";
    case SolverKind::kCuboid: return "cuboid";
    case SolverKind::kCombine: return "combine";
  }
  return "unknown";
}

TrialRecord run_trial(const ScenarioConfig& cfg, const TrialOptions& options,
                      std::uint64_t seed, int trial_id) {
  if (options.frontend == FrontendKind::kSignal &&
      options.solver != SolverKind::kSingle2D) {
    throw ConfigError("the signal frontend supports only the single2d solver");
  }

  TrialRecord record;
  record.trial_id = trial_id;
  record.scenario =
      cfg.scenario == Scenario::kHighway ? "highway" : "rural";
  record.solver = solver_name(options.solver);
  record.seed = seed;
  record.config_hash = config_hash(cfg);
  record.solver_version = kVersionTag;
  record.positioning_error = kNaN;
  record.sizing_error = kNaN;

  Rng rng(seed);
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (options.solver) {
      case SolverKind::kSingle2D: {
        if (options.frontend == FrontendKind::kSignal) {
          // The waveform chain resolves one arrival per delay bin; gather
          // the whole observable set, keep paths two codewords apart so
          // every peak isolates one path, then apply the requested cap.
          ScenarioConfig front_cfg = cfg;
          front_cfg.path_count = 0;
          auto pipe = run_channel_2d(front_cfg, false, false,
                                     options.beam_transmissions, rng);
          // One codeword plus the interpolation-kernel span on both sides.
          const double gap_m = 32.0 * kSpeedOfLight / cfg.bandwidth;
          std::vector<PathBudget> resolvable;
          for (const auto& budget : pipe.kept) {
            if (resolvable.empty() ||
                budget.path.d - resolvable.back().path.d >= gap_m) {
              resolvable.push_back(budget);
            }
          }
          pipe.kept = std::move(resolvable);
          if (cfg.path_count > 0 &&
              static_cast<int>(pipe.kept.size()) > cfg.path_count) {
            pipe.kept.resize(static_cast<size_t>(cfg.path_count));
          }
          record.paths_observed = static_cast<int>(pipe.kept.size());
          if (record.paths_observed < 4) {
            throw InfeasibleError("too few delay-resolvable paths");
          }
          // Streams live on the receiver window; only a sub-microsecond
          // clock residue is simulated.
          const double gamma = rng.uniform(0.0, 1e-7);
          std::vector<FrontendPath> paths;
          for (const auto& budget : pipe.kept) {
            paths.push_back(frontend_path_from_budget(budget, gamma, rng));
          }
          FrontendConfig fe;
          fe.bandwidth = cfg.bandwidth;
          fe.noise_power_dbm = cfg.noise_power_dbm;
          const auto obs = frontend_observations(paths, fe, rng);
          const auto est = estimate_2d(obs);
          record.success = est.feasible;
          record.positioning_error =
              (est.position - pipe.scene.hv_pose.point()).squaredNorm();
        } else {
          auto pipe = run_channel_2d(cfg, false, false,
                                     options.beam_transmissions, rng);
          record.paths_observed = static_cast<int>(pipe.kept.size());
          const auto est = estimate_2d(pipe.obs);
          record.success = est.feasible;
          record.positioning_error =
              (est.position - pipe.scene.hv_pose.point()).squaredNorm();
        }
        break;
      }
      case SolverKind::kDecoupled: {
        auto pipe = run_channel_2d(cfg, true, true,
                                   options.beam_transmissions, rng);
        record.paths_observed = static_cast<int>(pipe.kept.size());
        const auto est = estimate_decoupled(group_by_cluster(pipe.obs));
        record.success = est.feasible;
        record.positioning_error = vertex_error(
            est.cluster_points,
            cluster_positions(pipe.scene.hv_pose, pipe.scene.layout));
        break;
      }
      case SolverKind::kDisk:
      case SolverKind::kBox: {
        auto pipe = run_channel_2d(cfg, true, false,
                                   options.beam_transmissions, rng);
        record.paths_observed = static_cast<int>(pipe.kept.size());
        const auto step1 = estimate_2d(pipe.obs);
        const double true_area = cfg.vehicle_length * cfg.vehicle_width;
        if (options.solver == SolverKind::kDisk) {
          const auto disk = min_disk(pipe.obs, step1.position, step1.omega);
          record.success = step1.feasible;
          record.positioning_error =
              (step1.position - pipe.scene.hv_pose.point()).squaredNorm();
          record.sizing_error = sizing_error_disk(disk, true_area).area_error;
        } else {
          const auto box = min_box(pipe.obs, step1.position, step1.omega);
          record.success = step1.feasible;
          record.positioning_error = vertex_error(
              box_vertices(step1.position, step1.omega, box.l_star,
                           box.w_star),
              cluster_positions(pipe.scene.hv_pose, pipe.scene.layout));
          record.sizing_error = sizing_error_box(box, true_area).area_error;
        }
        break;
      }
      case SolverKind::kSingle3D: {
        const auto pipe = run_channel_3d(cfg, false, rng);
        record.paths_observed = pipe.kept;
        const auto est = estimate_3d(pipe.obs);
        record.success = est.feasible;
        const Eigen::Vector3d p{est.position.x(), est.position.y(), *est.z};
        record.positioning_error = (p - pipe.pose.point()).squaredNorm();
        break;
      }
      case SolverKind::kSphere:
      case SolverKind::kCuboid: {
        const auto pipe = run_channel_3d(cfg, true, rng);
        record.paths_observed = pipe.kept;
        const auto step1 = estimate_3d(pipe.obs);
        const Eigen::Vector3d p0{step1.position.x(), step1.position.y(),
                                 *step1.z};
        Eigen::Vector3d truth = Eigen::Vector3d::Zero();
        for (const auto& v : pipe.vertices) {
          truth += v / static_cast<double>(pipe.vertices.size());
        }
        record.success = step1.feasible;
        record.positioning_error = (p0 - truth).squaredNorm();
        const double true_area = cfg.vehicle_length * cfg.vehicle_width;
        if (options.solver == SolverKind::kSphere) {
          const auto sphere =
              min_sphere(pipe.obs, p0, step1.omega, *step1.varrho);
          record.sizing_error =
              kPi * sphere.r_star * sphere.r_star - true_area;
        } else {
          const auto cuboid =
              min_cuboid(pipe.obs, p0, step1.omega, *step1.varrho);
          record.sizing_error = cuboid.l_star * cuboid.w_star - true_area;
        }
        break;
      }
      case SolverKind::kCombine: {
        SceneTruth scene;
        scene.hv_pose = {cfg.inter_vehicle_distance,
                         rng.uniform(-0.25, 0.25) * cfg.road_width,
                         normalize_angle(kPi + rng.uniform(-0.1, 0.1))};
        scene.gamma_clock = rng.uniform(-0.5, 0.5);
        scene.velocity = cfg.relative_velocity;
        CombiningConfig combining;
        combining.transmissions = std::max(1, options.beam_transmissions);
        BeamConfig beam;
        beam.beamwidth = kTwoPi / combining.transmissions;
        const auto slotted =
            slotted_observations(cfg, scene, combining, beam, rng);
        int total = 0;
        for (const auto& slot : slotted) {
          total += static_cast<int>(slot.size());
        }
        record.paths_observed = total;
        const auto est = combine_and_estimate(slotted, combining);
        record.success = est.feasible;
        record.positioning_error =
            (est.position - scene.hv_pose.point()).squaredNorm();
        break;
      }
    }
  } catch (const InfeasibleError&) {
    record.success = false;
  } catch (const ReferenceMissingError&) {
    record.success = false;
  } catch (const RankDeficiencyError&) {
    record.success = false;
  } catch (const ConvergenceError&) {
    record.success = false;
  } catch (const NoPeaksError&) {
    record.success = false;
  } catch (const SubspaceRankError&) {
    record.success = false;
  } catch (const DegenerateGeometryError&) {
    record.success = false;
  } catch (const MissingTagError&) {
    record.success = false;
  }
  if (!record.success) {
    record.positioning_error = kNaN;
    record.sizing_error = kNaN;
  }
  record.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

SweepResult run_sweep(const SweepSpec& spec, int workers) {
  if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
  if (spec.trials_per_point < 1) throw ConfigError("sweep needs trials >= 1");

  const int points = static_cast<int>(spec.values.size());
  const int total = points * spec.trials_per_point;
  std::vector<TrialRecord> rows(static_cast<size_t>(total));

  const auto apply_value = [&spec](ScenarioConfig cfg, TrialOptions options,
                                   double value)
      -> std::pair<ScenarioConfig, TrialOptions> {
    if (spec.variable == "none") {
    } else if (spec.variable == "paths") {
      cfg.path_count = static_cast<int>(value);
    } else if (spec.variable == "distance") {
      cfg.inter_vehicle_distance = value;
    } else if (spec.variable == "tx_power") {
      cfg.tx_power_dbm = value;
    } else if (spec.variable == "multibounce_fraction") {
      cfg.multibounce_fraction = value;
    } else if (spec.variable == "Q") {
      options.beam_transmissions = static_cast<int>(value);
    } else {
      throw ConfigError("unknown sweep variable: " + spec.variable);
    }
    return {cfg, options};
  };
  // Validate the variable before spawning workers.
  apply_value(spec.base, spec.options, spec.values.front());

  std::atomic<int> cursor{0};
  const auto work = [&]() {
    while (true) {
      const int index = cursor.fetch_add(1);
      if (index >= total) return;
      const int point = index / spec.trials_per_point;
      const int trial = index % spec.trials_per_point;
      const double value = spec.values[static_cast<size_t>(point)];
      const auto [cfg, options] = apply_value(spec.base, spec.options, value);
      TrialRecord record = run_trial(
          cfg, options,
          derive_seed(spec.master_seed, static_cast<std::uint64_t>(point),
                      static_cast<std::uint64_t>(trial)),
          trial);
      record.swept_name = spec.variable;
      record.swept_value = value;
      rows[static_cast<size_t>(index)] = std::move(record);
    }
  };

  int pool = workers > 0 ? workers
                         : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::max(1, std::min(pool, total));
  std::vector<std::thread> threads;
  for (int i = 1; i < pool; ++i) threads.emplace_back(work);
  work();
  for (auto& thread : threads) thread.join();

  SweepResult result;
  result.rows = std::move(rows);
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SweepPointSummary> summarize(
    const std::vector<TrialRecord>& rows) {
  std::vector<SweepPointSummary> summary;
  for (const auto& row : rows) {
    SweepPointSummary* bucket = nullptr;
    for (auto& candidate : summary) {
      if (candidate.variable == row.swept_name &&
          candidate.value == row.swept_value) {
        bucket = &candidate;
        break;
      }
    }
    if (!bucket) {
      summary.push_back({row.swept_name, row.swept_value, 0, 0, 0.0, 0.0,
                         0.0, 0.0});
      bucket = &summary.back();
    }
    bucket->trials += 1;
    if (row.success && std::isfinite(row.positioning_error)) {
      bucket->solved += 1;
      bucket->mean_positioning_error += row.positioning_error;
      bucket->std_positioning_error +=
          row.positioning_error * row.positioning_error;
      if (std::isfinite(row.sizing_error)) {
        bucket->mean_sizing_error += row.sizing_error;
      }
    }
  }
  for (auto& bucket : summary) {
    bucket.success_rate =
        bucket.trials > 0
            ? static_cast<double>(bucket.solved) / bucket.trials
            : 0.0;
    if (bucket.solved > 0) {
      bucket.mean_positioning_error /= bucket.solved;
      bucket.mean_sizing_error /= bucket.solved;
      const double mean_sq = bucket.std_positioning_error / bucket.solved;
      const double variance =
          std::max(0.0, mean_sq - bucket.mean_positioning_error *
                                      bucket.mean_positioning_error);
      bucket.std_positioning_error = std::sqrt(variance);
    } else {
      bucket.mean_positioning_error = kNaN;
      bucket.std_positioning_error = kNaN;
      bucket.mean_sizing_error = kNaN;
    }
  }
  return summary;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (const char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<TrialRecord>& rows) {
  out << "trial_id,scenario,solver,swept_name,swept_value,paths_observed,"
         "success,positioning_error_m2,sizing_error_m2,wall_time_s,seed,"
         "config_hash,solver_version\r\n";
  for (const auto& row : rows) {
    out << row.trial_id << ',' << csv_escape(row.scenario) << ','
        << csv_escape(row.solver) << ',' << csv_escape(row.swept_name) << ','
        << row.swept_value << ',' << row.paths_observed << ','
        << (row.success ? "true" : "false") << ',';
    if (std::isfinite(row.positioning_error)) {
      out << row.positioning_error;
    }
    out << ',';
    if (std::isfinite(row.sizing_error)) {
      out << row.sizing_error;
    }
    out << ',' << row.wall_time_s << ',' << row.seed << ','
        << csv_escape(row.config_hash) << ','
        << csv_escape(row.solver_version) << "\r\n";
  }
}

void print_summary(std::ostream& out,
                   const std::vector<SweepPointSummary>& summary) {
  out << "variable value trials success_rate mean_pos_err_m2 std_pos_err_m2 "
         "mean_sizing_err_m2\n";
  for (const auto& point : summary) {
    out << point.variable << ' ' << point.value << ' ' << point.trials << ' '
        << point.success_rate << ' ' << point.mean_positioning_error << ' '
        << point.std_positioning_error << ' ' << point.mean_sizing_error
        << '\n';
  }
}

}  // namespace hvsense
