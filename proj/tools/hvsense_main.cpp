// hvsense CLI: Monte Carlo runs of the hidden-vehicle sensing pipeline.
//
//   hvsense run --config cfg.json --sweep distance=20,40,60 --trials 200
//       --solver box --seed 7 --out results.csv
//
// Exit codes: 0 success, 2 configuration error, 3 every trial infeasible.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "hvsense/bench.hpp"
#include "hvsense/config_io.hpp"

namespace {

struct SweepArg {
  std::string variable = "none";
  std::vector<double> values = {0.0};
};

SweepArg parse_sweep(const std::string& text) {
  SweepArg arg;
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size()) {
    throw hvsense::ConfigError("--sweep expects var=v1,v2,...");
  }
  arg.variable = text.substr(0, eq);
  arg.values.clear();
  std::string rest = text.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const size_t comma = rest.find(',', pos);
    const std::string token =
        rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                    : comma - pos);
    if (token.empty()) throw hvsense::ConfigError("empty sweep value");
    try {
      arg.values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw hvsense::ConfigError("bad sweep value: " + token);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return arg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hidden-vehicle sensing simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run trials or a sweep");
  std::string config_path;
  std::string sweep_text;
  std::string solver_text = "single2d";
  std::string frontend_text = "parametric";
  std::string out_path;
  int trials = 1;
  int beam_q = 0;
  std::uint64_t seed = 1;
  run->add_option("--config", config_path, "scenario config JSON");
  run->add_option("--sweep", sweep_text, "swept variable, var=v1,v2,...");
  run->add_option("--trials", trials, "trials per sweep point")
      ->check(CLI::PositiveNumber);
  run->add_option("--solver", solver_text,
                  "single2d|single3d|decoupled|disk|box|sphere|cuboid|combine");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_path, "CSV output path");
  run->add_option("--frontend", frontend_text, "parametric|signal");
  run->add_option("--beam", beam_q,
                  "transmissions Q: beamwidth 2*pi/Q, combining slots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    hvsense::SweepSpec spec;
    spec.base = config_path.empty()
                    ? hvsense::default_config(hvsense::Scenario::kHighway)
                    : hvsense::load_config_file(config_path);
    spec.options.solver = hvsense::solver_from_name(solver_text);
    if (frontend_text == "parametric") {
      spec.options.frontend = hvsense::FrontendKind::kParametric;
    } else if (frontend_text == "signal") {
      spec.options.frontend = hvsense::FrontendKind::kSignal;
    } else {
      throw hvsense::ConfigError("unknown frontend: " + frontend_text);
    }
    spec.options.beam_transmissions = beam_q;
    if (!sweep_text.empty()) {
      const SweepArg sweep = parse_sweep(sweep_text);
      spec.variable = sweep.variable;
      spec.values = sweep.values;
    }
    spec.trials_per_point = trials;
    spec.master_seed = seed;

    const hvsense::SweepResult result = hvsense::run_sweep(spec);

    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        throw hvsense::ConfigError("cannot open output file: " + out_path);
      }
      hvsense::write_csv(out, result.rows);
    } else {
      hvsense::write_csv(std::cout, result.rows);
    }
    hvsense::print_summary(std::cerr, result.summary);

    bool any_success = false;
    for (const auto& row : result.rows) any_success |= row.success;
    return any_success ? 0 : 3;
  } catch (const hvsense::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
