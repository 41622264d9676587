#include "hvsense/config_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace hvsense {

namespace {

using nlohmann::json;

Scenario scenario_from_name(const std::string& name) {
  if (name == "highway") return Scenario::kHighway;
  if (name == "rural") return Scenario::kRural;
  throw ConfigError("unknown scenario: " + name);
}

const char* scenario_name(Scenario scenario) {
  return scenario == Scenario::kHighway ? "highway" : "rural";
}

}  // namespace

ScenarioConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ScenarioConfig cfg;
  if (doc.contains("scenario")) {
    cfg = default_config(
        scenario_from_name(doc.at("scenario").get<std::string>()));
  }

  const auto get = [&doc](const char* key, auto& field) {
    if (doc.contains(key)) {
      field = doc.at(key).get<std::decay_t<decltype(field)>>();
    }
  };

  static const std::vector<std::string> known = {
      "scenario",        "road_length",
      "road_width",      "roadside_band",
      "inter_vehicle_distance", "mobile_density",
      "static_density",  "fc",
      "bandwidth",       "tx_power_dbm",
      "noise_power_dbm", "observability_threshold_db",
      "relative_velocity", "rng_seed",
      "vehicle_length",  "vehicle_width",
      "los_enabled",     "multibounce_fraction",
      "reflection_coeff", "path_count",
      "noiseless",       "noise"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  get("road_length", cfg.road_length);
  get("road_width", cfg.road_width);
  get("roadside_band", cfg.roadside_band);
  get("inter_vehicle_distance", cfg.inter_vehicle_distance);
  get("mobile_density", cfg.mobile_density);
  get("static_density", cfg.static_density);
  get("fc", cfg.fc);
  get("bandwidth", cfg.bandwidth);
  get("tx_power_dbm", cfg.tx_power_dbm);
  get("noise_power_dbm", cfg.noise_power_dbm);
  get("observability_threshold_db", cfg.observability_threshold_db);
  get("relative_velocity", cfg.relative_velocity);
  get("rng_seed", cfg.rng_seed);
  get("vehicle_length", cfg.vehicle_length);
  get("vehicle_width", cfg.vehicle_width);
  get("los_enabled", cfg.los_enabled);
  get("multibounce_fraction", cfg.multibounce_fraction);
  get("reflection_coeff", cfg.reflection_coeff);
  get("path_count", cfg.path_count);
  get("noiseless", cfg.noiseless);

  if (doc.contains("noise")) {
    const json& noise = doc.at("noise");
    if (!noise.is_object()) throw ConfigError("noise must be an object");
    static const std::vector<std::string> noise_keys = {
        "angle_sigma_deg", "toa_sigma_s", "ref_snr_db",
        "angle_sigma_floor_deg", "toa_sigma_floor_s"};
    for (const auto& [key, value] : noise.items()) {
      if (std::find(noise_keys.begin(), noise_keys.end(), key) ==
          noise_keys.end()) {
        throw ConfigError("unknown noise key: " + key);
      }
    }
    if (noise.contains("angle_sigma_deg")) {
      cfg.noise.angle_sigma_ref =
          deg2rad(noise.at("angle_sigma_deg").get<double>());
    }
    if (noise.contains("toa_sigma_s")) {
      cfg.noise.toa_sigma_ref = noise.at("toa_sigma_s").get<double>();
    }
    if (noise.contains("ref_snr_db")) {
      cfg.noise.ref_snr_db = noise.at("ref_snr_db").get<double>();
    }
    if (noise.contains("angle_sigma_floor_deg")) {
      cfg.noise.angle_sigma_floor =
          deg2rad(noise.at("angle_sigma_floor_deg").get<double>());
    }
    if (noise.contains("toa_sigma_floor_s")) {
      cfg.noise.toa_sigma_floor = noise.at("toa_sigma_floor_s").get<double>();
    }
  }

  if (cfg.mobile_density < 0.0 || cfg.static_density < 0.0) {
    throw ConfigError("densities must be nonnegative");
  }
  if (cfg.road_length <= cfg.inter_vehicle_distance) {
    throw ConfigError("road_length must exceed inter_vehicle_distance");
  }
  if (cfg.multibounce_fraction < 0.0 || cfg.multibounce_fraction > 1.0) {
    throw ConfigError("multibounce_fraction must lie in [0, 1]");
  }
  if (cfg.reflection_coeff <= 0.0 || cfg.reflection_coeff > 1.0) {
    throw ConfigError("reflection_coeff must lie in (0, 1]");
  }
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::string config_to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["scenario"] = scenario_name(cfg.scenario);
  doc["road_length"] = cfg.road_length;
  doc["road_width"] = cfg.road_width;
  doc["roadside_band"] = cfg.roadside_band;
  doc["inter_vehicle_distance"] = cfg.inter_vehicle_distance;
  doc["mobile_density"] = cfg.mobile_density;
  doc["static_density"] = cfg.static_density;
  doc["fc"] = cfg.fc;
  doc["bandwidth"] = cfg.bandwidth;
  doc["tx_power_dbm"] = cfg.tx_power_dbm;
  doc["noise_power_dbm"] = cfg.noise_power_dbm;
  doc["observability_threshold_db"] = cfg.observability_threshold_db;
  doc["relative_velocity"] = cfg.relative_velocity;
  doc["rng_seed"] = cfg.rng_seed;
  doc["vehicle_length"] = cfg.vehicle_length;
  doc["vehicle_width"] = cfg.vehicle_width;
  doc["los_enabled"] = cfg.los_enabled;
  doc["multibounce_fraction"] = cfg.multibounce_fraction;
  doc["reflection_coeff"] = cfg.reflection_coeff;
  doc["path_count"] = cfg.path_count;
  doc["noiseless"] = cfg.noiseless;
  doc["noise"] = {{"angle_sigma_deg", rad2deg(cfg.noise.angle_sigma_ref)},
                  {"toa_sigma_s", cfg.noise.toa_sigma_ref},
                  {"ref_snr_db", cfg.noise.ref_snr_db},
                  {"angle_sigma_floor_deg",
                   rad2deg(cfg.noise.angle_sigma_floor)},
                  {"toa_sigma_floor_s", cfg.noise.toa_sigma_floor}};
  return doc.dump(2);
}

std::string config_hash(const ScenarioConfig& cfg) {
  const std::string canonical = config_to_json(cfg);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : canonical) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace hvsense
