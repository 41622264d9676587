// JSON (de)serialization of ScenarioConfig with strict key checking.
#ifndef HVSENSE_CONFIG_IO_HPP
#define HVSENSE_CONFIG_IO_HPP

#include <string>

#include "hvsense/channel.hpp"

namespace hvsense {

/// Parses a config document. Unknown keys are rejected with ConfigError.
/// When "scenario" is present the matching per-scenario defaults seed the
/// remaining fields.
ScenarioConfig config_from_json(const std::string& text);

ScenarioConfig load_config_file(const std::string& path);

std::string config_to_json(const ScenarioConfig& cfg);

/// FNV-1a hash of the canonical serialization, as provenance for records.
std::string config_hash(const ScenarioConfig& cfg);

}  // namespace hvsense

#endif  // HVSENSE_CONFIG_IO_HPP
