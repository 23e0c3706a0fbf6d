#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "pofmkl/engine.hpp"

namespace pofmkl {

inline constexpr int kConfigFormatVersion = 1;

/// Flat `section.key -> value` view of a config file.
///
///   format_version = 1
///   [experiment]
///   algorithm = pof_mkl
///   K = 8
///   [data.synth]
///   generators = 14, 26, 38
///
/// `#` and `;` start comments. Keys before the first section header are
/// top-level (only `format_version`).
struct ConfigFile {
  std::map<std::string, std::string> values;
  std::string source = "<config>";
};

ConfigFile parse_config_text(std::string_view text, const std::string& source = "<config>");
ConfigFile load_config_file(const std::string& path);

/// `key=value` with a dot-path key, e.g. `client.M=25`.
void apply_override(ConfigFile& cfg, std::string_view assignment);

/// Converts and validates. Unknown keys and malformed values raise config
/// errors naming the key.
ExperimentConfig to_experiment_config(const ConfigFile& file);

/// Every field of the resolved config, in a fixed order, in the same text
/// format `parse_config_text` reads. Round-trips through
/// `to_experiment_config`.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a over `canonical_text`.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace pofmkl
