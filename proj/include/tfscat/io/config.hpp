#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfscat/scalerate.hpp"
#include "tfscat/scattering.hpp"
#include "tfscat/synthesis.hpp"

namespace tfs::io {

using nlohmann::json;

inline constexpr const char* kToolName = "tfscat";
inline constexpr const char* kToolVersion = "0.1.0";

// Conversions to and from JSON objects. The readers start from `base` and
// overwrite only the keys that are present; unknown keys and mistyped values
// throw ConfigError.

json to_json(const ScatteringConfig& cfg);
ScatteringConfig scattering_config_from_json(const json& j, ScatteringConfig base = {});

json to_json(const SynthesisOptions& opts);
SynthesisOptions synthesis_options_from_json(const json& j, SynthesisOptions base = {});

json to_json(const ScatteringPath& path);
ScatteringPath path_from_json(const json& j);

// Effect descriptions:
//
//   {"primitives": [
//      {"type": "beta_flip_mix", "schedule": {"kind": "sigmoid", "tau": 1.5, "origin": 2.0}},
//      {"type": "translate", "axis": "lambda", "steps": -12, "order": 0},
//      {"type": "gain", "factor": 0.5, "order": 2}]}
//
// A schedule is {"kind": "constant", "sigma": s} or {"kind": "sigmoid", "tau": s, "origin": s}.
json to_json(const CoefficientFunctional& f);
CoefficientFunctional functional_from_json(const json& j);
CoefficientFunctional read_functional(const std::filesystem::path& path);

inline constexpr int kMaxJsonDepth = 64;

/// Parses a JSON document; syntax errors and nesting beyond kMaxJsonDepth
/// throw DataError naming `what`.
json parse_json(std::string_view text, const std::string& what);
json read_json(const std::filesystem::path& path);

/// {"tool": ..., "version": ...} merged with `extra`.
json provenance(const json& extra = json::object());

struct ExportFlags {
  bool coefficients = false;
  bool loss_trace = true;
  bool snapshots = false;
  bool spectrogram = true;
};

struct JobConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output_dir = ".";
  ScatteringConfig scattering;
  SynthesisOptions synthesis;
  std::optional<std::filesystem::path> effect;
  ExportFlags exports;
  std::size_t threads = 0;  ///< 0 keeps the default
  std::size_t jobs = 1;     ///< inputs processed concurrently

  /// Checks ranges, that inputs and the effect file exist, and that the
  /// output directory can be created and written. Throws ConfigError.
  void validate() const;
};

json to_json(const JobConfig& job);
JobConfig job_config_from_json(const json& j, JobConfig base = {});

}  // namespace tfs::io
