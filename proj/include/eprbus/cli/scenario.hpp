#pragma once

// Scenario files: YAML with sections model|setup, protocol, feedback,
// teleport, verify, oracle, losses, sweep, output. Unknown keys are errors.

#include "eprbus/decoherence.hpp"
#include "eprbus/io_maps.hpp"
#include "eprbus/langevin_oracle.hpp"
#include "eprbus/planner.hpp"
#include "eprbus/protocols.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eprbus::cli {

enum class Protocol { EprConditional, EprFeedback, Verify, Teleport, OracleCompare };
std::string to_string(Protocol protocol);
Protocol protocol_from_string(const std::string& text);

enum class OutputFormat { Json, Csv };
std::string to_string(OutputFormat format);
OutputFormat output_format_from_string(const std::string& text);

struct OracleSettings {
  ModelOptions model;
  bool check_convergence = false;
  int trajectory_stride = 0;
  std::string trajectory_path;  // empty: no trajectory file
};

struct SweepSpec {
  std::string parameter;  // dotted path, e.g. model.kappa
  std::vector<double> values;
};

struct OutputSpec {
  OutputFormat format = OutputFormat::Json;
  std::string path;  // empty: stdout
};

/// Command-line overrides, applied after parsing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> oracle_steps;  // oracle steps per Larmor period
  std::optional<OutputFormat> format;
  std::optional<std::string> out;
};

struct Scenario {
  Protocol protocol = Protocol::EprConditional;
  std::uint64_t seed = 0;
  ProtocolParams params;
  std::optional<PhysicalSetup> setup;  // set when params came from the planner
  std::string preset;                  // setup preset name, if any
  FeedbackConfig feedback{FeedbackMode::FeedbackOptimal, 0.0};
  TeleportConfig teleport = TeleportConfig::asymptotic_limit();
  int verify_shots = 0;
  OracleSettings oracle;
  LossBudget losses;
  std::optional<SweepSpec> sweep;
  OutputSpec output;

  // Every resolved parameter path -> where its value came from:
  // "scenario", "default", "derived", "preset:<name>", "planner" or "cli".
  std::map<std::string, std::string> sources;
  Overrides overrides;
  // The parsed document, kept so sweeps can re-resolve with one field changed.
  YAML::Node document;
};

/// Throws ValidationError naming the offending key on any schema violation.
Scenario parse_scenario(const YAML::Node& document);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::string& path);

void apply_overrides(Scenario& scenario, const Overrides& overrides);

/// Numeric leaf paths that a sweep may vary.
const std::vector<std::string>& sweepable_paths();

/// The scenario re-resolved with `path` set to `value` and the sweep removed.
Scenario with_value(const Scenario& scenario, const std::string& path, double value);

}  // namespace eprbus::cli
