#pragma once

// Executes resolved scenarios and turns the results into JSON / CSV reports.

#include "eprbus/cli/scenario.hpp"
#include "eprbus/sweep.hpp"

#include <json.hpp>

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace eprbus::cli {

inline constexpr int kSchemaVersion = 1;

struct Execution {
  PointResult summary;
  nlohmann::json results;
};

/// One protocol run (the sweep section is ignored).
Execution execute(const Scenario& scenario, std::mt19937_64& rng);

struct SweepRow {
  double value = 0.0;
  PointResult summary;
  nlohmann::json results;
};

/// Every sweep point, in sweep order. Rethrows the first failing point's
/// error (by index). `threads` = 1 runs the serial kernel.
std::vector<SweepRow> execute_sweep(const Scenario& scenario, int threads = 0);

/// Resolved parameters keyed by dotted path, each {value, source}.
nlohmann::json resolved_parameters(const Scenario& scenario);

/// Full report document; the timestamp sits alone under "metadata".
nlohmann::json make_report(const Scenario& scenario, const std::string& command, nlohmann::json results,
                           const std::vector<std::string>& warnings);

nlohmann::json plan_results(const PhysicalSetup& setup);

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_csv(std::ostream& out, const PointResult& single);

}  // namespace eprbus::cli
