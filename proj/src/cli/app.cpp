#include "eprbus/cli/app.hpp"

#include "eprbus/cli/runner.hpp"
#include "eprbus/cli/scenario.hpp"
#include "eprbus/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace eprbus::cli {

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<int> oracle_steps;
  int threads = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file (YAML)")->required();
  cmd->add_option("--out", o.out, "Write the report here instead of stdout");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--oracle-steps", o.oracle_steps, "Oracle steps per Larmor period")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "Sweep threads (0: OpenMP default, 1: serial)")
      ->check(CLI::NonNegativeNumber);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot write report to '" + path + "'");
  file << text;
}

std::string render_sweep(const Scenario& sc, const std::string& command, int threads) {
  const std::vector<SweepRow> rows = execute_sweep(sc, threads);
  std::ostringstream text;
  if (sc.output.format == OutputFormat::Csv) {
    write_csv(text, rows);
    return text.str();
  }
  nlohmann::json points = nlohmann::json::array();
  std::vector<std::string> warnings;
  for (const auto& r : rows) {
    nlohmann::json point = {{"value", r.value},
                            {"delta_epr_predicted", r.summary.delta_predicted},
                            {"delta_epr_achieved", r.summary.delta_achieved},
                            {"entangled", r.summary.entangled},
                            {"details", r.results}};
    point["fidelity"] = r.summary.fidelity ? nlohmann::json(*r.summary.fidelity) : nlohmann::json(nullptr);
    points.push_back(std::move(point));
    warnings.insert(warnings.end(), r.summary.warnings.begin(), r.summary.warnings.end());
  }
  nlohmann::json results = {{"parameter", sc.sweep->parameter}, {"points", points}};
  text << make_report(sc, command, std::move(results), warnings).dump(2) << '\n';
  return text.str();
}

std::string render_single(const Scenario& sc, const std::string& command) {
  auto rng = point_rng(sc.seed, 0);
  const Execution ex = execute(sc, rng);
  std::ostringstream text;
  if (sc.output.format == OutputFormat::Csv) {
    write_csv(text, ex.summary);
  } else {
    text << make_report(sc, command, ex.results, ex.summary.warnings).dump(2) << '\n';
  }
  return text.str();
}

std::string render_plan(const Scenario& sc) {
  if (!sc.setup) throw ValidationError("plan needs a scenario with a 'setup' section");
  if (sc.output.format == OutputFormat::Csv) throw ValidationError("plan reports are JSON only");
  const nlohmann::json results = plan_results(*sc.setup);
  std::vector<std::string> warnings;
  for (const auto& c : results["checks"]) {
    if (c["status"] != "pass") {
      warnings.push_back(c["name"].get<std::string>() + ": " + c["status"].get<std::string>());
    }
  }
  return make_report(sc, "plan", results, warnings).dump(2) + "\n";
}

struct Rendered {
  std::string text;
  std::string path;
};

std::string render(const std::string& command, const Scenario& sc, int threads) {
  if (command == "plan") return render_plan(sc);
  if (command == "compare" && sc.protocol != Protocol::OracleCompare) {
    throw ValidationError("compare needs protocol OracleCompare");
  }
  if (command == "sweep" && !sc.sweep) throw ValidationError("sweep needs a 'sweep' section");
  if (sc.sweep) return render_sweep(sc, command, threads);
  return render_single(sc, command);
}

Rendered dispatch(const std::string& command, const Options& o) {
  Scenario sc = load_scenario(o.scenario);
  Overrides ov;
  ov.seed = o.seed;
  ov.oracle_steps = o.oracle_steps;
  if (!o.format.empty()) ov.format = output_format_from_string(o.format);
  if (!o.out.empty()) ov.out = o.out;
  apply_overrides(sc, ov);
  return {render(command, sc, o.threads), sc.output.path};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mechanical-atomic EPR generation over a light bus"};
  app.require_subcommand(1);
  Options options;
  std::string command;
  for (const char* name : {"run", "compare", "plan", "sweep"}) {
    static const std::map<std::string, std::string> help{
        {"run", "Run the scenario's protocol (or its sweep)"},
        {"compare", "Idealized map vs oracle vs closed form"},
        {"plan", "Derive parameters and feasibility from a physical setup"},
        {"sweep", "Run the scenario's sweep section"}};
    CLI::App* cmd = app.add_subcommand(name, help.at(name));
    add_common(cmd, options);
    cmd->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const Rendered r = dispatch(command, options);
    emit(r.text, r.path, out);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const YAML::Exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace eprbus::cli
