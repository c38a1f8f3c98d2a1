#include "eprbus/cli/scenario.hpp"

#include "eprbus/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace eprbus::cli {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads one YAML mapping, remembering which keys were consumed so that
// leftovers can be reported.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ValidationError("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be a mapping");
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  std::string path(const std::string& key) const { return join(path_, key); }

  std::optional<double> number(const std::string& key) {
    const YAML::Node v = take(key);
    if (!v) return std::nullopt;
    double out = 0.0;
    if (!v.IsScalar() || !YAML::convert<double>::decode(v, out) || !std::isfinite(out)) {
      throw ValidationError("'" + path(key) + "' must be a finite number");
    }
    return out;
  }

  std::optional<long long> integer(const std::string& key) {
    const YAML::Node v = take(key);
    if (!v) return std::nullopt;
    long long out = 0;
    if (!v.IsScalar() || !YAML::convert<long long>::decode(v, out)) {
      throw ValidationError("'" + path(key) + "' must be an integer");
    }
    return out;
  }

  std::optional<bool> boolean(const std::string& key) {
    const YAML::Node v = take(key);
    if (!v) return std::nullopt;
    bool out = false;
    if (!v.IsScalar() || !YAML::convert<bool>::decode(v, out)) {
      throw ValidationError("'" + path(key) + "' must be true or false");
    }
    return out;
  }

  std::optional<std::string> text(const std::string& key) {
    const YAML::Node v = take(key);
    if (!v) return std::nullopt;
    if (!v.IsScalar()) throw ValidationError("'" + path(key) + "' must be a string");
    return v.Scalar();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const YAML::Node v = take(key);
    if (!v) return std::nullopt;
    if (!v.IsSequence()) throw ValidationError("'" + path(key) + "' must be a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double x = 0.0;
      if (!v[i].IsScalar() || !YAML::convert<double>::decode(v[i], x) || !std::isfinite(x)) {
        throw ValidationError("'" + path(key) + "[" + std::to_string(i) + "]' must be a finite number");
      }
      out.push_back(x);
    }
    return out;
  }

  YAML::Node section(const std::string& key) { return take(key); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.contains(key)) throw ValidationError("unknown key '" + path(key) + "'");
    }
  }

 private:
  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node v = node_[key];
    if (!v || v.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return v;
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// Reads an optional number into `target`, recording where the value came from.
class Resolver {
 public:
  explicit Resolver(std::map<std::string, std::string>& sources) : sources_(sources) {}

  bool read(MapReader& r, const std::string& key, double& target, const std::string& fallback_source) {
    if (const auto v = r.number(key)) {
      target = *v;
      sources_[r.path(key)] = "scenario";
      return true;
    }
    sources_[r.path(key)] = fallback_source;
    return false;
  }

  void set(const std::string& path, const std::string& source) { sources_[path] = source; }

 private:
  std::map<std::string, std::string>& sources_;
};

ProtocolParams parse_model(const YAML::Node& node, Resolver& res) {
  MapReader r(node, "model");
  double kappa = 1.0;
  double n_i = 0.0;
  double omega_tau = 400.0;
  res.read(r, "kappa", kappa, "default");
  res.read(r, "n_i", n_i, "default");
  res.read(r, "omega_tau", omega_tau, "default");
  if (!(kappa >= 0.0)) throw ValidationError("'model.kappa' must be non-negative");
  if (!(n_i >= 0.0)) throw ValidationError("'model.n_i' must be non-negative");
  if (!(omega_tau > 0.0)) throw ValidationError("'model.omega_tau' must be positive");

  ProtocolParams p = ProtocolParams::matched(kappa, n_i, omega_tau);
  const bool tau_set = res.read(r, "tau", p.tau, "default");
  if (!(p.tau > 0.0)) throw ValidationError("'model.tau' must be positive");
  if (tau_set) {
    p.Omega = omega_tau / p.tau;
    p.omega_m = omega_tau / p.tau;
  }
  res.read(r, "gamma_c", p.gamma_c, "derived");
  p.g = kappa * std::sqrt(p.gamma_c / p.tau);
  res.read(r, "g", p.g, "derived");
  res.read(r, "omega_m", p.omega_m, "derived");
  res.read(r, "Omega", p.Omega, "derived");
  res.read(r, "gamma_m", p.gamma_m, "default");
  res.read(r, "n_th", p.n_th, "default");
  res.read(r, "eps_mismatch", p.eps_mismatch, "default");
  res.read(r, "eta_light", p.eta_light, "default");
  res.read(r, "eta_det", p.eta_det, "default");
  r.finish();
  p.validate();
  return p;
}

PhysicalSetup parse_setup(const YAML::Node& node, Resolver& res, std::string& preset) {
  MapReader r(node, "setup");
  PhysicalSetup s;
  std::string base = "default";
  if (const auto name = r.text("preset")) {
    if (*name == "micromirror") {
      s = PhysicalSetup::micromirror();
    } else if (*name == "membrane") {
      s = PhysicalSetup::membrane();
    } else {
      throw ValidationError("unknown setup.preset '" + *name + "' (expected micromirror or membrane)");
    }
    preset = *name;
    base = "preset:" + *name;
  } else {
    s = PhysicalSetup::micromirror();
    base = "default";
  }
  const bool omega_m_set = [&] {
    MapReader m(r.section("mech"), "setup.mech");
    const bool set = res.read(m, "omega_m", s.mech.omega_m, base);
    res.read(m, "mass", s.mech.mass, base);
    res.read(m, "Q_m", s.mech.Q_m, base);
    res.read(m, "T", s.mech.T, base);
    m.finish();
    return set;
  }();
  {
    MapReader c(r.section("cavity"), "setup.cavity");
    res.read(c, "finesse", s.cavity.finesse, base);
    res.read(c, "length", s.cavity.length, base);
    res.read(c, "wavelength", s.cavity.wavelength, base);
    res.read(c, "power", s.cavity.power, base);
    res.read(c, "tau", s.cavity.tau, base);
    c.finish();
  }
  {
    MapReader a(r.section("atoms"), "setup.atoms");
    res.read(a, "Gamma", s.atoms.Gamma, base);
    res.read(a, "Delta", s.atoms.Delta, base);
    res.read(a, "sigma", s.atoms.sigma, base);
    res.read(a, "A", s.atoms.A, base);
    res.read(a, "N_at", s.atoms.N_at, base);
    // The Larmor frequency follows the mechanics unless given.
    if (!res.read(a, "Omega", s.atoms.Omega, base) && omega_m_set) {
      s.atoms.Omega = s.mech.omega_m;
      res.set("setup.atoms.Omega", "derived");
    }
    a.finish();
  }
  res.read(r, "cooling_factor", s.cooling_factor, base);
  r.finish();
  s.validate();
  return s;
}

void record_params(const ProtocolParams& p, Resolver& res, const std::string& source) {
  for (const char* key : {"kappa", "n_i", "g", "gamma_c", "omega_m", "Omega", "tau", "gamma_m", "n_th",
                          "eps_mismatch", "eta_light", "eta_det"}) {
    res.set(std::string("model.") + key, source);
  }
  (void)p;
}

}  // namespace

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::EprConditional: return "EprConditional";
    case Protocol::EprFeedback: return "EprFeedback";
    case Protocol::Verify: return "Verify";
    case Protocol::Teleport: return "Teleport";
    case Protocol::OracleCompare: return "OracleCompare";
  }
  return "Unknown";
}

Protocol protocol_from_string(const std::string& text) {
  for (Protocol p : {Protocol::EprConditional, Protocol::EprFeedback, Protocol::Verify, Protocol::Teleport,
                     Protocol::OracleCompare}) {
    if (to_string(p) == text) return p;
  }
  throw ValidationError("unknown protocol '" + text +
                        "' (expected EprConditional, EprFeedback, Verify, Teleport or OracleCompare)");
}

std::string to_string(OutputFormat format) { return format == OutputFormat::Json ? "json" : "csv"; }

OutputFormat output_format_from_string(const std::string& text) {
  if (text == "json") return OutputFormat::Json;
  if (text == "csv") return OutputFormat::Csv;
  throw ValidationError("unknown output format '" + text + "' (expected json or csv)");
}

Scenario parse_scenario(const YAML::Node& document) {
  if (!document || document.IsNull()) throw ValidationError("scenario is empty");
  Scenario sc;
  sc.document = YAML::Clone(document);
  Resolver res(sc.sources);
  MapReader root(document, "");

  const auto protocol = root.text("protocol");
  if (!protocol) throw ValidationError("missing required key 'protocol'");
  sc.protocol = protocol_from_string(*protocol);

  if (const auto seed = root.integer("seed")) {
    if (*seed < 0) throw ValidationError("'seed' must be non-negative");
    sc.seed = static_cast<std::uint64_t>(*seed);
    res.set("seed", "scenario");
  } else {
    res.set("seed", "default");
  }

  const bool has_model = root.has("model");
  const bool has_setup = root.has("setup");
  if (has_model == has_setup) throw ValidationError("scenario needs exactly one of 'model' or 'setup'");
  if (has_model) {
    sc.params = parse_model(root.section("model"), res);
    root.section("setup");
  } else {
    sc.setup = parse_setup(root.section("setup"), res, sc.preset);
    sc.params = derive_params(*sc.setup).params;
    record_params(sc.params, res, "planner");
    root.section("model");
  }

  {
    MapReader r(root.section("feedback"), "feedback");
    if (const auto mode = r.text("mode")) {
      sc.feedback.mode = feedback_mode_from_string(*mode);
      res.set("feedback.mode", "scenario");
    } else {
      res.set("feedback.mode", "default");
    }
    if (res.read(r, "gain", sc.feedback.gain, "default")) {
      if (!(sc.feedback.gain >= 0.0)) throw ValidationError("'feedback.gain' must be non-negative");
      if (!r.has("mode")) sc.feedback.mode = FeedbackMode::Feedback;
    }
    r.finish();
  }
  {
    MapReader r(root.section("teleport"), "teleport");
    double kappa_qnd = 0.0;
    const bool finite = res.read(r, "kappa_qnd", kappa_qnd, "default");
    std::pair<double, double> mean{0.0, 0.0};
    if (const auto m = r.numbers("input_mean")) {
      if (m->size() != 2) throw ValidationError("'teleport.input_mean' must hold two numbers [x, p]");
      mean = {(*m)[0], (*m)[1]};
      res.set("teleport.input_mean", "scenario");
    } else {
      res.set("teleport.input_mean", "default");
    }
    sc.teleport = finite ? TeleportConfig::finite(kappa_qnd, mean) : TeleportConfig::asymptotic_limit(mean);
    res.read(r, "bell_gain", sc.teleport.bell_gain, finite ? "derived" : "default");
    if (const auto asym = r.boolean("asymptotic")) {
      sc.teleport.asymptotic = *asym;
      res.set("teleport.asymptotic", "scenario");
    } else {
      res.set("teleport.asymptotic", finite ? "derived" : "default");
    }
    r.finish();
    sc.teleport.validate();
  }
  {
    MapReader r(root.section("verify"), "verify");
    if (const auto shots = r.integer("shots")) {
      if (*shots < 0 || *shots == 1 || *shots > 100000000) {
        throw ValidationError("'verify.shots' must be 0 or between 2 and 1e8");
      }
      sc.verify_shots = static_cast<int>(*shots);
      res.set("verify.shots", "scenario");
    } else {
      res.set("verify.shots", "default");
    }
    r.finish();
  }
  {
    MapReader r(root.section("oracle"), "oracle");
    auto flag = [&](const char* key, bool fallback, const char* fallback_source) {
      if (const auto v = r.boolean(key)) {
        res.set(r.path(key), "scenario");
        return *v;
      }
      res.set(r.path(key), fallback_source);
      return fallback;
    };
    auto count = [&](const char* key, int fallback, int minimum) {
      if (const auto v = r.integer(key)) {
        if (*v < minimum || *v > 100000000) {
          throw ValidationError("'" + r.path(key) + "' must be an integer >= " + std::to_string(minimum));
        }
        res.set(r.path(key), "scenario");
        return static_cast<int>(*v);
      }
      res.set(r.path(key), "default");
      return fallback;
    };
    sc.oracle.model.damping = flag("damping", sc.params.gamma_m > 0.0, "derived");
    sc.oracle.model.mismatch = flag("mismatch", sc.params.eps_mismatch != 0.0, "derived");
    sc.oracle.check_convergence = flag("check_convergence", false, "default");
    sc.oracle.model.steps_per_period = count("steps_per_period", sc.oracle.model.steps_per_period, 1);
    sc.oracle.model.min_steps = count("min_steps", sc.oracle.model.min_steps, 1);
    sc.oracle.trajectory_stride = count("trajectory_stride", 0, 0);
    if (const auto path = r.text("trajectory_path")) {
      sc.oracle.trajectory_path = *path;
      if (sc.oracle.trajectory_stride == 0) sc.oracle.trajectory_stride = 1;
    }
    r.finish();
  }
  {
    MapReader r(root.section("losses"), "losses");
    res.read(r, "eps_mismatch", sc.losses.eps_mismatch, "default");
    res.read(r, "photon_loss", sc.losses.photon_loss, "default");
    res.read(r, "gamma_m_tau", sc.losses.gamma_m_tau, "default");
    sc.losses.n_th = sc.params.n_th;
    res.read(r, "n_th", sc.losses.n_th, "derived");
    r.finish();
    sc.losses.validate();
  }
  if (root.has("sweep")) {
    MapReader r(root.section("sweep"), "sweep");
    SweepSpec spec;
    const auto parameter = r.text("parameter");
    if (!parameter) throw ValidationError("missing required key 'sweep.parameter'");
    const auto& paths = sweepable_paths();
    if (std::find(paths.begin(), paths.end(), *parameter) == paths.end()) {
      throw ValidationError("'sweep.parameter' = '" + *parameter + "' is not a numeric scenario field");
    }
    const std::string section = parameter->substr(0, parameter->find('.'));
    if ((section == "model" && !has_model) || (section == "setup" && !has_setup)) {
      throw ValidationError("'sweep.parameter' = '" + *parameter + "' refers to a section the scenario does not use");
    }
    spec.parameter = *parameter;
    const auto values = r.numbers("values");
    if (!values || values->empty()) throw ValidationError("'sweep.values' must be a non-empty list");
    spec.values = *values;
    r.finish();
    sc.sweep = spec;
  } else {
    root.section("sweep");
  }
  {
    MapReader r(root.section("output"), "output");
    if (const auto f = r.text("format")) sc.output.format = output_format_from_string(*f);
    if (const auto p = r.text("path")) sc.output.path = *p;
    r.finish();
  }
  root.finish();
  return sc;
}

Scenario parse_scenario_text(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("scenario is not valid YAML: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

void apply_overrides(Scenario& scenario, const Overrides& overrides) {
  if (overrides.seed) {
    scenario.seed = *overrides.seed;
    scenario.sources["seed"] = "cli";
  }
  if (overrides.oracle_steps) {
    if (*overrides.oracle_steps < 1) throw ValidationError("--oracle-steps must be positive");
    scenario.oracle.model.steps_per_period = *overrides.oracle_steps;
    scenario.sources["oracle.steps_per_period"] = "cli";
  }
  if (overrides.format) scenario.output.format = *overrides.format;
  if (overrides.out) scenario.output.path = *overrides.out;
  scenario.overrides = overrides;
}

const std::vector<std::string>& sweepable_paths() {
  static const std::vector<std::string> paths{
      "seed",
      "model.kappa", "model.n_i", "model.omega_tau", "model.tau", "model.g", "model.gamma_c",
      "model.omega_m", "model.Omega", "model.gamma_m", "model.n_th", "model.eps_mismatch",
      "model.eta_light", "model.eta_det",
      "setup.mech.omega_m", "setup.mech.mass", "setup.mech.Q_m", "setup.mech.T",
      "setup.cavity.finesse", "setup.cavity.length", "setup.cavity.wavelength", "setup.cavity.power",
      "setup.cavity.tau",
      "setup.atoms.Gamma", "setup.atoms.Delta", "setup.atoms.sigma", "setup.atoms.A", "setup.atoms.N_at",
      "setup.atoms.Omega", "setup.cooling_factor",
      "feedback.gain",
      "teleport.kappa_qnd", "teleport.bell_gain",
      "verify.shots",
      "oracle.steps_per_period", "oracle.min_steps",
      "losses.eps_mismatch", "losses.photon_loss", "losses.gamma_m_tau", "losses.n_th"};
  return paths;
}

Scenario with_value(const Scenario& scenario, const std::string& path, double value) {
  YAML::Node doc = YAML::Clone(scenario.document);
  doc.remove("sweep");
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);

  const bool integral = path == "seed" || path == "verify.shots" || path.rfind("oracle.", 0) == 0;
  if (integral && value != std::floor(value)) {
    throw ValidationError("'" + path + "' needs integer sweep values");
  }
  // Walk down by reassigning the node handle, creating sections as needed.
  std::vector<YAML::Node> chain{doc};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node child = chain.back()[parts[i]];
    if (!child || child.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      child = chain.back()[parts[i]];
    }
    chain.push_back(child);
  }
  if (integral) {
    chain.back()[parts.back()] = static_cast<long long>(value);
  } else {
    chain.back()[parts.back()] = value;
  }
  Scenario out = parse_scenario(doc);
  apply_overrides(out, scenario.overrides);
  out.sources[path] = "sweep";
  return out;
}

}  // namespace eprbus::cli
