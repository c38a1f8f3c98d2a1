#include "eprbus/cli/runner.hpp"

#include "eprbus/errors.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace eprbus::cli {

using nlohmann::json;

namespace {

json to_json(const EPRReport& r) {
  return {{"delta_epr", r.delta_epr},
          {"var_xsum", r.var_xsum},
          {"var_pdiff", r.var_pdiff},
          {"entangled", r.entangled},
          {"provenance", to_string(r.provenance)},
          {"corrections", r.corrections}};
}

json to_json(const MeasurementRecord& r) {
  return {{"mode", r.mode.name},
          {"quadrature_angle", r.quadrature_angle},
          {"outcome", r.outcome},
          {"outcome_variance", r.outcome_variance}};
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json state_json(const GaussianState& s) {
  json modes = json::array();
  for (const auto& m : s.modes()) modes.push_back(m.name);
  json mean = json::array();
  for (Eigen::Index i = 0; i < s.mean().size(); ++i) mean.push_back(s.mean()(i));
  return {{"modes", modes}, {"mean", mean}, {"cov", matrix_json(s.cov())}};
}

double relative(double value, double reference) {
  return reference != 0.0 ? (value - reference) / reference : value - reference;
}

EPRReport predicted_report(const ProtocolParams& p) {
  const double d = predict_epr_variance(p.kappa, p.n_i);
  return EPRReport::from_quadratures(0.5 * d, 0.5 * d, Provenance::Predicted);
}

Execution run_generation(const Scenario& sc, std::mt19937_64& rng, FeedbackConfig fb) {
  const ProtocolParams& p = sc.params;
  const EprRun run = run_epr_generation(default_initial_state(p), p, fb, &rng);
  const EPRReport achieved = apply_budget(run.report, sc.losses, p.kappa, p.n_i);
  const EPRReport predicted = predicted_report(p);

  Execution ex;
  ex.summary.delta_predicted = predicted.delta_epr;
  ex.summary.delta_achieved = achieved.delta_epr;
  ex.summary.entangled = achieved.entangled;
  ex.summary.warnings = run.warnings;

  json records = json::array();
  for (const auto& r : run.records) records.push_back(to_json(r));
  ex.results = {{"delta_epr", achieved.delta_epr},
                {"entangled", achieved.entangled},
                {"delta_epr_predicted", predicted.delta_epr},
                {"predicted", to_json(predicted)},
                {"predicted_with_losses", to_json(apply_budget(predicted, sc.losses, p.kappa, p.n_i))},
                {"achieved", to_json(achieved)},
                {"idealized", to_json(run.report)},
                {"feedback_mode", to_string(fb.mode)},
                {"records", records},
                {"state", state_json(partial_trace(run.state, {"mech", "atom"}))}};
  if (fb.mode != FeedbackMode::Conditional) {
    ex.results["gain"] = run.gain;
    if (run.shot_state) {
      ex.results["shot_state"] = state_json(partial_trace(*run.shot_state, {"mech", "atom"}));
    }
  }
  return ex;
}

Execution run_verify(const Scenario& sc, std::mt19937_64& rng) {
  const ProtocolParams& p = sc.params;
  const EprRun run =
      run_epr_generation(default_initial_state(p), p, {FeedbackMode::Conditional, 0.0}, &rng);
  VerifyOptions options;
  options.shots = sc.verify_shots;
  options.rng = &rng;
  const VerificationResult v = verify_epr(run.state, p, options);
  const EPRReport inferred = apply_budget(v.report, sc.losses, p.kappa, p.n_i);
  const EPRReport predicted = predicted_report(p);

  Execution ex;
  ex.summary.delta_predicted = predicted.delta_epr;
  ex.summary.delta_achieved = inferred.delta_epr;
  ex.summary.entangled = inferred.entangled;
  ex.summary.warnings = run.warnings;
  ex.results = {{"delta_epr", inferred.delta_epr},
                {"entangled", inferred.entangled},
                {"delta_epr_predicted", predicted.delta_epr},
                {"generated", to_json(run.report)},
                {"verification", to_json(inferred)},
                {"shots", sc.verify_shots},
                {"post_verification", to_json(v.post_report)}};
  ex.results["standard_error"] = v.standard_error ? json(*v.standard_error) : json(nullptr);
  return ex;
}

Execution run_teleport(const Scenario& sc) {
  const ProtocolParams& p = sc.params;
  // The most likely readout keeps the EPR pair centred; the shared outcome is
  // known to both parties and does not affect the covariance.
  const EprRun run = run_epr_generation(default_initial_state(p), p, {FeedbackMode::Conditional, 0.0});
  const TeleportResult t = teleport(run.state, p, sc.teleport);
  const EPRReport predicted = predicted_report(p);

  Execution ex;
  ex.summary.delta_predicted = predicted.delta_epr;
  ex.summary.delta_achieved = run.report.delta_epr;
  ex.summary.entangled = run.report.entangled;
  ex.summary.fidelity = t.fidelity;
  ex.summary.warnings = run.warnings;
  ex.results = {{"delta_epr", run.report.delta_epr},
                {"entangled", run.report.entangled},
                {"delta_epr_predicted", predicted.delta_epr},
                {"fidelity", t.fidelity},
                {"added_noise_x", t.added_noise_x},
                {"added_noise_p", t.added_noise_p},
                {"asymptotic", sc.teleport.asymptotic},
                {"kappa_qnd", sc.teleport.kappa_qnd},
                {"bell_gain", sc.teleport.bell_gain},
                {"input", state_json(t.input)},
                {"output", state_json(t.final_mech)}};
  return ex;
}

Execution run_compare(const Scenario& sc) {
  const ProtocolParams& p = sc.params;
  const EPRReport predicted = predicted_report(p);
  const EprRun ideal = run_epr_generation(default_initial_state(p), p, {FeedbackMode::Conditional, 0.0});

  const DriftNoiseModel model = build_model(p, sc.oracle.model);
  PropagationOptions prop;
  prop.check_convergence = sc.oracle.check_convergence;
  prop.trajectory_stride = sc.oracle.trajectory_stride;
  const Propagation propagation = propagate_moments(model, prop);
  const EPRReport oracle = oracle_epr_after_measurement(propagation);
  if (!sc.oracle.trajectory_path.empty()) {
    std::ofstream out(sc.oracle.trajectory_path);
    if (!out) throw ValidationError("cannot write trajectory file '" + sc.oracle.trajectory_path + "'");
    write_trajectory_csv(out, propagation.trajectory);
  }

  Execution ex;
  ex.summary.delta_predicted = predicted.delta_epr;
  ex.summary.delta_achieved = oracle.delta_epr;
  ex.summary.entangled = oracle.entangled;
  ex.summary.warnings = ideal.warnings;
  ex.results = {{"delta_epr", oracle.delta_epr},
                {"entangled", oracle.entangled},
                {"delta_epr_predicted", predicted.delta_epr},
                {"predicted", to_json(predicted)},
                {"idealized", to_json(ideal.report)},
                {"oracle", to_json(oracle)},
                {"relative_deviation",
                 {{"idealized", relative(ideal.report.delta_epr, predicted.delta_epr)},
                  {"oracle", relative(oracle.delta_epr, predicted.delta_epr)}}},
                {"oracle_steps", model.steps()},
                {"conservation_drift", propagation.conservation_drift}};
  if (sc.oracle.check_convergence) ex.results["convergence_error"] = propagation.convergence_error;

  const double excess = oracle.delta_epr - predicted.delta_epr;
  if (sc.oracle.model.mismatch && p.eps_mismatch != 0.0) {
    const double penalty = mismatch_penalty(std::abs(p.eps_mismatch), p.kappa, p.n_i);
    ex.results["mismatch"] = {{"eps", p.eps_mismatch},
                              {"excess", excess},
                              {"penalty", penalty},
                              {"ratio", excess / penalty}};
  }
  if (sc.oracle.model.damping && p.gamma_m > 0.0) {
    const double gamma_m_tau = p.gamma_m * p.tau;
    const double penalty = 2.0 * damping_penalty(gamma_m_tau, p.n_th);
    ex.results["damping"] = {{"gamma_m_tau", gamma_m_tau},
                             {"excess", excess},
                             {"penalty", penalty},
                             {"ratio", excess / penalty},
                             {"perturbative", damping_is_perturbative(gamma_m_tau, p.n_th)}};
  }
  return ex;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void write_csv_row(std::ostream& out, const std::string& value, const PointResult& r) {
  out << value << ',' << format_double(r.delta_predicted) << ',' << format_double(r.delta_achieved) << ','
      << (r.entangled ? "true" : "false") << ',';
  if (r.fidelity) out << format_double(*r.fidelity);
  out << '\n';
}

constexpr const char* kCsvHeader = "value,delta_epr_predicted,delta_epr_achieved,entangled,fidelity\n";

}  // namespace

Execution execute(const Scenario& sc, std::mt19937_64& rng) {
  switch (sc.protocol) {
    case Protocol::EprConditional: return run_generation(sc, rng, {FeedbackMode::Conditional, 0.0});
    case Protocol::EprFeedback: {
      FeedbackConfig fb = sc.feedback;
      if (fb.mode == FeedbackMode::Conditional) {
        throw ValidationError("protocol EprFeedback needs feedback.mode Feedback or FeedbackOptimal");
      }
      return run_generation(sc, rng, fb);
    }
    case Protocol::Verify: return run_verify(sc, rng);
    case Protocol::Teleport: return run_teleport(sc);
    case Protocol::OracleCompare: return run_compare(sc);
  }
  throw ValidationError("unknown protocol");
}

std::vector<SweepRow> execute_sweep(const Scenario& sc, int threads) {
  if (!sc.sweep) throw ValidationError("scenario has no 'sweep' section");
  const SweepSpec& spec = *sc.sweep;
  // Resolve every point up front; the YAML document is not shared across threads.
  std::vector<Scenario> points;
  points.reserve(spec.values.size());
  for (double v : spec.values) points.push_back(with_value(sc, spec.parameter, v));

  std::vector<json> details(points.size());
  const PointEvaluator evaluate = [&](std::size_t i, std::mt19937_64& rng) {
    Execution ex = execute(points[i], rng);
    details[i] = std::move(ex.results);
    return ex.summary;
  };
  const auto outcomes = threads == 1 ? sweep_serial(points.size(), evaluate, sc.seed)
                                     : sweep_parallel(points.size(), evaluate, sc.seed, threads);
  std::vector<SweepRow> rows;
  rows.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const std::string where = "sweep point " + std::to_string(i) + " (" + spec.parameter + " = " +
                              format_double(spec.values[i]) + "): ";
    if (o.error == PointError::Validation) throw ValidationError(where + o.message);
    if (o.error == PointError::Numerical) throw NumericalError(where + o.message);
    rows.push_back({spec.values[i], *o.result, std::move(details[i])});
  }
  return rows;
}

json resolved_parameters(const Scenario& sc) {
  json values;
  const ProtocolParams& p = sc.params;
  values["seed"] = sc.seed;
  values["protocol"] = to_string(sc.protocol);
  values["model.kappa"] = p.kappa;
  values["model.n_i"] = p.n_i;
  values["model.omega_tau"] = p.omega_tau();
  values["model.g"] = p.g;
  values["model.gamma_c"] = p.gamma_c;
  values["model.omega_m"] = p.omega_m;
  values["model.Omega"] = p.Omega;
  values["model.tau"] = p.tau;
  values["model.gamma_m"] = p.gamma_m;
  values["model.n_th"] = p.n_th;
  values["model.eps_mismatch"] = p.eps_mismatch;
  values["model.eta_light"] = p.eta_light;
  values["model.eta_det"] = p.eta_det;
  if (sc.setup) {
    const PhysicalSetup& s = *sc.setup;
    values["setup.mech.omega_m"] = s.mech.omega_m;
    values["setup.mech.mass"] = s.mech.mass;
    values["setup.mech.Q_m"] = s.mech.Q_m;
    values["setup.mech.T"] = s.mech.T;
    values["setup.cavity.finesse"] = s.cavity.finesse;
    values["setup.cavity.length"] = s.cavity.length;
    values["setup.cavity.wavelength"] = s.cavity.wavelength;
    values["setup.cavity.power"] = s.cavity.power;
    values["setup.cavity.tau"] = s.cavity.tau;
    values["setup.atoms.Gamma"] = s.atoms.Gamma;
    values["setup.atoms.Delta"] = s.atoms.Delta;
    values["setup.atoms.sigma"] = s.atoms.sigma;
    values["setup.atoms.A"] = s.atoms.A;
    values["setup.atoms.N_at"] = s.atoms.N_at;
    values["setup.atoms.Omega"] = s.atoms.Omega;
    values["setup.cooling_factor"] = s.cooling_factor;
  }
  values["feedback.mode"] = to_string(sc.feedback.mode);
  values["feedback.gain"] = sc.feedback.gain;
  values["teleport.kappa_qnd"] = sc.teleport.kappa_qnd;
  values["teleport.bell_gain"] = sc.teleport.bell_gain;
  values["teleport.asymptotic"] = sc.teleport.asymptotic;
  values["teleport.input_mean"] = {sc.teleport.input_mean.first, sc.teleport.input_mean.second};
  values["verify.shots"] = sc.verify_shots;
  values["oracle.damping"] = sc.oracle.model.damping;
  values["oracle.mismatch"] = sc.oracle.model.mismatch;
  values["oracle.check_convergence"] = sc.oracle.check_convergence;
  values["oracle.steps_per_period"] = sc.oracle.model.steps_per_period;
  values["oracle.min_steps"] = sc.oracle.model.min_steps;
  values["oracle.trajectory_stride"] = sc.oracle.trajectory_stride;
  values["losses.eps_mismatch"] = sc.losses.eps_mismatch;
  values["losses.photon_loss"] = sc.losses.photon_loss;
  values["losses.gamma_m_tau"] = sc.losses.gamma_m_tau;
  values["losses.n_th"] = sc.losses.n_th;

  json out = json::object();
  for (auto& [path, value] : values.items()) {
    const auto it = sc.sources.find(path);
    out[path] = {{"value", value}, {"source", it != sc.sources.end() ? it->second : "derived"}};
  }
  return out;
}

json make_report(const Scenario& sc, const std::string& command, json results,
                 const std::vector<std::string>& warnings) {
  json report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = command;
  report["protocol"] = to_string(sc.protocol);
  report["seed"] = sc.seed;
  if (!sc.preset.empty()) report["preset"] = sc.preset;
  report["parameters"] = resolved_parameters(sc);
  report["results"] = std::move(results);
  report["warnings"] = warnings;

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  report["metadata"] = {{"generated_at", stamp.str()}};
  return report;
}

json plan_results(const PhysicalSetup& setup) {
  const PlannedParams planned = derive_params(setup);
  const DerivedQuantities& d = planned.report.derived;
  json checks = json::array();
  for (const auto& c : planned.report.checks) {
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"note", c.note}});
  }
  const CoherenceBudget budget = coherence_budget(setup);
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };

  json solves;
  auto attempt = [&](const char* key, auto&& solve) {
    try {
      solves[key] = solve();
    } catch (const NumericalError& e) {
      solves[key] = nullptr;
      solves[std::string(key) + "_note"] = e.what();
    }
  };
  attempt("finesse", [&] { return solve_finesse_for_matching(setup); });
  attempt("N_at", [&] { return solve_atom_number_for_matching(setup); });
  attempt("power", [&] { return solve_power_for_matching(setup); });

  return {{"derived",
           {{"x0", d.x0},
            {"omega_c", d.omega_c},
            {"gamma_c", d.gamma_c},
            {"g0", d.g0},
            {"n_ph", d.n_ph},
            {"alpha", d.alpha},
            {"g", d.g},
            {"kappa_atomic", d.kappa_atomic},
            {"kappa_optical", d.kappa_optical},
            {"n_th", d.n_th},
            {"n_i", d.n_i},
            {"gamma_m", d.gamma_m},
            {"eps", d.eps},
            {"matching_degenerate", d.matching_degenerate}}},
          {"checks", checks},
          {"all_pass", planned.report.all_pass()},
          {"coherence_budget",
           {{"tau_bound", finite_or_null(budget.tau_bound)},
            {"tau_max", finite_or_null(budget.tau_max)},
            {"tau_min", budget.tau_min},
            {"limiting", to_string(budget.limiting)}}},
          {"matching_solves", solves}};
}

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kCsvHeader;
  for (const auto& r : rows) write_csv_row(out, format_double(r.value), r.summary);
}

void write_csv(std::ostream& out, const PointResult& single) {
  out << kCsvHeader;
  write_csv_row(out, "", single);
}

}  // namespace eprbus::cli
