// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// non-zero when any selected criterion fails.
//
//   acceptance                 all criteria
//   acceptance --criterion 6   a single one

#include "eprbus/cli/app.hpp"
#include "eprbus/cli/scenario.hpp"
#include "eprbus/decoherence.hpp"
#include "eprbus/langevin_oracle.hpp"
#include "eprbus/planner.hpp"
#include "eprbus/protocols.hpp"
#include "eprbus/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#ifndef EPRBUS_SCENARIO_DIR
#define EPRBUS_SCENARIO_DIR "scenarios"
#endif

using namespace eprbus;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

GaussianState thermal_pair(double n_i) {
  const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical(), n_i, 0.0, 0.0},
                                      ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  return make_state(specs);
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

const std::array<double, 6> kKappaGrid{0.25, 0.5, M_SQRT1_2, 1.0, 2.0, 5.0};
const std::array<double, 5> kOccupationGrid{0.0, 1.0, 30.0, 850.0, 1e4};

Verdict closed_form_pipeline() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double k : kKappaGrid) {
    for (double n : kOccupationGrid) {
      const auto run = run_epr_generation(thermal_pair(n), ProtocolParams::matched(k, n), {});
      worst = std::max(worst, std::abs(run.report.delta_epr - predict_epr_variance(k, n)));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && elapsed < 1.0, fmt("max |delta - closed form| = %.2e over 30 points in %.3f s", worst, elapsed)};
}

std::vector<ProtocolParams> oracle_grid() {
  std::vector<ProtocolParams> points;
  for (double k : {0.5, 1.0, 2.0}) {
    for (double n : {0.0, 30.0, 850.0}) points.push_back(ProtocolParams::matched(k, n, 200.0));
  }
  return points;
}

Verdict oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const auto points = oracle_grid();
  const auto oracle = oracle_sweep_parallel(points);
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double ref = predict_epr_variance(points[i].kappa, points[i].n_i);
    worst = std::max(worst, std::abs(oracle[i] - ref) / ref);
  }
  const double elapsed = seconds_since(start);
  return {worst < 0.02 && elapsed < 60.0,
          fmt("max relative deviation %.3e over 9 points (omega tau = 200) in %.2f s", worst, elapsed)};
}

Verdict conservation() {
  double worst = 0.0;
  PropagationOptions opt;
  opt.trajectory_stride = 1;
  for (const auto& p : oracle_grid()) {
    worst = std::max(worst, propagate_moments(build_model(p), opt).conservation_drift);
  }
  return {worst < 1e-6, fmt("max relative drift of Var(X_m+X_a), Var(P_m-P_a) = %.2e", worst)};
}

Eigen::Matrix2d epr_block(const GaussianState& s) {
  const auto m = static_cast<Eigen::Index>(s.x_index("mech"));
  const auto a = static_cast<Eigen::Index>(s.x_index("atom"));
  Matrix t = Matrix::Zero(2, s.cov().rows());
  t(0, m) = t(0, a) = 1.0;
  t(1, m + 1) = 1.0;
  t(1, a + 1) = -1.0;
  return t * s.cov() * t.transpose();
}

Verdict feedback_identity() {
  double worst = 0.0;
  std::mt19937_64 rng(2024);
  for (double k : kKappaGrid) {
    for (double n : kOccupationGrid) {
      const auto p = ProtocolParams::matched(k, n);
      const auto fb = run_epr_generation(thermal_pair(n), p, {FeedbackMode::FeedbackOptimal, 0.0}, &rng);
      const auto cond = run_epr_generation(thermal_pair(n), p, {});
      worst = std::max(worst, (epr_block(fb.state) - epr_block(cond.state)).cwiseAbs().maxCoeff() / (1.0 + n));
    }
  }
  return {worst < 1e-10, fmt("max EPR-covariance difference %.2e (scaled by 1 + n_i)", worst)};
}

Verdict thermal_robustness() {
  const double hot = run_epr_generation(thermal_pair(1e4), ProtocolParams::matched(1.0, 1e4), {}).report.delta_epr;
  bool monotone = true;
  double prev = 0.0;
  for (double n : {0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6}) {
    const double d = predict_epr_variance(1.0, n);
    monotone = monotone && d > prev && d < 1.0;
    prev = d;
  }
  const double gap = 1.0 - predict_epr_variance(1.0, 1e9);
  bool threshold = true;
  for (double k = 0.05; k < 3.0; k += 0.01) {
    if (std::abs(k * k - 0.5) < 1e-6) continue;
    threshold = threshold && ((predict_epr_variance(k, 1e12) < 2.0) == (k * k > 0.5));
  }
  const bool pass = hot < 2.0 && monotone && gap < 1e-6 && threshold;
  return {pass, fmt("delta(n_i=1e4) = %.6f; monotone approach to 1/kappa^2: %s (gap %.1e); kappa^2 > 1/2 threshold: %s",
                    hot, monotone ? "yes" : "no", gap, threshold ? "holds" : "violated")};
}

Verdict mismatch_scaling() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> eps{1e-3, 3e-3, 1e-2, 3e-2};
  ModelOptions opt;
  opt.mismatch = true;
  bool pass = true;
  std::ostringstream detail;
  for (double n : {0.0, 30.0}) {
    std::vector<ProtocolParams> points;
    for (double e : {0.0, 1e-3, 3e-3, 1e-2, 3e-2}) {
      auto p = ProtocolParams::matched(1.0, n);
      p.eps_mismatch = e;
      points.push_back(p);
    }
    const auto delta = oracle_sweep_parallel(points, opt);
    std::vector<double> excess;
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      excess.push_back(delta[i + 1] - delta[0]);
      const double ratio = excess.back() / mismatch_penalty(eps[i], 1.0, n);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const bool positive = std::all_of(excess.begin(), excess.end(), [](double e) { return e > 0.0; });
    const double slope = positive ? loglog_slope(eps, excess) : NAN;
    const bool ok = positive && std::abs(slope - 2.0) <= 0.1 && lo >= 0.5 && hi <= 2.0;
    pass = pass && ok;
    detail << fmt("n_i=%g: slope %.3f, excess/[eps kappa (n_i+2)]^2 in [%.3f, %.3f]; ", n, slope, lo, hi);
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 120.0;
  detail << fmt("%.2f s", elapsed);
  return {pass, detail.str()};
}

Verdict damping_correction() {
  const double n_th = 830.0;
  ModelOptions opt;
  opt.damping = true;
  auto base = ProtocolParams::matched(1.0, 0.0);
  base.n_th = n_th;
  std::vector<ProtocolParams> points{base};
  const std::array<double, 3> products{0.01, 0.05, 0.1};
  for (double x : products) {
    auto p = base;
    p.gamma_m = x / n_th / p.tau;
    points.push_back(p);
  }
  const auto delta = oracle_sweep_parallel(points, opt);
  bool pass = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < products.size(); ++i) {
    const double gamma_m_tau = products[i] / n_th;
    const double expected = 2.0 * damping_penalty(gamma_m_tau, n_th);
    const double ratio = (delta[i + 1] - delta[0]) / expected;
    pass = pass && std::abs(ratio - 1.0) <= 0.15;
    detail << fmt("gamma_m tau n_th=%g: excess/expected %.3f; ", products[i], ratio);
  }
  std::string text = detail.str();
  text.resize(text.size() - 2);
  return {pass, text};
}

Verdict photon_loss() {
  const double mapped = photon_loss_map(2.0 / 3.0, 0.1);
  bool survives = true;
  for (double d = 0.0; d < 2.0; d += 0.05) {
    for (double e = 0.0; e < 1.0; e += 0.01) survives = survives && photon_loss_map(d, e) < 2.0;
    survives = survives && photon_loss_map(d, 1.0 - 1e-9) < 2.0;
  }
  const bool fixed = photon_loss_map(2.0, 0.37) == 2.0;
  return {std::abs(mapped - 0.8) < 1e-15 && survives && fixed,
          fmt("map(2/3, 0.1) = %.17g; entanglement survives all eps < 1: %s; delta = 2 fixed: %s", mapped,
              survives ? "yes" : "no", fixed ? "yes" : "no")};
}

Verdict teleportation() {
  auto resource = [](double n) {
    return run_epr_generation(thermal_pair(n), ProtocolParams::matched(1.0, n), {}).state;
  };
  const auto p0 = ProtocolParams::matched(1.0, 0.0);
  const auto hot_state = resource(850.0);
  const auto cold_state = resource(0.0);
  const double f_hot =
      teleport(hot_state, ProtocolParams::matched(1.0, 850.0), TeleportConfig::asymptotic_limit()).fidelity;
  const double f_cold = teleport(cold_state, p0, TeleportConfig::asymptotic_limit()).fidelity;

  std::vector<double> k_qnd{4.0, 8.0, 16.0, 32.0};
  std::vector<double> gap;
  for (double k : k_qnd) gap.push_back(std::abs(teleport(cold_state, p0, TeleportConfig::finite(k)).fidelity - f_cold));
  const double slope = loglog_slope(k_qnd, gap);

  const bool pass = std::abs(f_hot - 2.0 / 3.0) / (2.0 / 3.0) < 0.01 && std::abs(f_cold - 0.75) < 1e-10 &&
                    std::abs(slope + 2.0) <= 0.2;
  return {pass, fmt("F(n_i=850) = %.5f, F(n_i=0) = %.12f, finite-kappa_qnd slope %.3f", f_hot, f_cold, slope)};
}

Verdict planner_reproduction() {
  const auto micro = derive_params(PhysicalSetup::micromirror()).report.derived;
  const auto membrane = derive_params(PhysicalSetup::membrane()).report.derived;
  const auto budget = coherence_budget(PhysicalSetup::micromirror());
  const bool kappa_ok = micro.kappa_atomic >= 0.5 && micro.kappa_atomic <= 2.0;
  const bool nth_ok = std::abs(micro.n_th - 850.0) / 850.0 <= 0.1;
  const bool ni_ok = std::abs(membrane.n_i - 30.0) / 30.0 <= 0.2;
  const bool tau_ok = budget.tau_bound >= 20e-6 / 3.0 && budget.tau_bound <= 20e-6 * 3.0;
  return {kappa_ok && nth_ok && ni_ok && tau_ok,
          fmt("micromirror kappa = %.3f, n_th = %.1f; membrane n_i = %.2f; thermal coherence bound %.2f us",
              micro.kappa_atomic, micro.n_th, membrane.n_i, budget.tau_bound * 1e6)};
}

// Every shipped scenario, run twice through the CLI front end.
Verdict determinism() {
  namespace fs = std::filesystem;
  auto invoke = [](std::vector<std::string> args, std::string& text) {
    args.insert(args.begin(), "eprbus");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    text = out.str();
    return code;
  };
  auto normalize = [](const std::string& text) {
    if (text.empty() || text.front() != '{') return text;
    auto j = nlohmann::json::parse(text);
    j.erase("metadata");
    return j.dump();
  };

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(EPRBUS_SCENARIO_DIR)) {
    if (entry.path().extension() == ".yaml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  int checked = 0;
  std::vector<std::string> mismatched;
  for (const auto& file : files) {
    const auto sc = cli::load_scenario(file.string());
    std::string verb = "run";
    if (sc.sweep) verb = "sweep";
    else if (sc.protocol == cli::Protocol::OracleCompare) verb = "compare";
    else if (file.stem().string().ends_with("_plan")) verb = "plan";

    std::vector<std::vector<std::string>> variants{{verb, "--scenario", file.string()},
                                                   {verb, "--scenario", file.string()}};
    if (verb == "sweep") {
      variants[0].insert(variants[0].end(), {"--threads", "1"});
      variants[1].insert(variants[1].end(), {"--threads", "4"});
    }
    std::string a, b;
    const int ca = invoke(variants[0], a);
    const int cb = invoke(variants[1], b);
    ++checked;
    if (ca != 0 || cb != 0 || normalize(a) != normalize(b)) mismatched.push_back(file.filename().string());
  }
  std::string detail = fmt("%d scenarios rerun", checked);
  if (!mismatched.empty()) {
    detail += "; differing: ";
    for (const auto& m : mismatched) detail += m + " ";
  }
  return {checked > 0 && mismatched.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{
      closed_form_pipeline, oracle_equivalence, conservation,          feedback_identity,
      thermal_robustness,   mismatch_scaling,   damping_correction,    photon_loss,
      teleportation,        planner_reproduction, determinism};

  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")
      ->check(CLI::Range(1, static_cast<int>(criteria.size())));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << v.detail << '\n';
  }
  return all ? 0 : 1;
}
