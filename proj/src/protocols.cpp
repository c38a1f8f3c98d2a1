#include "eprbus/protocols.hpp"

#include "eprbus/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eprbus {

namespace {

constexpr double kPQuadrature = std::numbers::pi / 2.0;

double p_mean(const GaussianState& state, const std::string& mode) {
  return state.mean()(static_cast<Eigen::Index>(state.x_index(mode)) + 1);
}

HomodyneOutcome outcome_for(const GaussianState& state, const std::string& mode,
                            std::mt19937_64* rng) {
  if (rng != nullptr) return SampleOutcome{rng};
  return p_mean(state, mode);
}

void require_pair(const GaussianState& state) {
  if (!state.has("mech") || !state.has("atom")) {
    throw ValidationError("state needs a 'mech' and an 'atom' mode");
  }
}

std::vector<ModeLabel> without(const GaussianState& state, std::initializer_list<std::string> drop) {
  std::vector<ModeLabel> kept;
  for (const auto& m : state.modes()) {
    bool dropped = false;
    for (const auto& d : drop) dropped = dropped || m.name == d;
    if (!dropped) kept.push_back(m);
  }
  return kept;
}

// Selection matrix from `state` onto `kept` modes.
Matrix selector(const GaussianState& state, const std::vector<ModeLabel>& kept) {
  const auto in_dim = static_cast<Eigen::Index>(2 * state.num_modes());
  Matrix T = Matrix::Zero(static_cast<Eigen::Index>(2 * kept.size()), in_dim);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(state.x_index(kept[k].name));
    const auto dst = static_cast<Eigen::Index>(2 * k);
    T(dst, src) = 1.0;
    T(dst + 1, src + 1) = 1.0;
  }
  return T;
}

Eigen::Index row_of(const std::vector<ModeLabel>& kept, const std::string& name) {
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k].name == name) return static_cast<Eigen::Index>(2 * k);
  }
  throw ValidationError("mode '" + name + "' missing from output");
}

}  // namespace

double predict_epr_variance(double kappa, double n_i) {
  if (!(kappa >= 0.0) || !(n_i >= 0.0)) throw ValidationError("kappa and n_i must be non-negative");
  return 2.0 / (1.0 / (1.0 + n_i) + 2.0 * kappa * kappa);
}

double feedback_variance(double kappa, double n_i, double gain) {
  const double v = 1.0 + n_i;
  const double residual = 1.0 - gain * kappa;
  return residual * residual * v + 0.5 * gain * gain;
}

double optimal_gain(double kappa, double n_i) {
  if (!(kappa > 0.0)) throw ValidationError("optimal gain is undefined for kappa = 0");
  if (!(n_i >= 0.0)) throw ValidationError("n_i must be non-negative");
  const double v = 1.0 + n_i;
  return kappa * v / (kappa * kappa * v + 0.5);
}

std::string to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::Conditional: return "Conditional";
    case FeedbackMode::Feedback: return "Feedback";
    case FeedbackMode::FeedbackOptimal: return "FeedbackOptimal";
  }
  return "Unknown";
}

FeedbackMode feedback_mode_from_string(const std::string& text) {
  if (text == "Conditional") return FeedbackMode::Conditional;
  if (text == "Feedback") return FeedbackMode::Feedback;
  if (text == "FeedbackOptimal") return FeedbackMode::FeedbackOptimal;
  throw ValidationError("unknown feedback mode '" + text + "'");
}

EprRun run_epr_generation(const GaussianState& initial, const ProtocolParams& params,
                          const FeedbackConfig& fb, std::mt19937_64* rng) {
  require_pair(initial);
  PulseOutput pulse = qnd_bigstep(initial, params);
  GaussianState joint = std::move(pulse.joint);
  const double eta = params.eta_light * params.eta_det;
  if (eta < 1.0) {
    joint = loss_channel(joint, "cos", eta);
    joint = loss_channel(joint, "sin", eta);
  }

  if (fb.mode == FeedbackMode::Conditional) {
    Conditioned c1 = condition_on_homodyne(joint, "cos", kPQuadrature, outcome_for(joint, "cos", rng));
    Conditioned c2 =
        condition_on_homodyne(c1.state, "sin", kPQuadrature, outcome_for(c1.state, "sin", rng));
    EPRReport report = epr_variance(c2.state, "mech", "atom", Provenance::IdealizedMap);
    return EprRun{std::move(c2.state), std::move(report), {c1.record, c2.record}, std::nullopt, 0.0,
                  std::move(pulse.warnings)};
  }

  if (rng == nullptr) {
    throw ValidationError("feedback runs need a seeded random stream for the homodyne outcomes");
  }
  double gain = fb.gain;
  if (fb.mode == FeedbackMode::FeedbackOptimal) {
    gain = optimal_gain(params.kappa * std::sqrt(eta), params.n_i);
  }
  if (!std::isfinite(gain) || gain < 0.0) throw ValidationError("feedback gain must be finite and >= 0");

  // One shot: sample both outcomes, then displace the atoms.
  Conditioned c1 = condition_on_homodyne(joint, "cos", kPQuadrature, SampleOutcome{rng});
  Conditioned c2 = condition_on_homodyne(c1.state, "sin", kPQuadrature, SampleOutcome{rng});
  GaussianState shot =
      displace(c2.state, "atom", -gain * c1.record.outcome, gain * c2.record.outcome);

  // Ensemble average: the same displacement as a linear map on the meter.
  std::vector<ModeLabel> kept = without(joint, {"cos", "sin"});
  Matrix T = selector(joint, kept);
  const Eigen::Index xa = row_of(kept, "atom");
  const auto pc = static_cast<Eigen::Index>(joint.x_index("cos")) + 1;
  const auto ps = static_cast<Eigen::Index>(joint.x_index("sin")) + 1;
  T(xa, pc) = -gain;
  T(xa + 1, ps) = gain;
  const auto out_dim = T.rows();
  GaussianState ensemble =
      map_to_modes(joint, kept, T, Matrix::Zero(out_dim, out_dim), Vector::Zero(out_dim));
  EPRReport report = epr_variance(ensemble, "mech", "atom", Provenance::IdealizedMap);
  return EprRun{std::move(ensemble), std::move(report), {c1.record, c2.record}, std::move(shot),
                gain, std::move(pulse.warnings)};
}

VerificationResult verify_epr(const GaussianState& state, const ProtocolParams& params,
                              const VerifyOptions& options) {
  require_pair(state);
  if (!(params.kappa > 0.0)) throw ValidationError("verification needs kappa > 0");
  const QndModeNames names{"mech", "atom", "verify_cos", "verify_sin"};
  const PulseOutput pulse = qnd_bigstep(state, params, names);
  const GaussianState& joint = pulse.joint;
  const auto pc = static_cast<Eigen::Index>(joint.x_index(names.cos_mode)) + 1;
  const auto ps = static_cast<Eigen::Index>(joint.x_index(names.sin_mode)) + 1;
  const double k2 = params.kappa * params.kappa;

  double var_c = joint.cov()(pc, pc);
  double var_s = joint.cov()(ps, ps);
  std::optional<double> standard_error;
  if (options.shots > 0) {
    if (options.shots < 2) throw ValidationError("finite-shot verification needs at least 2 shots");
    if (options.rng == nullptr) throw ValidationError("finite-shot verification needs a random stream");
    Eigen::Matrix2d cov2;
    cov2 << joint.cov()(pc, pc), joint.cov()(pc, ps), joint.cov()(ps, pc), joint.cov()(ps, ps);
    const Eigen::Matrix2d chol = cov2.llt().matrixL();
    std::normal_distribution<double> unit(0.0, 1.0);
    const int n = options.shots;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Vector2d sum_sq = Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector2d z(unit(*options.rng), unit(*options.rng));
      const Eigen::Vector2d s = chol * z;
      sum += s;
      sum_sq += s.cwiseProduct(s);
    }
    const Eigen::Vector2d mean = sum / n;
    const Eigen::Vector2d var = (sum_sq - n * mean.cwiseProduct(mean)) / (n - 1);
    var_c = var(0);
    var_s = var(1);
    // Var of a sample variance is 2 sigma^4 / (n - 1).
    const double se_c = std::sqrt(2.0 / (n - 1)) * var_c / k2;
    const double se_s = std::sqrt(2.0 / (n - 1)) * var_s / k2;
    standard_error = std::hypot(se_c, se_s);
  }
  const double inferred_x = std::max(0.0, (var_c - 0.5) / k2);
  const double inferred_p = std::max(0.0, (var_s - 0.5) / k2);
  EPRReport report =
      EPRReport::from_quadratures(inferred_x, inferred_p, Provenance::VerificationReadout);

  Conditioned c1 = condition_on_homodyne(joint, names.cos_mode, kPQuadrature,
                                         outcome_for(joint, names.cos_mode, options.rng));
  Conditioned c2 = condition_on_homodyne(c1.state, names.sin_mode, kPQuadrature,
                                         outcome_for(c1.state, names.sin_mode, options.rng));
  EPRReport post = epr_variance(c2.state, "mech", "atom", Provenance::IdealizedMap);
  return {std::move(report), std::move(c2.state), std::move(post), standard_error};
}

TeleportConfig TeleportConfig::asymptotic_limit(std::pair<double, double> mean) {
  TeleportConfig cfg;
  cfg.asymptotic = true;
  cfg.input_mean = mean;
  return cfg;
}

TeleportConfig TeleportConfig::finite(double kappa_qnd, std::pair<double, double> mean) {
  TeleportConfig cfg;
  cfg.kappa_qnd = kappa_qnd;
  cfg.bell_gain = kappa_qnd > 0.0 ? 1.0 / kappa_qnd : 0.0;
  cfg.input_mean = mean;
  return cfg;
}

void TeleportConfig::validate() const {
  if (!(kappa_qnd >= 0.0) || !std::isfinite(kappa_qnd)) {
    throw ValidationError("teleport.kappa_qnd must be non-negative");
  }
  if (!std::isfinite(bell_gain)) throw ValidationError("teleport.bell_gain must be finite");
  if (!std::isfinite(input_mean.first) || !std::isfinite(input_mean.second)) {
    throw ValidationError("teleport.input_mean must be finite");
  }
  if (asymptotic) {
    if (kappa_qnd > 0.0 && bell_gain != 0.0 && std::abs(kappa_qnd * bell_gain - 1.0) > 1e-12) {
      throw ValidationError("asymptotic teleportation requires kappa_qnd * bell_gain = 1");
    }
  } else if (!(kappa_qnd > 0.0)) {
    throw ValidationError("finite teleportation needs kappa_qnd > 0");
  }
}

TeleportResult teleport(const GaussianState& epr_state, const ProtocolParams& params,
                        const TeleportConfig& cfg) {
  params.validate();
  cfg.validate();
  require_pair(epr_state);
  if (epr_state.has("atom2")) throw ValidationError("state already holds an 'atom2' mode");

  // Opposite Larmor sense to "atom", as in two-ensemble QND Bell measurements.
  const std::array<ModeSpec, 1> input_spec{
      ModeSpec{ModeLabel::atomic("atom2", false), 0.0, cfg.input_mean.first, cfg.input_mean.second}};
  const GaussianState input = make_state(input_spec);
  const GaussianState joint = tensor(epr_state, input);
  const std::vector<ModeLabel> out_modes{epr_state.mode("mech")};
  const Eigen::Matrix2d zero_noise = Eigen::Matrix2d::Zero();

  GaussianState final_mech = [&] {
    if (cfg.asymptotic) {
      const auto n = static_cast<Eigen::Index>(2 * joint.num_modes());
      Matrix T = Matrix::Zero(2, n);
      const auto xm = static_cast<Eigen::Index>(joint.x_index("mech"));
      const auto xa = static_cast<Eigen::Index>(joint.x_index("atom"));
      const auto x2 = static_cast<Eigen::Index>(joint.x_index("atom2"));
      T(0, xm) = 1.0;
      T(0, xa) = 1.0;
      T(0, x2) = 1.0;
      T(1, xm + 1) = 1.0;
      T(1, xa + 1) = -1.0;
      T(1, x2 + 1) = 1.0;
      return map_to_modes(joint, out_modes, T, zero_noise, Vector::Zero(2));
    }
    const QndModeNames names{"atom2", "atom", "bell_cos", "bell_sin"};
    const GaussianState bell = qnd_interaction(joint, cfg.kappa_qnd, names);
    const auto n = static_cast<Eigen::Index>(2 * bell.num_modes());
    Matrix T = Matrix::Zero(2, n);
    const auto xm = static_cast<Eigen::Index>(bell.x_index("mech"));
    T(0, xm) = 1.0;
    T(1, xm + 1) = 1.0;
    T(0, static_cast<Eigen::Index>(bell.x_index("bell_cos")) + 1) = cfg.bell_gain;
    T(1, static_cast<Eigen::Index>(bell.x_index("bell_sin")) + 1) = cfg.bell_gain;
    return map_to_modes(bell, out_modes, T, zero_noise, Vector::Zero(2));
  }();

  TeleportResult result{final_mech, input, gaussian_fidelity(input, final_mech),
                        final_mech.cov()(0, 0) - input.cov()(0, 0),
                        final_mech.cov()(1, 1) - input.cov()(1, 1)};
  return result;
}

GaussianState two_mode_squeezed(double r) {
  const double c = 0.5 * std::cosh(2.0 * r);
  const double s = 0.5 * std::sinh(2.0 * r);
  Matrix cov = Matrix::Zero(4, 4);
  cov.diagonal().setConstant(c);
  cov(0, 2) = cov(2, 0) = -s;
  cov(1, 3) = cov(3, 1) = s;
  return GaussianState({ModeLabel::mechanical("mech"), ModeLabel::atomic("atom")}, Vector::Zero(4),
                       cov);
}

}  // namespace eprbus
