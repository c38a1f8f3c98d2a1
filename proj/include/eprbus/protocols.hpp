#pragma once

// End-to-end drivers: EPR generation by conditioning or feedback, the
// closed-form variance, verification by repeating the pulse, and
// teleportation of an atomic coherent state onto the mechanics.

#include "eprbus/gaussian_state.hpp"
#include "eprbus/io_maps.hpp"

#include <array>
#include <optional>
#include <random>
#include <utility>

namespace eprbus {

/// 2 / (1/(1 + n_i) + 2 kappa^2).
double predict_epr_variance(double kappa, double n_i);

/// Per-quadrature variance of the feedback output,
/// (1 - g kappa)^2 (1 + n_i) + g^2 / 2.
double feedback_variance(double kappa, double n_i, double gain);

/// Minimizer of feedback_variance: kappa V / (kappa^2 V + 1/2), V = 1 + n_i.
/// Throws ValidationError for kappa = 0.
double optimal_gain(double kappa, double n_i);

enum class FeedbackMode { Conditional, Feedback, FeedbackOptimal };

std::string to_string(FeedbackMode mode);
FeedbackMode feedback_mode_from_string(const std::string& text);

struct FeedbackConfig {
  FeedbackMode mode = FeedbackMode::Conditional;
  double gain = 0.0;  // used by FeedbackMode::Feedback
};

struct EprRun {
  // Conditional: the conditional state. Feedback modes: the ensemble average
  // over outcomes (the unconditional state).
  GaussianState state;
  EPRReport report;
  std::array<MeasurementRecord, 2> records;
  // Feedback modes only: the state of this particular shot after the
  // displacement, conditioned on the sampled outcomes.
  std::optional<GaussianState> shot_state;
  double gain = 0.0;
  std::vector<std::string> warnings;
};

/// Runs qnd_bigstep on `initial` (modes "mech" and "atom") and either
/// conditions on both p readouts or feeds them back onto the atoms with
/// X_a -> X_a - g xi_cos, P_a -> P_a + g xi_sin. Conditional runs sample the
/// outcomes when `rng` is given and otherwise condition on the most likely
/// outcome; feedback runs require `rng`. Transmission losses
/// (eta_light * eta_det) act on the temporal modes before detection.
EprRun run_epr_generation(const GaussianState& initial, const ProtocolParams& params,
                          const FeedbackConfig& fb, std::mt19937_64* rng = nullptr);

struct VerifyOptions {
  int shots = 0;  // 0: exact Gaussian statistics
  std::mt19937_64* rng = nullptr;
};

struct VerificationResult {
  EPRReport report;          // inferred from the readout statistics
  GaussianState post_state;  // after conditioning on the verification readout
  EPRReport post_report;
  std::optional<double> standard_error;  // finite-shot estimator only
};

/// Repeats the QND pulse and infers Var(X_m + X_a) from
/// Var(p_cos) = 1/2 + kappa^2 Var(X_m + X_a) (likewise sin / P_m - P_a).
VerificationResult verify_epr(const GaussianState& state, const ProtocolParams& params,
                              const VerifyOptions& options = {});

struct TeleportConfig {
  double kappa_qnd = 0.0;
  double bell_gain = 0.0;
  std::pair<double, double> input_mean{0.0, 0.0};
  bool asymptotic = false;

  static TeleportConfig asymptotic_limit(std::pair<double, double> mean = {0.0, 0.0});
  /// Finite Bell measurement with gain 1/kappa_qnd.
  static TeleportConfig finite(double kappa_qnd, std::pair<double, double> mean = {0.0, 0.0});
  void validate() const;
};

struct TeleportResult {
  GaussianState final_mech;
  GaussianState input;  // the coherent state that was sent
  double fidelity = 0.0;
  double added_noise_x = 0.0;
  double added_noise_p = 0.0;
};

/// QND Bell measurement between a fresh coherent ensemble "atom2" and
/// "atom", fed forward onto the mechanics with
/// X_m += g xi_cos, P_m += g xi_sin. The asymptotic limit applies
/// X_m -> X_m + X_a + X_a2, P_m -> P_m - P_a + P_a2 directly.
TeleportResult teleport(const GaussianState& epr_state, const ProtocolParams& params,
                        const TeleportConfig& cfg);

/// Two-mode squeezed vacuum on ("mech", "atom") with EPR variance 2 e^{-2r}.
GaussianState two_mode_squeezed(double r);

}  // namespace eprbus
