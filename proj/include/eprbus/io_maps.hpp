#pragma once

// Big-step input-output relations of the cascaded light bus: the adiabatically
// eliminated cavity, the cavity -> filter -> ensemble cascade, and the
// pulse-level QND map onto cos/sin temporal modes.

#include "eprbus/gaussian_state.hpp"

#include <string>
#include <vector>

namespace eprbus {

/// Dimensionless model parameters, rates in s^-1 (or any consistent unit).
struct ProtocolParams {
  double kappa = 1.0;       // QND strength of the atomic segment
  double n_i = 0.0;         // initial mechanical occupation
  double g = 0.0;           // linearized optomechanical coupling
  double gamma_c = 0.0;     // cavity amplitude decay rate
  double omega_m = 400.0;   // mechanical frequency
  double Omega = 400.0;     // atomic Larmor frequency (magnitude)
  double tau = 1.0;         // pulse duration
  double gamma_m = 0.0;     // mechanical energy damping rate
  double n_th = 0.0;        // bath occupation
  double eps_mismatch = 0.0;  // signed matching error, (kappa_a - kappa_m)/(kappa_a + kappa_m)
  double eta_light = 1.0;   // propagation transmission
  double eta_det = 1.0;     // detector efficiency

  /// Matched dimensionless model: tau = 1, Omega = omega_m = omega_tau, and
  /// (g, gamma_c) chosen so that kappa/sqrt(tau) = g/sqrt(gamma_c) holds
  /// exactly with gamma_c/g >= 50.
  static ProtocolParams matched(double kappa, double n_i, double omega_tau = 400.0);

  /// Throws ValidationError for negative rates or efficiencies outside [0,1].
  void validate() const;

  double omega_tau() const { return Omega * tau; }
  /// kappa of the optomechanical segment, g sqrt(tau/gamma_c); nullopt when
  /// the optical side is not specified (g or gamma_c zero).
  std::optional<double> kappa_optical() const;
};

/// Signed residual of the matching condition, (kappa - k_opt)/(kappa + k_opt)
/// with k_opt = g sqrt(tau/gamma_c). nullopt when the optical side is not
/// specified. Throws NumericalError when both sides vanish.
std::optional<double> matching_residual(const ProtocolParams& params);

/// Heisenberg-picture linear relation out = S in. The noise part is zero for
/// every relation here; back-action is handled by the dynamics.
struct LinearRelation {
  Matrix S;
  std::vector<std::string> quadratures;  // row/column labels
};

/// Moments pushed through a relation without any physicality claim.
struct Moments {
  Vector mean;
  Matrix cov;
};
Moments transform_moments(const LinearRelation& relation, const Vector& mean, const Matrix& cov);

/// (x_in, p_in, X_m, P_m) -> (x_out, p_out, X_m, P_m):
/// x_out = -x_in, p_out = -p_in - g sqrt(2/gamma_c) X_m.
LinearRelation cavity_io_map(double g, double gamma_c);

/// (x_in, p_in, X_m, P_m, X_a, P_a) -> (x'_out, p'_out, ...): cavity, the
/// carrier filter relabeling x'_in = -x_out, p'_in = -p_out, then the
/// ensemble. Throws ValidationError when the matching residual exceeds
/// |params.eps_mismatch| and `allow_mismatch` is false.
LinearRelation cascade_io_map(const ProtocolParams& params, bool allow_mismatch = false);

inline constexpr double kMinOmegaTau = 50.0;

struct PulseOutput {
  GaussianState joint;
  ProtocolParams params_used;
  std::vector<std::string> warnings;
};

struct QndModeNames {
  std::string first = "mech";
  std::string second = "atom";
  std::string cos_mode = "cos";
  std::string sin_mode = "sin";
};

/// Exact QND interaction between two oscillators read out on two fresh
/// vacuum temporal modes:
///   p_cos += kappa (X1 + X2),  p_sin += kappa (P1 - P2),
///   X1 -= kappa x_sin, X2 += kappa x_sin, P1 += kappa x_cos, P2 += kappa x_cos.
/// X1 + X2 and P1 - P2 are untouched; X1 - X2 and P1 + P2 each pick up
/// variance 2 kappa^2. Other modes in `state` pass through.
GaussianState qnd_interaction(const GaussianState& state, double kappa, const QndModeNames& names);

/// The symplectic matrix used by qnd_interaction, ordered
/// (X1, P1, X2, P2, x_cos, p_cos, x_sin, p_sin).
Matrix qnd_symplectic(double kappa);

/// Pulse-level map for the mechanical/atomic pair. Warns when Omega tau is
/// below kMinOmegaTau; throws on a matching residual above eps_mismatch.
PulseOutput qnd_bigstep(const GaussianState& input, const ProtocolParams& params,
                        const QndModeNames& names = {});

}  // namespace eprbus
