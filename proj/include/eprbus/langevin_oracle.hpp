#pragma once

// Continuous-time moment propagation of the cascaded light bus.
//
// State vector (interleaved per mode):
//   (X_m, P_m, X_a, P_a, Y_xc, Y_pc, Y_xs, Y_ps)
// where the Y's accumulate the output field against orthonormalized cos/sin
// weights over the pulse. Lab-frame equations of motion:
//   dX_m = omega_m P_m,        dP_m = -omega_m X_m + c_m x_in
//   dX_a = -Omega P_a,         dP_a =  Omega X_a   + c_a x_in
//   dY_pc = f_c(t) (p_in + c_m X_m + c_a X_a),  dY_xc = f_c(t) x_in
// with c = kappa sqrt(2/tau) per segment and <x_in(t) x_in(t')> = delta/2.
// Mechanical damping adds -gamma_m/2 on both mechanical quadratures and
// diffusion gamma_m (n_th + 1) on each of them.

#include "eprbus/gaussian_state.hpp"
#include "eprbus/io_maps.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace eprbus {

using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

struct ModelOptions {
  bool damping = false;
  bool mismatch = false;
  int steps_per_period = 200;  // N_min per Larmor period
  int min_steps = 2000;
};

class DriftNoiseModel {
 public:
  DriftNoiseModel(const ProtocolParams& params, const ModelOptions& options,
                  const GaussianState& initial);

  Matrix8 drift(double t) const;
  Matrix8 diffusion(double t) const;

  const ProtocolParams& params() const { return params_; }
  const ModelOptions& options() const { return options_; }
  const GaussianState& initial() const { return initial_; }
  double horizon() const { return params_.tau; }
  int steps() const { return steps_; }
  double dt() const { return params_.tau / steps_; }
  double coupling_mech() const { return c_mech_; }
  double coupling_atom() const { return c_atom_; }

  /// Same physics with a different step count.
  DriftNoiseModel with_steps(int steps) const;

 private:
  struct Weights {
    double cos_weight;
    double sin_weight;
  };
  Weights weights(double t) const;

  ProtocolParams params_;
  ModelOptions options_;
  GaussianState initial_;
  int steps_ = 0;
  double c_mech_ = 0.0;
  double c_atom_ = 0.0;
  // Gram-Schmidt coefficients of the cos/sin weights on [0, tau].
  double norm_cos_ = 0.0;
  double sin_minus_cos_ = 0.0;
  double norm_sin_ = 0.0;
};

/// Initial state from params.n_i: thermal mechanics, atomic vacuum.
GaussianState default_initial_state(const ProtocolParams& params);

/// Mismatch splits the couplings symmetrically around kappa,
/// kappa_a = kappa (1 + eps), kappa_m = kappa (1 - eps), so that
/// eps = (kappa_a - kappa_m)/(kappa_a + kappa_m) and the mean strength is kept.
DriftNoiseModel build_model(const ProtocolParams& params, const ModelOptions& options = {});
DriftNoiseModel build_model(const ProtocolParams& params, const ModelOptions& options,
                            const GaussianState& initial);

struct TrajectorySample {
  double t = 0.0;
  double var_xsum = 0.0;
  double var_pdiff = 0.0;
  double var_ypc = 0.0;
  double var_yps = 0.0;
};

struct PropagationOptions {
  bool check_convergence = false;
  double tolerance = 1e-6;     // relative change of every variance on halving dt
  int trajectory_stride = 0;   // 0 disables trajectory recording
};

struct Propagation {
  GaussianState state;  // modes: mech, atom, cos, sin (lab frame at t = tau)
  std::vector<TrajectorySample> trajectory;
  // Max relative drift of the interaction-frame EPR variances over all steps.
  double conservation_drift = 0.0;
  // Max relative change of the final variances on halving dt (when checked).
  double convergence_error = 0.0;
};

/// Fixed-step RK4 integration of d mu/dt = A mu and
/// d Sigma/dt = A Sigma + Sigma A^T + D over [0, tau]. Throws NumericalError
/// when the convergence check is requested and fails.
Propagation propagate_moments(const DriftNoiseModel& model, const PropagationOptions& options = {});

/// Undoes the free rotation of both oscillators over the pulse so the
/// system quadratures are comparable with qnd_bigstep.
GaussianState to_interaction_frame(const GaussianState& lab_state, const DriftNoiseModel& model);

/// Propagates, conditions on Y_pc and Y_ps and reports the EPR variance.
EPRReport oracle_epr_after_measurement(const DriftNoiseModel& model);
EPRReport oracle_epr_after_measurement(const Propagation& propagation);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& trajectory);

}  // namespace eprbus
