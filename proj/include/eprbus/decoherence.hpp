#pragma once

// Leading-order corrections to the EPR variance for imperfect matching,
// mechanical thermalization during the pulse and linear optical loss.

#include "eprbus/gaussian_state.hpp"

namespace eprbus {

struct LossBudget {
  double eps_mismatch = 0.0;  // |matching error|
  double photon_loss = 0.0;   // propagation + detection + spontaneous emission
  double gamma_m_tau = 0.0;
  double n_th = 0.0;

  void validate() const;
  bool empty() const {
    return eps_mismatch == 0.0 && photon_loss == 0.0 && gamma_m_tau == 0.0;
  }
};

/// (eps kappa (n_i + 2))^2, added to the EPR variance.
double mismatch_penalty(double eps, double kappa, double n_i);

/// gamma_m tau (n_th + 1), added to each EPR quadrature.
double damping_penalty(double gamma_m_tau, double n_th);

/// False once gamma_m tau n_th exceeds 0.1, where the first-order damping
/// term stops being reliable.
bool damping_is_perturbative(double gamma_m_tau, double n_th);

/// delta -> (1 - eps) delta + 2 eps. Fixed point at 2.
double photon_loss_map(double delta_epr, double eps_opt);

/// (1 - eps_opt) (delta + mismatch + 2 damping) + 2 eps_opt, applied
/// quadrature by quadrature so the breakdown stays consistent.
EPRReport apply_budget(const EPRReport& report, const LossBudget& budget, double kappa, double n_i);

}  // namespace eprbus
