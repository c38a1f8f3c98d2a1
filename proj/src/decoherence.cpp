#include "eprbus/decoherence.hpp"

#include "eprbus/errors.hpp"

#include <cmath>
#include <sstream>

namespace eprbus {

void LossBudget::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string("losses.") + name + " must be a finite non-negative number");
    }
  };
  check(eps_mismatch, "eps_mismatch");
  check(photon_loss, "photon_loss");
  check(gamma_m_tau, "gamma_m_tau");
  check(n_th, "n_th");
  if (photon_loss > 1.0) throw ValidationError("losses.photon_loss must not exceed 1");
}

double mismatch_penalty(double eps, double kappa, double n_i) {
  const double amplitude = eps * kappa * (n_i + 2.0);
  return amplitude * amplitude;
}

double damping_penalty(double gamma_m_tau, double n_th) { return gamma_m_tau * (n_th + 1.0); }

bool damping_is_perturbative(double gamma_m_tau, double n_th) { return gamma_m_tau * n_th <= 0.1; }

double photon_loss_map(double delta_epr, double eps_opt) {
  return (1.0 - eps_opt) * delta_epr + 2.0 * eps_opt;
}

EPRReport apply_budget(const EPRReport& report, const LossBudget& budget, double kappa, double n_i) {
  budget.validate();
  if (budget.empty()) return report;

  const double mismatch = mismatch_penalty(budget.eps_mismatch, kappa, n_i);
  const double damping = damping_penalty(budget.gamma_m_tau, budget.n_th);
  const double eps = budget.photon_loss;
  // Per quadrature the photon-loss fixed point is 1 (vacuum + vacuum).
  auto correct = [&](double var) { return (1.0 - eps) * (var + 0.5 * mismatch + damping) + eps; };

  EPRReport out = EPRReport::from_quadratures(correct(report.var_xsum), correct(report.var_pdiff),
                                              report.provenance);
  out.corrections = report.corrections;
  std::ostringstream note;
  note.precision(6);
  if (mismatch > 0.0) {
    note.str("");
    note << "mismatch +" << mismatch;
    out.corrections.push_back(note.str());
  }
  if (damping > 0.0) {
    note.str("");
    note << "damping +2x" << damping;
    if (!damping_is_perturbative(budget.gamma_m_tau, budget.n_th)) note << " (outside first order)";
    out.corrections.push_back(note.str());
  }
  if (eps > 0.0) {
    note.str("");
    note << "photon loss " << eps;
    out.corrections.push_back(note.str());
  }
  return out;
}

}  // namespace eprbus
