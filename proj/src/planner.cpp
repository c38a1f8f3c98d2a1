#include "eprbus/planner.hpp"

#include "eprbus/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace eprbus {

namespace {

constexpr double kHbar = 1.054571817e-34;
constexpr double kBoltzmann = 1.380649e-23;
constexpr double kLightSpeed = 299792458.0;

void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("setup.") + name + " must be a finite positive number");
  }
}

void non_negative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("setup.") + name + " must be a finite non-negative number");
  }
}

CheckStatus grade_ratio(double ratio, double pass, double warn) {
  if (ratio >= pass) return CheckStatus::Pass;
  if (ratio >= warn) return CheckStatus::Warn;
  return CheckStatus::Fail;
}

FeasibilityCheck much_greater(std::string name, double big, double small, std::string note) {
  const double ratio = small > 0.0 ? big / small : std::numeric_limits<double>::infinity();
  return {std::move(name), grade_ratio(ratio, kMuchGreaterPass, kMuchGreaterWarn), ratio,
          kMuchGreaterPass, std::move(note)};
}

double atomic_prefactor(const AtomSetup& atoms) {
  return atoms.sigma * atoms.Gamma / (atoms.A * atoms.Delta);
}

}  // namespace

void PhysicalSetup::validate() const {
  positive(mech.omega_m, "mech.omega_m");
  positive(mech.mass, "mech.mass");
  positive(mech.Q_m, "mech.Q_m");
  non_negative(mech.T, "mech.T");
  positive(cavity.finesse, "cavity.finesse");
  positive(cavity.length, "cavity.length");
  positive(cavity.wavelength, "cavity.wavelength");
  non_negative(cavity.power, "cavity.power");
  positive(cavity.tau, "cavity.tau");
  positive(atoms.Gamma, "atoms.Gamma");
  positive(atoms.Delta, "atoms.Delta");
  positive(atoms.sigma, "atoms.sigma");
  positive(atoms.A, "atoms.A");
  positive(atoms.N_at, "atoms.N_at");
  positive(atoms.Omega, "atoms.Omega");
  if (!(cooling_factor >= 1.0) || !std::isfinite(cooling_factor)) {
    throw ValidationError("setup.cooling_factor must be >= 1");
  }
}

PhysicalSetup PhysicalSetup::micromirror() {
  PhysicalSetup s;
  s.mech = {2.0 * std::numbers::pi * 5e6, 1e-12, 5e5, 0.2};
  s.cavity = {4500.0, 300e-6, 1064e-9, 100e-6, 1.9e-6};
  // Cs D2 line, 700 MHz detuning, 1 cm^2 beam.
  s.atoms = {2.0 * std::numbers::pi * 5.2e6, 2.0 * std::numbers::pi * 700e6, 3.47e-13, 1e-4, 7.23e11,
             s.mech.omega_m};
  s.cooling_factor = 30.0;
  return s;
}

PhysicalSetup PhysicalSetup::membrane() {
  PhysicalSetup s;
  s.mech = {2.0 * std::numbers::pi * 30e6, 1e-14, 1e5, 0.04};
  s.cavity = {1100.0, 250e-6, 1064e-9, 100e-6, 1.9e-6};
  s.atoms = {2.0 * std::numbers::pi * 5.2e6, 2.0 * std::numbers::pi * 700e6, 3.47e-13, 1e-4, 7.2e11,
             s.mech.omega_m};
  s.cooling_factor = 1.0;
  return s;
}

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Warn: return "warn";
    case CheckStatus::Fail: return "fail";
  }
  return "unknown";
}

std::string to_string(CoherenceLimit limit) {
  switch (limit) {
    case CoherenceLimit::ThermalDecoherence: return "thermal_decoherence";
    case CoherenceLimit::Unlimited: return "unlimited";
  }
  return "unknown";
}

bool FeasibilityReport::all_pass() const {
  for (const auto& c : checks) {
    if (c.status != CheckStatus::Pass) return false;
  }
  return true;
}

bool FeasibilityReport::any_fail() const {
  for (const auto& c : checks) {
    if (c.status == CheckStatus::Fail) return true;
  }
  return false;
}

DerivedQuantities derive_quantities(const PhysicalSetup& setup) {
  setup.validate();
  const auto& m = setup.mech;
  const auto& c = setup.cavity;
  DerivedQuantities d;
  d.x0 = std::sqrt(kHbar / (2.0 * m.mass * m.omega_m));
  d.omega_c = 2.0 * std::numbers::pi * kLightSpeed / c.wavelength;
  d.gamma_c = std::numbers::pi * kLightSpeed / (2.0 * c.finesse * c.length);
  d.g0 = d.x0 / c.length * d.omega_c;
  d.n_ph = c.power * c.tau / (kHbar * d.omega_c);
  d.alpha = std::sqrt(d.n_ph / (c.tau * d.gamma_c));
  d.g = d.g0 * d.alpha;
  d.kappa_atomic = atomic_prefactor(setup.atoms) * std::sqrt(setup.atoms.N_at * d.n_ph);
  d.kappa_optical = d.g * std::sqrt(c.tau / d.gamma_c);
  d.n_th = kBoltzmann * m.T / (kHbar * m.omega_m);
  d.n_i = d.n_th / setup.cooling_factor;
  d.gamma_m = m.omega_m / m.Q_m;
  const double sum = d.kappa_atomic + d.kappa_optical;
  if (sum > 0.0) {
    d.eps = (d.kappa_atomic - d.kappa_optical) / sum;
  } else {
    d.eps = 1.0;
    d.matching_degenerate = true;
  }
  return d;
}

PlannedParams derive_params(const PhysicalSetup& setup) {
  const DerivedQuantities d = derive_quantities(setup);
  const double tau = setup.cavity.tau;

  ProtocolParams p;
  p.kappa = d.kappa_atomic;
  p.n_i = d.n_i;
  p.g = d.g;
  p.gamma_c = d.gamma_c;
  p.omega_m = setup.mech.omega_m;
  p.Omega = setup.atoms.Omega;
  p.tau = tau;
  p.gamma_m = d.gamma_m;
  p.n_th = d.n_th;
  p.eps_mismatch = d.matching_degenerate ? 0.0 : d.eps;

  FeasibilityReport report;
  report.derived = d;
  report.checks.push_back(much_greater("gamma_c >> g", d.gamma_c, d.g, "adiabatic elimination of the cavity"));
  report.checks.push_back(
      much_greater("gamma_c >> omega_m", d.gamma_c, setup.mech.omega_m, "adiabatic elimination of the cavity"));
  {
    const double wt = setup.atoms.Omega * tau;
    report.checks.push_back({"Omega tau >> 1", grade_ratio(wt, kMinOmegaTau, kMuchGreaterPass), wt, kMinOmegaTau,
                             "rotating-wave averaging of the cos/sin modes"});
  }
  {
    const double rate = d.gamma_m * d.n_th;
    auto check = much_greater("tau << 1/(gamma_m n_th)", rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity(),
                              tau, "thermal decoherence during the pulse");
    report.checks.push_back(check);
  }
  {
    FeasibilityCheck check;
    check.name = "|eps| <~ 1/(10 n_i)";
    const double limit = d.n_i > 0.0 ? 1.0 / (10.0 * d.n_i) : std::numeric_limits<double>::infinity();
    check.value = std::abs(d.eps);
    check.threshold = limit;
    if (d.matching_degenerate) {
      check.status = CheckStatus::Fail;
      check.note = "no probe light: both couplings vanish";
    } else {
      check.status = check.value <= limit ? CheckStatus::Pass
                     : check.value <= 2.0 * limit ? CheckStatus::Warn
                                                  : CheckStatus::Fail;
      check.note = "matching of the optomechanical and atomic segments";
    }
    report.checks.push_back(check);
  }
  return {p, report};
}

double check_matching(const ProtocolParams& params) {
  params.validate();
  const auto eps = matching_residual(params);
  if (!eps) throw ValidationError("matching needs g and gamma_c");
  return *eps;
}

CoherenceBudget coherence_budget(const PhysicalSetup& setup) {
  setup.validate();
  CoherenceBudget b;
  b.tau_min = kMinOmegaTau / setup.atoms.Omega;
  if (setup.mech.T == 0.0) {
    b.tau_bound = std::numeric_limits<double>::infinity();
    b.tau_max = b.tau_bound;
    b.limiting = CoherenceLimit::Unlimited;
    return b;
  }
  b.tau_bound = setup.mech.Q_m * kHbar / (kBoltzmann * setup.mech.T);
  b.tau_max = b.tau_bound / kMuchGreaterPass;
  b.limiting = CoherenceLimit::ThermalDecoherence;
  return b;
}

double solve_finesse_for_matching(const PhysicalSetup& setup) {
  const DerivedQuantities d = derive_quantities(setup);
  if (!(d.kappa_optical > 0.0)) throw NumericalError("finesse solve needs a nonzero drive power");
  // kappa_optical is proportional to the finesse.
  return setup.cavity.finesse * d.kappa_atomic / d.kappa_optical;
}

double solve_atom_number_for_matching(const PhysicalSetup& setup) {
  const DerivedQuantities d = derive_quantities(setup);
  if (!(d.kappa_atomic > 0.0)) throw NumericalError("atom-number solve needs a nonzero drive power");
  const double ratio = d.kappa_optical / d.kappa_atomic;
  return setup.atoms.N_at * ratio * ratio;
}

double solve_power_for_matching(const PhysicalSetup& setup, double tolerance) {
  const DerivedQuantities d = derive_quantities(setup);
  if (!d.matching_degenerate && std::abs(d.eps) <= tolerance) return setup.cavity.power;
  std::ostringstream msg;
  msg << "no drive power matches this setup: both couplings scale as sqrt(P), residual stays at " << d.eps
      << "; solve for finesse or atom number instead";
  throw NumericalError(msg.str());
}

}  // namespace eprbus
