#pragma once

// SI-unit hardware descriptions, converted to the dimensionless protocol
// parameters together with a check of every validity condition.

#include "eprbus/io_maps.hpp"

#include <string>
#include <vector>

namespace eprbus {

struct MechanicsSetup {
  double omega_m = 0.0;  // rad/s
  double mass = 0.0;     // kg
  double Q_m = 0.0;
  double T = 0.0;  // K
};

struct CavitySetup {
  double finesse = 0.0;
  double length = 0.0;            // m
  double wavelength = 1064e-9;    // m
  double power = 0.0;             // W
  double tau = 0.0;               // pulse duration, s
};

struct AtomSetup {
  double Gamma = 0.0;  // rad/s, spontaneous decay
  double Delta = 0.0;  // rad/s, detuning
  double sigma = 0.0;  // m^2, scattering cross section
  double A = 0.0;      // m^2, beam cross section
  double N_at = 0.0;
  double Omega = 0.0;  // rad/s, Larmor frequency
};

struct PhysicalSetup {
  MechanicsSetup mech;
  CavitySetup cavity;
  AtomSetup atoms;
  double cooling_factor = 1.0;  // n_th / n_i

  /// All quantities positive except power and temperature, which may be 0.
  void validate() const;

  /// 5 MHz, 1e-12 kg micromirror at 0.2 K, F = 4500, 100 uW, L = 300 um,
  /// cooled by 30, with a Cs-like ensemble sized for kappa matching.
  static PhysicalSetup micromirror();
  /// 30 MHz, 1e-14 kg membrane at 40 mK, F = 1100, 100 uW, L = 250 um.
  static PhysicalSetup membrane();
};

enum class CheckStatus { Pass, Warn, Fail };
std::string to_string(CheckStatus status);

struct FeasibilityCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;      // the ratio that must be large (or small, see note)
  double threshold = 0.0;  // pass threshold
  std::string note;
};

struct DerivedQuantities {
  double x0 = 0.0;       // m
  double omega_c = 0.0;  // rad/s
  double gamma_c = 0.0;  // s^-1, amplitude decay
  double g0 = 0.0;       // s^-1
  double n_ph = 0.0;
  double alpha = 0.0;
  double g = 0.0;              // s^-1
  double kappa_atomic = 0.0;
  double kappa_optical = 0.0;
  double n_th = 0.0;
  double n_i = 0.0;
  double gamma_m = 0.0;  // s^-1
  double eps = 0.0;      // signed matching residual
  bool matching_degenerate = false;
};

struct FeasibilityReport {
  DerivedQuantities derived;
  std::vector<FeasibilityCheck> checks;

  bool all_pass() const;
  bool any_fail() const;
};

struct PlannedParams {
  ProtocolParams params;
  FeasibilityReport report;
};

// "much greater than" margins: pass at 10x, warn from 5x.
inline constexpr double kMuchGreaterPass = 10.0;
inline constexpr double kMuchGreaterWarn = 5.0;

DerivedQuantities derive_quantities(const PhysicalSetup& setup);
PlannedParams derive_params(const PhysicalSetup& setup);

/// Signed (kappa - g sqrt(tau/gamma_c)) / (kappa + g sqrt(tau/gamma_c)).
/// Throws NumericalError when both sides are zero.
double check_matching(const ProtocolParams& params);

enum class CoherenceLimit { ThermalDecoherence, Unlimited };
std::string to_string(CoherenceLimit limit);

struct CoherenceBudget {
  double tau_bound = 0.0;  // Q_m hbar / (k_B T), s
  double tau_max = 0.0;    // tau_bound / kMuchGreaterPass
  double tau_min = 0.0;    // kMinOmegaTau / Omega
  CoherenceLimit limiting = CoherenceLimit::ThermalDecoherence;
};

CoherenceBudget coherence_budget(const PhysicalSetup& setup);

/// Finesse (other parameters fixed) at which the matching residual vanishes.
double solve_finesse_for_matching(const PhysicalSetup& setup);
/// Atom number (other parameters fixed) at which the matching residual vanishes.
double solve_atom_number_for_matching(const PhysicalSetup& setup);
/// Both kappas scale as sqrt(P), so the residual does not depend on power.
/// Returns the input power when it is already matched to `tolerance`,
/// otherwise throws NumericalError.
double solve_power_for_matching(const PhysicalSetup& setup, double tolerance = 1e-10);

}  // namespace eprbus
