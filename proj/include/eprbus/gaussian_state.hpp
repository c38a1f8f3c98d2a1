#pragma once

// Gaussian states over labelled bosonic modes.
//
// Conventions used throughout the library:
//   * quadratures are interleaved per mode: (X1, P1, X2, P2, ...);
//   * [X, P] = i, and the vacuum has variance 1/2 in every quadrature, so
//     two uncorrelated ground states have an EPR variance of exactly 2;
//   * the covariance matrix holds symmetrized second moments.

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace eprbus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kSymplecticTolerance = 1e-10;
inline constexpr double kUncertaintyTolerance = 1e-9;
inline constexpr double kDegenerateVariance = 1e-12;

enum class ModeKind { Mechanical, Atomic, LightTemporal };

struct ModeLabel {
  ModeKind kind = ModeKind::Mechanical;
  std::string name;
  // Atomic ensembles pumped into the upper Zeeman state rotate with the
  // opposite sense. Dynamics modules read the flag; the state does not.
  bool negative_mass = false;

  static ModeLabel mechanical(std::string name = "mech") {
    return {ModeKind::Mechanical, std::move(name), false};
  }
  static ModeLabel atomic(std::string name = "atom", bool negative_mass = true) {
    return {ModeKind::Atomic, std::move(name), negative_mass};
  }
  static ModeLabel light(std::string name) {
    return {ModeKind::LightTemporal, std::move(name), false};
  }

  bool operator==(const ModeLabel& other) const {
    return kind == other.kind && name == other.name;
  }
};

std::string to_string(ModeKind kind);
ModeKind mode_kind_from_string(const std::string& text);

class GaussianState {
 public:
  /// Throws ValidationError on shape mismatch, duplicate names or an
  /// asymmetric covariance. Physicality is checked separately.
  GaussianState(std::vector<ModeLabel> modes, Vector mean, Matrix cov);

  const std::vector<ModeLabel>& modes() const { return modes_; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  std::size_t num_modes() const { return modes_.size(); }

  std::optional<std::size_t> find(const std::string& name) const;
  /// Index of the mode's X quadrature; P is the next entry.
  std::size_t x_index(const std::string& name) const;
  bool has(const std::string& name) const { return find(name).has_value(); }
  const ModeLabel& mode(const std::string& name) const;

  /// Smallest eigenvalue of the real form of cov + (i/2) Omega.
  double uncertainty_margin() const;
  bool is_physical(double tolerance = kUncertaintyTolerance) const;
  /// Throws InvalidChannelError when the uncertainty relation is violated.
  const GaussianState& require_physical(double tolerance = kUncertaintyTolerance) const;

 private:
  std::vector<ModeLabel> modes_;
  Vector mean_;
  Matrix cov_;
};

struct ModeSpec {
  ModeLabel label;
  double occupation = 0.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
};

struct MeasurementRecord {
  ModeLabel mode;
  double quadrature_angle = 0.0;  // 0 measures X, pi/2 measures P
  double outcome = 0.0;
  double outcome_variance = 0.0;
};

enum class Provenance { Predicted, IdealizedMap, Oracle, VerificationReadout };

std::string to_string(Provenance provenance);
Provenance provenance_from_string(const std::string& text);

struct EPRReport {
  double delta_epr = 0.0;
  double var_xsum = 0.0;
  double var_pdiff = 0.0;
  bool entangled = false;
  Provenance provenance = Provenance::Predicted;
  std::vector<std::string> corrections;

  /// Builds a consistent report: delta = var_xsum + var_pdiff, entangled iff
  /// delta < 2.
  static EPRReport from_quadratures(double var_xsum, double var_pdiff, Provenance provenance);
};

/// Draws a homodyne outcome from the Gaussian marginal.
struct SampleOutcome {
  std::mt19937_64* rng = nullptr;
};
using HomodyneOutcome = std::variant<double, SampleOutcome>;

struct Conditioned {
  GaussianState state;
  MeasurementRecord record;
};

/// Standard symplectic form for `num_modes` interleaved modes.
Matrix symplectic_form(std::size_t num_modes);

GaussianState make_state(std::span<const ModeSpec> specs);

/// mean -> S mean + d, cov -> S cov S^T + noise. Throws ValidationError on
/// dimension mismatch or non-PSD noise, InvalidChannelError when the result
/// violates the uncertainty relation.
GaussianState apply_linear_map(const GaussianState& state, const Matrix& S, const Matrix& noise,
                               const Vector& d);
GaussianState apply_linear_map(const GaussianState& state, const Matrix& S);

/// Rectangular variant: maps every quadrature of `state` onto the quadratures
/// of `out_modes` (out = T in + d, cov = T cov T^T + noise). Used for
/// measure-and-feedback maps that discard the meter.
GaussianState map_to_modes(const GaussianState& state, std::vector<ModeLabel> out_modes,
                           const Matrix& T, const Matrix& noise, const Vector& d);

/// Homodyne measurement of cos(angle) X + sin(angle) P on `mode`; the
/// measured mode is removed. The conditional covariance does not depend on
/// the outcome.
Conditioned condition_on_homodyne(const GaussianState& state, const std::string& mode, double angle,
                                  const HomodyneOutcome& outcome);

GaussianState displace(const GaussianState& state, const std::string& mode, double dx, double dp);

EPRReport epr_variance(const GaussianState& state, const std::string& mech, const std::string& atom,
                       Provenance provenance = Provenance::IdealizedMap);

GaussianState partial_trace(const GaussianState& state, std::span<const std::string> keep);
GaussianState partial_trace(const GaussianState& state, std::initializer_list<std::string> keep);

/// Beam-splitter admixture of a thermal mode with occupation `noise_occupation`.
GaussianState loss_channel(const GaussianState& state, const std::string& mode, double transmission,
                           double noise_occupation = 0.0);

/// Appends the modes of `other` (no correlations).
GaussianState tensor(const GaussianState& a, const GaussianState& b);

/// Overlap fidelity between two single-mode Gaussian states; reduces to
/// 1/sqrt(det(cov_a + cov_b)) for equal means.
double gaussian_fidelity(const GaussianState& a, const GaussianState& b);

}  // namespace eprbus
