#include "eprbus/gaussian_state.hpp"

#include "eprbus/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace eprbus {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_same_size(const GaussianState& state, Eigen::Index rows, Eigen::Index cols,
                       const char* what) {
  const auto dim = static_cast<Eigen::Index>(2 * state.num_modes());
  if (rows != dim || cols != dim) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                          std::to_string(dim) + ", got " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
}

void require_psd(const Matrix& m, const char* what) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw ValidationError(std::string(what) + " is not symmetric");
  }
  if (m.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kUncertaintyTolerance) {
    throw ValidationError(std::string(what) + " is not positive semidefinite");
  }
}

}  // namespace

std::string to_string(ModeKind kind) {
  switch (kind) {
    case ModeKind::Mechanical: return "Mechanical";
    case ModeKind::Atomic: return "Atomic";
    case ModeKind::LightTemporal: return "LightTemporal";
  }
  return "Unknown";
}

ModeKind mode_kind_from_string(const std::string& text) {
  if (text == "Mechanical") return ModeKind::Mechanical;
  if (text == "Atomic") return ModeKind::Atomic;
  if (text == "LightTemporal") return ModeKind::LightTemporal;
  throw ValidationError("unknown mode kind '" + text + "'");
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Predicted: return "Predicted";
    case Provenance::IdealizedMap: return "IdealizedMap";
    case Provenance::Oracle: return "Oracle";
    case Provenance::VerificationReadout: return "VerificationReadout";
  }
  return "Unknown";
}

Provenance provenance_from_string(const std::string& text) {
  if (text == "Predicted") return Provenance::Predicted;
  if (text == "IdealizedMap") return Provenance::IdealizedMap;
  if (text == "Oracle") return Provenance::Oracle;
  if (text == "VerificationReadout") return Provenance::VerificationReadout;
  throw ValidationError("unknown provenance '" + text + "'");
}

EPRReport EPRReport::from_quadratures(double var_xsum, double var_pdiff, Provenance provenance) {
  EPRReport report;
  report.var_xsum = var_xsum;
  report.var_pdiff = var_pdiff;
  report.delta_epr = var_xsum + var_pdiff;
  report.entangled = report.delta_epr < 2.0;
  report.provenance = provenance;
  return report;
}

GaussianState::GaussianState(std::vector<ModeLabel> modes, Vector mean, Matrix cov)
    : modes_(std::move(modes)), mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto dim = static_cast<Eigen::Index>(2 * modes_.size());
  if (mean_.size() != dim) {
    throw ValidationError("mean vector has length " + std::to_string(mean_.size()) + ", expected " +
                          std::to_string(dim));
  }
  if (cov_.rows() != dim || cov_.cols() != dim) {
    throw ValidationError("covariance matrix has wrong shape");
  }
  std::set<std::string> names;
  for (const auto& m : modes_) {
    if (m.name.empty()) throw ValidationError("mode names must be non-empty");
    if (!names.insert(m.name).second) throw ValidationError("duplicate mode name '" + m.name + "'");
  }
  if (dim > 0) {
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
      throw ValidationError("covariance matrix is not symmetric");
    }
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw NumericalError("state moments are not finite");
  }
}

std::optional<std::size_t> GaussianState::find(const std::string& name) const {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t GaussianState::x_index(const std::string& name) const {
  const auto idx = find(name);
  if (!idx) throw ValidationError("mode '" + name + "' is not present in the state");
  return 2 * *idx;
}

const ModeLabel& GaussianState::mode(const std::string& name) const {
  return modes_[x_index(name) / 2];
}

double GaussianState::uncertainty_margin() const {
  const auto n = static_cast<Eigen::Index>(2 * modes_.size());
  if (n == 0) return 0.0;
  // cov + (i/2) Omega is Hermitian; [[cov, -Omega/2], [Omega/2, cov]] is its
  // real symmetric embedding with the same spectrum (doubled).
  const Matrix omega = symplectic_form(modes_.size());
  Matrix real_form(2 * n, 2 * n);
  real_form.topLeftCorner(n, n) = cov_;
  real_form.bottomRightCorner(n, n) = cov_;
  real_form.topRightCorner(n, n) = -0.5 * omega;
  real_form.bottomLeftCorner(n, n) = 0.5 * omega;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(real_form), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool GaussianState::is_physical(double tolerance) const {
  return uncertainty_margin() >= -tolerance;
}

const GaussianState& GaussianState::require_physical(double tolerance) const {
  const double margin = uncertainty_margin();
  if (margin < -tolerance) {
    throw InvalidChannelError("state violates the uncertainty relation (min eigenvalue " +
                              std::to_string(margin) + ")");
  }
  return *this;
}

Matrix symplectic_form(std::size_t num_modes) {
  const auto n = static_cast<Eigen::Index>(2 * num_modes);
  Matrix omega = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

GaussianState make_state(std::span<const ModeSpec> specs) {
  const auto n = static_cast<Eigen::Index>(2 * specs.size());
  std::vector<ModeLabel> modes;
  modes.reserve(specs.size());
  Vector mean(n);
  Matrix cov = Matrix::Zero(n, n);
  Eigen::Index k = 0;
  for (const auto& spec : specs) {
    if (!(spec.occupation >= 0.0) || !std::isfinite(spec.occupation)) {
      throw ValidationError("occupation of mode '" + spec.label.name +
                            "' must be a finite non-negative number");
    }
    modes.push_back(spec.label);
    mean(k) = spec.mean_x;
    mean(k + 1) = spec.mean_p;
    cov(k, k) = spec.occupation + 0.5;
    cov(k + 1, k + 1) = spec.occupation + 0.5;
    k += 2;
  }
  return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

GaussianState apply_linear_map(const GaussianState& state, const Matrix& S, const Matrix& noise,
                               const Vector& d) {
  require_same_size(state, S.rows(), S.cols(), "linear map");
  require_same_size(state, noise.rows(), noise.cols(), "noise matrix");
  if (d.size() != S.rows()) throw ValidationError("displacement vector has wrong length");
  require_psd(noise, "noise matrix");
  GaussianState out(state.modes(), S * state.mean() + d,
                    symmetrized(S * state.cov() * S.transpose() + noise));
  out.require_physical();
  return out;
}

GaussianState apply_linear_map(const GaussianState& state, const Matrix& S) {
  const auto n = static_cast<Eigen::Index>(2 * state.num_modes());
  return apply_linear_map(state, S, Matrix::Zero(n, n), Vector::Zero(n));
}

GaussianState map_to_modes(const GaussianState& state, std::vector<ModeLabel> out_modes,
                           const Matrix& T, const Matrix& noise, const Vector& d) {
  const auto in_dim = static_cast<Eigen::Index>(2 * state.num_modes());
  const auto out_dim = static_cast<Eigen::Index>(2 * out_modes.size());
  if (T.rows() != out_dim || T.cols() != in_dim) {
    throw ValidationError("map_to_modes: transfer matrix has wrong shape");
  }
  if (noise.rows() != out_dim || noise.cols() != out_dim || d.size() != out_dim) {
    throw ValidationError("map_to_modes: noise or displacement has wrong shape");
  }
  require_psd(noise, "noise matrix");
  GaussianState out(std::move(out_modes), T * state.mean() + d,
                    symmetrized(T * state.cov() * T.transpose() + noise));
  out.require_physical();
  return out;
}

Conditioned condition_on_homodyne(const GaussianState& state, const std::string& mode, double angle,
                                  const HomodyneOutcome& outcome) {
  const auto xb = static_cast<Eigen::Index>(state.x_index(mode));
  const auto n = static_cast<Eigen::Index>(2 * state.num_modes());
  const Eigen::Vector2d u(std::cos(angle), std::sin(angle));

  const Eigen::Matrix2d cov_bb = state.cov().block<2, 2>(xb, xb);
  const double var_q = u.dot(cov_bb * u);
  if (!(var_q > kDegenerateVariance)) {
    throw NumericalError("homodyne marginal of mode '" + mode + "' is degenerate");
  }
  const double mean_q = u.dot(state.mean().segment<2>(xb));

  double xi = 0.0;
  if (const auto* fixed = std::get_if<double>(&outcome)) {
    xi = *fixed;
  } else {
    auto* rng = std::get<SampleOutcome>(outcome).rng;
    if (rng == nullptr) throw ValidationError("sampled homodyne outcome requires a random stream");
    std::normal_distribution<double> dist(mean_q, std::sqrt(var_q));
    xi = dist(*rng);
  }

  // Remaining quadratures A, measured scalar q.
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n - 2));
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k != xb && k != xb + 1) keep.push_back(k);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Matrix cov_aa(m, m);
  Vector cov_aq(m);
  Vector mean_a(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    mean_a(i) = state.mean()(keep[i]);
    cov_aq(i) = state.cov().row(keep[i]).segment<2>(xb).dot(u);
    for (Eigen::Index j = 0; j < m; ++j) cov_aa(i, j) = state.cov()(keep[i], keep[j]);
  }
  Matrix cov_cond = cov_aa - (cov_aq * cov_aq.transpose()) / var_q;
  Vector mean_cond = mean_a + cov_aq * ((xi - mean_q) / var_q);

  std::vector<ModeLabel> modes;
  for (const auto& label : state.modes()) {
    if (label.name != mode) modes.push_back(label);
  }
  MeasurementRecord record{state.mode(mode), angle, xi, var_q};
  return {GaussianState(std::move(modes), std::move(mean_cond), symmetrized(cov_cond)),
          std::move(record)};
}

GaussianState displace(const GaussianState& state, const std::string& mode, double dx, double dp) {
  const auto x = static_cast<Eigen::Index>(state.x_index(mode));
  Vector mean = state.mean();
  mean(x) += dx;
  mean(x + 1) += dp;
  return GaussianState(state.modes(), std::move(mean), state.cov());
}

EPRReport epr_variance(const GaussianState& state, const std::string& mech, const std::string& atom,
                       Provenance provenance) {
  const auto m = static_cast<Eigen::Index>(state.x_index(mech));
  const auto a = static_cast<Eigen::Index>(state.x_index(atom));
  const auto& c = state.cov();
  const double var_xsum = c(m, m) + c(a, a) + 2.0 * c(m, a);
  const double var_pdiff = c(m + 1, m + 1) + c(a + 1, a + 1) - 2.0 * c(m + 1, a + 1);
  return EPRReport::from_quadratures(var_xsum, var_pdiff, provenance);
}

GaussianState partial_trace(const GaussianState& state, std::span<const std::string> keep) {
  if (keep.empty()) throw ValidationError("partial_trace needs at least one mode to keep");
  std::vector<Eigen::Index> idx;
  std::vector<ModeLabel> modes;
  std::set<std::string> seen;
  for (const auto& name : keep) {
    if (!seen.insert(name).second) throw ValidationError("mode '" + name + "' listed twice");
    const auto x = static_cast<Eigen::Index>(state.x_index(name));
    idx.push_back(x);
    idx.push_back(x + 1);
    modes.push_back(state.mode(name));
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Vector mean(m);
  Matrix cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    mean(i) = state.mean()(idx[i]);
    for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = state.cov()(idx[i], idx[j]);
  }
  return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

GaussianState partial_trace(const GaussianState& state, std::initializer_list<std::string> keep) {
  const std::vector<std::string> names(keep);
  return partial_trace(state, std::span<const std::string>(names));
}

GaussianState loss_channel(const GaussianState& state, const std::string& mode, double transmission,
                           double noise_occupation) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw ValidationError("transmission must lie in [0, 1]");
  }
  if (!(noise_occupation >= 0.0)) throw ValidationError("noise occupation must be non-negative");
  const auto x = static_cast<Eigen::Index>(state.x_index(mode));
  const auto n = static_cast<Eigen::Index>(2 * state.num_modes());
  Matrix S = Matrix::Identity(n, n);
  Matrix noise = Matrix::Zero(n, n);
  const double root = std::sqrt(transmission);
  S(x, x) = root;
  S(x + 1, x + 1) = root;
  noise(x, x) = (1.0 - transmission) * (noise_occupation + 0.5);
  noise(x + 1, x + 1) = noise(x, x);
  return apply_linear_map(state, S, noise, Vector::Zero(n));
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  std::vector<ModeLabel> modes = a.modes();
  modes.insert(modes.end(), b.modes().begin(), b.modes().end());
  const auto na = a.mean().size();
  const auto nb = b.mean().size();
  Vector mean(na + nb);
  mean << a.mean(), b.mean();
  Matrix cov = Matrix::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

double gaussian_fidelity(const GaussianState& a, const GaussianState& b) {
  if (a.num_modes() != 1 || b.num_modes() != 1) {
    throw ValidationError("gaussian_fidelity is defined for single-mode states");
  }
  const Eigen::Matrix2d sum = a.cov() + b.cov();
  const Eigen::Vector2d delta = a.mean() - b.mean();
  const double det = sum.determinant();
  if (!(det > 0.0)) throw NumericalError("fidelity: singular covariance sum");
  return std::exp(-0.5 * delta.dot(sum.inverse() * delta)) / std::sqrt(det);
}

}  // namespace eprbus
