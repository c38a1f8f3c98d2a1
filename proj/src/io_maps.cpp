#include "eprbus/io_maps.hpp"

#include "eprbus/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace eprbus {

ProtocolParams ProtocolParams::matched(double kappa, double n_i, double omega_tau) {
  ProtocolParams p;
  p.kappa = kappa;
  p.n_i = n_i;
  p.tau = 1.0;
  p.Omega = omega_tau;
  p.omega_m = omega_tau;
  p.gamma_c = std::max({1e4, 2500.0 * kappa * kappa, 10.0 * omega_tau});
  p.g = kappa * std::sqrt(p.gamma_c / p.tau);
  return p;
}

void ProtocolParams::validate() const {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string(name) + " must be a finite non-negative number");
    }
  };
  non_negative(kappa, "kappa");
  non_negative(n_i, "n_i");
  non_negative(g, "g");
  non_negative(gamma_c, "gamma_c");
  non_negative(omega_m, "omega_m");
  non_negative(Omega, "Omega");
  non_negative(gamma_m, "gamma_m");
  non_negative(n_th, "n_th");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  if (!std::isfinite(eps_mismatch) || std::abs(eps_mismatch) >= 1.0) {
    throw ValidationError("eps_mismatch must lie in (-1, 1)");
  }
  if (!(eta_light >= 0.0 && eta_light <= 1.0)) throw ValidationError("eta_light must lie in [0, 1]");
  if (!(eta_det >= 0.0 && eta_det <= 1.0)) throw ValidationError("eta_det must lie in [0, 1]");
}

std::optional<double> ProtocolParams::kappa_optical() const {
  if (!(gamma_c > 0.0)) return std::nullopt;
  return g * std::sqrt(tau / gamma_c);
}

std::optional<double> matching_residual(const ProtocolParams& params) {
  const auto optical = params.kappa_optical();
  if (!optical) return std::nullopt;
  const double sum = params.kappa + *optical;
  if (!(sum > 0.0)) throw NumericalError("matching residual undefined: both couplings vanish");
  return (params.kappa - *optical) / sum;
}

Moments transform_moments(const LinearRelation& relation, const Vector& mean, const Matrix& cov) {
  if (mean.size() != relation.S.cols() || cov.rows() != relation.S.cols() ||
      cov.cols() != relation.S.cols()) {
    throw ValidationError("transform_moments: dimension mismatch");
  }
  return {relation.S * mean, relation.S * cov * relation.S.transpose()};
}

LinearRelation cavity_io_map(double g, double gamma_c) {
  if (!(gamma_c > 0.0)) throw ValidationError("cavity decay rate must be positive");
  if (!(g >= 0.0)) throw ValidationError("optomechanical coupling must be non-negative");
  LinearRelation rel;
  rel.quadratures = {"x_light", "p_light", "X_m", "P_m"};
  rel.S = Matrix::Identity(4, 4);
  rel.S(0, 0) = -1.0;
  rel.S(1, 1) = -1.0;
  rel.S(1, 2) = -g * std::sqrt(2.0 / gamma_c);
  return rel;
}

LinearRelation cascade_io_map(const ProtocolParams& params, bool allow_mismatch) {
  params.validate();
  if (!allow_mismatch && params.kappa > 0.0) {
    if (const auto eps = matching_residual(params)) {
      if (std::abs(*eps) > std::abs(params.eps_mismatch) + 1e-12) {
        std::ostringstream msg;
        msg << "matching residual " << *eps << " exceeds the declared tolerance "
            << params.eps_mismatch << "; enable mismatch modeling";
        throw ValidationError(msg.str());
      }
    }
  }
  // Ordering (x, p, X_m, P_m, X_a, P_a).
  const double c_atom = params.kappa * std::sqrt(2.0 / params.tau);
  const double c_mech = params.kappa_optical()
                            ? params.g * std::sqrt(2.0 / params.gamma_c)
                            : c_atom;

  Matrix cavity = Matrix::Identity(6, 6);
  cavity(0, 0) = -1.0;
  cavity(1, 1) = -1.0;
  cavity(1, 2) = -c_mech;

  Matrix filter = Matrix::Identity(6, 6);
  filter(0, 0) = -1.0;
  filter(1, 1) = -1.0;

  Matrix ensemble = Matrix::Identity(6, 6);
  ensemble(0, 0) = -1.0;
  ensemble(1, 1) = -1.0;
  ensemble(1, 4) = -c_atom;

  LinearRelation rel;
  rel.quadratures = {"x_light", "p_light", "X_m", "P_m", "X_a", "P_a"};
  rel.S = ensemble * filter * cavity;
  return rel;
}

Matrix qnd_symplectic(double kappa) {
  // (X1, P1, X2, P2, xc, pc, xs, ps)
  Matrix S = Matrix::Identity(8, 8);
  S(0, 6) = -kappa;  // X1 -= kappa x_sin
  S(1, 4) = kappa;   // P1 += kappa x_cos
  S(2, 6) = kappa;   // X2 += kappa x_sin
  S(3, 4) = kappa;   // P2 += kappa x_cos
  S(5, 0) = kappa;   // p_cos += kappa (X1 + X2)
  S(5, 2) = kappa;
  S(7, 1) = kappa;   // p_sin += kappa (P1 - P2)
  S(7, 3) = -kappa;
  return S;
}

GaussianState qnd_interaction(const GaussianState& state, double kappa, const QndModeNames& names) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be non-negative");
  if (names.first == names.second) throw ValidationError("QND partners must be distinct modes");
  const auto i1 = static_cast<Eigen::Index>(state.x_index(names.first));
  const auto i2 = static_cast<Eigen::Index>(state.x_index(names.second));
  if (state.has(names.cos_mode) || state.has(names.sin_mode)) {
    throw ValidationError("temporal modes '" + names.cos_mode + "'/'" + names.sin_mode +
                          "' already present");
  }
  const std::array<ModeSpec, 2> fresh{ModeSpec{ModeLabel::light(names.cos_mode)},
                                      ModeSpec{ModeLabel::light(names.sin_mode)}};
  const GaussianState joint = tensor(state, make_state(fresh));

  const auto n = static_cast<Eigen::Index>(2 * joint.num_modes());
  const auto ic = n - 4;
  const auto is = n - 2;
  const std::array<Eigen::Index, 8> slots{i1, i1 + 1, i2, i2 + 1, ic, ic + 1, is, is + 1};
  const Matrix local = qnd_symplectic(kappa);
  Matrix S = Matrix::Identity(n, n);
  for (std::size_t r = 0; r < slots.size(); ++r) {
    for (std::size_t c = 0; c < slots.size(); ++c) {
      S(slots[r], slots[c]) = local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return apply_linear_map(joint, S);
}

PulseOutput qnd_bigstep(const GaussianState& input, const ProtocolParams& params,
                        const QndModeNames& names) {
  params.validate();
  if (input.mode(names.first).kind != ModeKind::Mechanical) {
    throw ValidationError("mode '" + names.first + "' is not a mechanical mode");
  }
  if (input.mode(names.second).kind != ModeKind::Atomic) {
    throw ValidationError("mode '" + names.second + "' is not an atomic mode");
  }
  if (params.kappa > 0.0) {
    const auto optical = params.kappa_optical();
    if (optical && *optical + params.kappa > 0.0) {
      const double eps = *matching_residual(params);
      if (std::abs(eps) > std::abs(params.eps_mismatch) + 1e-12) {
        std::ostringstream msg;
        msg << "matching residual " << eps << " exceeds declared eps_mismatch "
            << params.eps_mismatch << "; the idealized map assumes matched couplings";
        throw ValidationError(msg.str());
      }
    }
  }
  PulseOutput out{qnd_interaction(input, params.kappa, names), params, {}};
  if (params.omega_tau() < kMinOmegaTau) {
    std::ostringstream msg;
    msg << "Omega*tau = " << params.omega_tau() << " < " << kMinOmegaTau
        << ": cos/sin components are not independent, trust the oracle instead";
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace eprbus
