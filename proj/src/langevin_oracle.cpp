#include "eprbus/langevin_oracle.hpp"

#include "eprbus/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

namespace eprbus {

namespace {

constexpr int kXm = 0, kPm = 1, kXa = 2, kPa = 3, kYxc = 4, kYpc = 5, kYxs = 6, kYps = 7;

struct Moments8 {
  Vector8 mean;
  Matrix8 cov;
};

// Rows that read the interaction-frame EPR combinations out of the lab-frame
// state at time t.
struct EprProjection {
  Vector8 xsum = Vector8::Zero();
  Vector8 pdiff = Vector8::Zero();
};

EprProjection interaction_frame_projection(const DriftNoiseModel& model, double t) {
  const double wm = model.params().omega_m * t;
  const double wa = model.params().Omega * t;
  const bool negative = model.initial().mode("atom").negative_mass;
  EprProjection proj;
  // Mechanics rotates forward: undo with X~ = cos X - sin P, P~ = sin X + cos P.
  const double cm = std::cos(wm), sm = std::sin(wm);
  const double ca = std::cos(wa), sa = std::sin(wa);
  // Atom rotates backward when negative mass: X~ = cos X + sin P, P~ = -sin X + cos P.
  const double sa_signed = negative ? sa : -sa;
  proj.xsum(kXm) = cm;
  proj.xsum(kPm) = -sm;
  proj.xsum(kXa) = ca;
  proj.xsum(kPa) = sa_signed;
  proj.pdiff(kXm) = sm;
  proj.pdiff(kPm) = cm;
  proj.pdiff(kXa) = sa_signed;
  proj.pdiff(kPa) = -ca;
  return proj;
}

double quad(const Matrix8& cov, const Vector8& v) { return v.dot(cov * v); }

Moments8 initial_moments(const GaussianState& initial) {
  Moments8 m;
  m.mean.setZero();
  m.cov.setZero();
  const auto xm = static_cast<Eigen::Index>(initial.x_index("mech"));
  const auto xa = static_cast<Eigen::Index>(initial.x_index("atom"));
  const std::array<Eigen::Index, 4> src{xm, xm + 1, xa, xa + 1};
  for (int i = 0; i < 4; ++i) {
    m.mean(i) = initial.mean()(src[static_cast<std::size_t>(i)]);
    for (int j = 0; j < 4; ++j) {
      m.cov(i, j) = initial.cov()(src[static_cast<std::size_t>(i)], src[static_cast<std::size_t>(j)]);
    }
  }
  return m;
}

struct RunResult {
  Moments8 final;
  std::vector<TrajectorySample> trajectory;
  double drift = 0.0;
};

TrajectorySample sample_at(double t, const Matrix8& cov) {
  Vector8 xsum = Vector8::Zero();
  xsum(kXm) = 1.0;
  xsum(kXa) = 1.0;
  Vector8 pdiff = Vector8::Zero();
  pdiff(kPm) = 1.0;
  pdiff(kPa) = -1.0;
  return {t, quad(cov, xsum), quad(cov, pdiff), cov(kYpc, kYpc), cov(kYps, kYps)};
}

RunResult integrate(const DriftNoiseModel& model, int stride) {
  RunResult run;
  Moments8 m = initial_moments(model.initial());
  const int n = model.steps();
  const double h = model.dt();

  const EprProjection p0 = interaction_frame_projection(model, 0.0);
  const double vx0 = quad(m.cov, p0.xsum);
  const double vp0 = quad(m.cov, p0.pdiff);
  auto track = [&](double t, const Matrix8& cov) {
    const EprProjection p = interaction_frame_projection(model, t);
    const double dx = std::abs(quad(cov, p.xsum) - vx0) / std::max(vx0, 1e-300);
    const double dp = std::abs(quad(cov, p.pdiff) - vp0) / std::max(vp0, 1e-300);
    run.drift = std::max({run.drift, dx, dp});
  };
  if (stride > 0) run.trajectory.push_back(sample_at(0.0, m.cov));

  auto lyapunov = [](const Matrix8& A, const Matrix8& D, const Matrix8& S) -> Matrix8 {
    return A * S + S * A.transpose() + D;
  };

  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const Matrix8 A0 = model.drift(t);
    const Matrix8 D0 = model.diffusion(t);
    const Matrix8 Ah = model.drift(t + 0.5 * h);
    const Matrix8 Dh = model.diffusion(t + 0.5 * h);
    const Matrix8 A1 = model.drift(t + h);
    const Matrix8 D1 = model.diffusion(t + h);

    const Matrix8 k1 = lyapunov(A0, D0, m.cov);
    const Matrix8 k2 = lyapunov(Ah, Dh, m.cov + 0.5 * h * k1);
    const Matrix8 k3 = lyapunov(Ah, Dh, m.cov + 0.5 * h * k2);
    const Matrix8 k4 = lyapunov(A1, D1, m.cov + h * k3);
    m.cov += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();

    const Vector8 j1 = A0 * m.mean;
    const Vector8 j2 = Ah * (m.mean + 0.5 * h * j1);
    const Vector8 j3 = Ah * (m.mean + 0.5 * h * j2);
    const Vector8 j4 = A1 * (m.mean + h * j3);
    m.mean += (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);

    track(t + h, m.cov);
    if (stride > 0 && ((k + 1) % stride == 0 || k + 1 == n)) {
      run.trajectory.push_back(sample_at(t + h, m.cov));
    }
  }
  if (!m.cov.allFinite() || !m.mean.allFinite()) {
    throw NumericalError("moment propagation produced non-finite values");
  }
  run.final = m;
  return run;
}

GaussianState to_state(const Moments8& m) {
  std::vector<ModeLabel> modes{ModeLabel::mechanical("mech"), ModeLabel::atomic("atom"),
                               ModeLabel::light("cos"), ModeLabel::light("sin")};
  return GaussianState(std::move(modes), Vector(m.mean), Matrix(m.cov));
}

}  // namespace

GaussianState default_initial_state(const ProtocolParams& params) {
  const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical("mech"), params.n_i},
                                      ModeSpec{ModeLabel::atomic("atom"), 0.0}};
  return make_state(specs);
}

DriftNoiseModel::DriftNoiseModel(const ProtocolParams& params, const ModelOptions& options,
                                 const GaussianState& initial)
    : params_(params), options_(options), initial_(initial) {
  params_.validate();
  if (!(params_.Omega > 0.0)) throw ValidationError("the oracle needs a positive Larmor frequency");
  if (options_.steps_per_period < 1 || options_.min_steps < 1) {
    throw ValidationError("step counts must be positive");
  }
  if (initial_.mode("mech").kind != ModeKind::Mechanical ||
      initial_.mode("atom").kind != ModeKind::Atomic) {
    throw ValidationError("initial state needs a mechanical 'mech' and an atomic 'atom' mode");
  }

  const double periods = params_.omega_tau() / (2.0 * std::numbers::pi);
  const double wanted = std::ceil(periods * options_.steps_per_period);
  steps_ = std::max(options_.min_steps, static_cast<int>(std::min(wanted, 5e7)));

  const double scale = std::sqrt(2.0 / params_.tau);
  double kappa_m = params_.kappa;
  double kappa_a = params_.kappa;
  if (options_.mismatch) {
    kappa_a = params_.kappa * (1.0 + params_.eps_mismatch);
    kappa_m = params_.kappa * (1.0 - params_.eps_mismatch);
  }
  c_mech_ = kappa_m * scale;
  c_atom_ = kappa_a * scale;

  const double W = params_.Omega;
  const double T = params_.tau;
  const double ncc = 0.5 * T + std::sin(2.0 * W * T) / (4.0 * W);
  const double nss = 0.5 * T - std::sin(2.0 * W * T) / (4.0 * W);
  const double ncs = std::pow(std::sin(W * T), 2) / (2.0 * W);
  const double residual = nss - ncs * ncs / ncc;
  if (!(ncc > 0.0) || !(residual > 1e-12 * T)) {
    throw ValidationError("Omega*tau too small to define independent cos/sin temporal modes");
  }
  norm_cos_ = 1.0 / std::sqrt(ncc);
  sin_minus_cos_ = ncs / ncc;
  norm_sin_ = 1.0 / std::sqrt(residual);
}

DriftNoiseModel::Weights DriftNoiseModel::weights(double t) const {
  const double c = std::cos(params_.Omega * t);
  const double s = std::sin(params_.Omega * t);
  return {c * norm_cos_, (s - sin_minus_cos_ * c) * norm_sin_};
}

Matrix8 DriftNoiseModel::drift(double t) const {
  Matrix8 A = Matrix8::Zero();
  const double wm = params_.omega_m;
  const double wa = params_.Omega;
  const double sign = initial_.mode("atom").negative_mass ? -1.0 : 1.0;
  A(kXm, kPm) = wm;
  A(kPm, kXm) = -wm;
  A(kXa, kPa) = sign * wa;
  A(kPa, kXa) = -sign * wa;
  if (options_.damping) {
    A(kXm, kXm) = -0.5 * params_.gamma_m;
    A(kPm, kPm) = -0.5 * params_.gamma_m;
  }
  const Weights w = weights(t);
  A(kYpc, kXm) = w.cos_weight * c_mech_;
  A(kYpc, kXa) = w.cos_weight * c_atom_;
  A(kYps, kXm) = w.sin_weight * c_mech_;
  A(kYps, kXa) = w.sin_weight * c_atom_;
  return A;
}

Matrix8 DriftNoiseModel::diffusion(double t) const {
  // Columns: x_in, p_in, each with symmetrized spectral density 1/2.
  Eigen::Matrix<double, 8, 2> B = Eigen::Matrix<double, 8, 2>::Zero();
  const Weights w = weights(t);
  B(kPm, 0) = c_mech_;
  B(kPa, 0) = c_atom_;
  B(kYxc, 0) = w.cos_weight;
  B(kYxs, 0) = w.sin_weight;
  B(kYpc, 1) = w.cos_weight;
  B(kYps, 1) = w.sin_weight;
  Matrix8 D = 0.5 * B * B.transpose();
  if (options_.damping) {
    const double thermal = params_.gamma_m * (params_.n_th + 1.0);
    D(kXm, kXm) += thermal;
    D(kPm, kPm) += thermal;
  }
  return D;
}

DriftNoiseModel DriftNoiseModel::with_steps(int steps) const {
  DriftNoiseModel copy = *this;
  if (steps < 1) throw ValidationError("step count must be positive");
  copy.steps_ = steps;
  return copy;
}

DriftNoiseModel build_model(const ProtocolParams& params, const ModelOptions& options) {
  return DriftNoiseModel(params, options, default_initial_state(params));
}

DriftNoiseModel build_model(const ProtocolParams& params, const ModelOptions& options,
                            const GaussianState& initial) {
  return DriftNoiseModel(params, options, initial);
}

Propagation propagate_moments(const DriftNoiseModel& model, const PropagationOptions& options) {
  RunResult run = integrate(model, options.trajectory_stride);
  Propagation out{to_state(run.final), std::move(run.trajectory), run.drift, 0.0};
  if (options.check_convergence) {
    const RunResult fine = integrate(model.with_steps(2 * model.steps()), 0);
    double worst = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double a = run.final.cov(i, i);
      const double b = fine.final.cov(i, i);
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    }
    out.convergence_error = worst;
    if (worst > options.tolerance) {
      throw NumericalError("moment propagation not converged: halving dt changed a variance by " +
                           std::to_string(worst) + " (relative)");
    }
  }
  return out;
}

GaussianState to_interaction_frame(const GaussianState& lab_state, const DriftNoiseModel& model) {
  const double T = model.horizon();
  const double wm = model.params().omega_m * T;
  const double wa = model.params().Omega * T;
  const bool negative = model.initial().mode("atom").negative_mass;
  const auto n = static_cast<Eigen::Index>(2 * lab_state.num_modes());
  Matrix R = Matrix::Identity(n, n);
  const auto xm = static_cast<Eigen::Index>(lab_state.x_index("mech"));
  const auto xa = static_cast<Eigen::Index>(lab_state.x_index("atom"));
  R(xm, xm) = std::cos(wm);
  R(xm, xm + 1) = -std::sin(wm);
  R(xm + 1, xm) = std::sin(wm);
  R(xm + 1, xm + 1) = std::cos(wm);
  const double sa = negative ? std::sin(wa) : -std::sin(wa);
  R(xa, xa) = std::cos(wa);
  R(xa, xa + 1) = sa;
  R(xa + 1, xa) = -sa;
  R(xa + 1, xa + 1) = std::cos(wa);
  return GaussianState(lab_state.modes(), R * lab_state.mean(),
                       R * lab_state.cov() * R.transpose());
}

EPRReport oracle_epr_after_measurement(const Propagation& propagation) {
  const Conditioned first =
      condition_on_homodyne(propagation.state, "cos", std::numbers::pi / 2.0,
                            propagation.state.mean()(kYpc));
  const GaussianState& s1 = first.state;
  const Conditioned second = condition_on_homodyne(
      s1, "sin", std::numbers::pi / 2.0, s1.mean()(static_cast<Eigen::Index>(s1.x_index("sin")) + 1));
  return epr_variance(second.state, "mech", "atom", Provenance::Oracle);
}

EPRReport oracle_epr_after_measurement(const DriftNoiseModel& model) {
  return oracle_epr_after_measurement(propagate_moments(model));
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& trajectory) {
  out << "t,var_xsum,var_pdiff,var_ypc,var_yps\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : trajectory) {
    out << s.t << ',' << s.var_xsum << ',' << s.var_pdiff << ',' << s.var_ypc << ',' << s.var_yps
        << '\n';
  }
  out.precision(old_precision);
}

}  // namespace eprbus
