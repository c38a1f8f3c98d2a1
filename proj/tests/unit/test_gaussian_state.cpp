#include "eprbus/errors.hpp"
#include "eprbus/gaussian_state.hpp"
#include "random_states.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

using namespace eprbus;

namespace {

GaussianState vacuum_pair() {
  const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0},
                                      ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  return make_state(specs);
}

Matrix rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

TEST_CASE("make_state builds thermal and displaced modes") {
  SUBCASE("vacuum") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0}};
    const auto st = make_state(s);
    CHECK(st.cov().isApprox(0.5 * Matrix::Identity(2, 2)));
  }
  SUBCASE("thermal 850") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), 850.0, 0.0, 0.0}};
    const auto st = make_state(s);
    CHECK(st.cov()(0, 0) == doctest::Approx(850.5));
    CHECK(st.cov()(1, 1) == doctest::Approx(850.5));
    CHECK(st.cov()(0, 1) == 0.0);
  }
  SUBCASE("displaced vacua") {
    const std::array<ModeSpec, 2> s{ModeSpec{ModeLabel::mechanical(), 0.0, 1.0, 0.0},
                                    ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 2.0}};
    const auto st = make_state(s);
    Vector expected(4);
    expected << 1.0, 0.0, 0.0, 2.0;
    CHECK(st.mean() == expected);
    CHECK(st.cov().isApprox(0.5 * Matrix::Identity(4, 4)));
  }
  SUBCASE("negative occupation rejected") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), -1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(make_state(s), ValidationError);
  }
  SUBCASE("duplicate names rejected") {
    const std::array<ModeSpec, 2> s{ModeSpec{ModeLabel::mechanical("a"), 0.0, 0.0, 0.0},
                                    ModeSpec{ModeLabel::atomic("a"), 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(make_state(s), ValidationError);
  }
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(GaussianState({ModeLabel::mechanical()}, Vector::Zero(3), Matrix::Identity(2, 2)),
                  ValidationError);
  Matrix asym = 0.5 * Matrix::Identity(2, 2);
  asym(0, 1) = 1e-3;
  CHECK_THROWS_AS(GaussianState({ModeLabel::mechanical()}, Vector::Zero(2), asym), ValidationError);
  const GaussianState squeezed_too_far({ModeLabel::mechanical()}, Vector::Zero(2),
                                       0.1 * Matrix::Identity(2, 2));
  CHECK_FALSE(squeezed_too_far.is_physical());
  CHECK_THROWS_AS(squeezed_too_far.require_physical(), InvalidChannelError);
  CHECK(ModeLabel::atomic().negative_mass);
  CHECK_FALSE(ModeLabel::mechanical().negative_mass);
}

TEST_CASE("apply_linear_map") {
  const auto vac = vacuum_pair();
  SUBCASE("identity") {
    const auto out = apply_linear_map(vac, Matrix::Identity(4, 4), Matrix::Zero(4, 4), Vector::Zero(4));
    CHECK(out.cov() == vac.cov());
    CHECK(out.mean() == vac.mean());
  }
  SUBCASE("vacuum rotation invariance") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0}};
    const auto out = apply_linear_map(make_state(s), rotation(std::numbers::pi / 2.0));
    CHECK(out.cov().isApprox(0.5 * Matrix::Identity(2, 2), 1e-14));
  }
  SUBCASE("classical noise adds") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0}};
    const double gamma = 0.3;
    const auto out = apply_linear_map(make_state(s), Matrix::Identity(2, 2), gamma * Matrix::Identity(2, 2),
                                      Vector::Zero(2));
    CHECK(out.cov()(0, 0) == doctest::Approx(0.5 + gamma));
    CHECK(out.cov()(1, 1) == doctest::Approx(0.5 + gamma));
  }
  SUBCASE("non-physical channel rejected") {
    const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(apply_linear_map(make_state(s), 0.5 * Matrix::Identity(2, 2)), InvalidChannelError);
  }
  SUBCASE("negative noise rejected") {
    CHECK_THROWS_AS(apply_linear_map(vac, Matrix::Identity(4, 4), -Matrix::Identity(4, 4), Vector::Zero(4)),
                    ValidationError);
  }
}

TEST_CASE("random symplectic maps preserve the form and the uncertainty relation") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t modes = 1 + static_cast<std::size_t>(trial % 3);
    const Matrix s = testing::random_symplectic(modes, rng);
    const Matrix omega = symplectic_form(modes);
    CHECK((s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() < 1e-10);
    const auto state = testing::random_state(modes, rng);
    CHECK(state.is_physical());
    const auto mapped = apply_linear_map(state, s);
    CHECK(mapped.is_physical());
  }
}

TEST_CASE("condition_on_homodyne") {
  SUBCASE("uncorrelated measurement leaves the rest alone") {
    const auto vac = vacuum_pair();
    const auto c = condition_on_homodyne(vac, "atom", 0.0, 0.4);
    CHECK(c.state.num_modes() == 1);
    CHECK(c.state.cov().isApprox(0.5 * Matrix::Identity(2, 2)));
    CHECK(c.record.outcome == 0.4);
  }
  SUBCASE("remaining mean unchanged without cross covariance") {
    const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical(), 0.0, 0.2, -0.1},
                                        ModeSpec{ModeLabel::light("l"), 0.0, 0.0, 0.0}};
    const auto c = condition_on_homodyne(make_state(specs), "l", 0.0, 0.3);
    CHECK(c.state.mean()(0) == doctest::Approx(0.2));
    CHECK(c.state.mean()(1) == doctest::Approx(-0.1));
  }
  SUBCASE("Schur complement of a QND-like pair") {
    const double v = 3.0;
    const double k = 0.8;
    Matrix cov = Matrix::Zero(4, 4);
    cov(0, 0) = v;
    cov(1, 1) = 0.5;
    cov(2, 2) = 0.5 + k * k * v;
    cov(3, 3) = 10.0;
    cov(0, 2) = cov(2, 0) = k * v;
    const GaussianState st({ModeLabel::mechanical("a"), ModeLabel::light("b")}, Vector::Zero(4), cov);
    const auto c = condition_on_homodyne(st, "b", 0.0, 0.0);
    CHECK(c.state.cov()(0, 0) == doctest::Approx(v / (1.0 + 2.0 * k * k * v)).epsilon(1e-14));
  }
  SUBCASE("conditional covariance does not depend on the outcome") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const auto st = testing::random_state(3, rng);
      const double angle = 0.37 * trial;
      const auto a = condition_on_homodyne(st, "m1", angle, -1.3);
      const auto b = condition_on_homodyne(st, "m1", angle, 2.9);
      CHECK(a.state.cov() == b.state.cov());
      CHECK(a.state.is_physical());
    }
  }
  SUBCASE("sampling is reproducible") {
    std::mt19937_64 r1(9), r2(9);
    const auto vac = vacuum_pair();
    const auto a = condition_on_homodyne(vac, "atom", 0.0, SampleOutcome{&r1});
    const auto b = condition_on_homodyne(vac, "atom", 0.0, SampleOutcome{&r2});
    CHECK(a.record.outcome == b.record.outcome);
    CHECK_THROWS_AS(condition_on_homodyne(vac, "atom", 0.0, SampleOutcome{nullptr}), ValidationError);
  }
  SUBCASE("unknown mode") { CHECK_THROWS_AS(condition_on_homodyne(vacuum_pair(), "nope", 0.0, 0.0), ValidationError); }
}

TEST_CASE("displace") {
  const std::array<ModeSpec, 1> s{ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  const auto vac = make_state(s);
  CHECK(displace(vac, "atom", 0.0, 0.0).mean() == vac.mean());
  const auto moved = displace(vac, "atom", -1.0 * 0.7, 0.0);
  CHECK(moved.mean()(0) == doctest::Approx(-0.7));
  CHECK(moved.cov() == vac.cov());
  const auto twice = displace(displace(vac, "atom", 0.1, 0.2), "atom", 0.3, -0.5);
  const auto once = displace(vac, "atom", 0.4, -0.3);
  CHECK(twice.mean().isApprox(once.mean(), 1e-15));
}

TEST_CASE("epr_variance") {
  const auto r = epr_variance(vacuum_pair(), "mech", "atom");
  CHECK(r.delta_epr == doctest::Approx(2.0));
  CHECK_FALSE(r.entangled);

  const std::array<ModeSpec, 2> hot{ModeSpec{ModeLabel::mechanical(), 850.0, 0.0, 0.0},
                                    ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  CHECK(epr_variance(make_state(hot), "mech", "atom").delta_epr == doctest::Approx(1702.0));

  SUBCASE("independent states add their quadrature variances") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = testing::random_state(1, rng);
      auto b = testing::random_state(1, rng);
      b = GaussianState({ModeLabel::light("n0")}, b.mean(), b.cov());
      const auto joint = tensor(a, b);
      const auto rep = epr_variance(joint, "m0", "n0");
      CHECK(rep.var_xsum == doctest::Approx(a.cov()(0, 0) + b.cov()(0, 0)));
      CHECK(rep.var_pdiff == doctest::Approx(a.cov()(1, 1) + b.cov()(1, 1)));
    }
  }
}

TEST_CASE("partial_trace") {
  std::mt19937_64 rng(31);
  const auto st = testing::random_state(3, rng);
  const auto all = partial_trace(st, {"m0", "m1", "m2"});
  CHECK(all.cov() == st.cov());
  CHECK(all.mean() == st.mean());

  const auto a = testing::random_state(1, rng);
  const auto b = GaussianState({ModeLabel::light("other")}, Vector::Zero(2), 0.5 * Matrix::Identity(2, 2));
  const auto marginal = partial_trace(tensor(a, b), {"m0"});
  CHECK(marginal.cov() == a.cov());

  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing::random_state(3, rng);
    CHECK(partial_trace(s, {"m2", "m0"}).is_physical());
    CHECK(partial_trace(s, {"m1"}).is_physical());
  }
  CHECK_THROWS_AS(partial_trace(st, {"zz"}), ValidationError);
}

TEST_CASE("loss_channel") {
  std::mt19937_64 rng(41);
  const auto st = testing::random_state(2, rng);
  const auto same = loss_channel(st, "m0", 1.0);
  CHECK(same.cov().isApprox(st.cov(), 1e-14));

  const auto wiped = loss_channel(st, "m1", 0.0);
  CHECK(wiped.cov()(2, 2) == doctest::Approx(0.5));
  CHECK(wiped.cov()(3, 3) == doctest::Approx(0.5));
  CHECK(wiped.cov()(0, 2) == doctest::Approx(0.0));

  for (const auto& [e1, e2] : {std::pair{0.9, 0.7}, std::pair{0.3, 0.5}, std::pair{0.99, 0.01}}) {
    const auto twice = loss_channel(loss_channel(st, "m0", e1), "m0", e2);
    const auto once = loss_channel(st, "m0", e1 * e2);
    CHECK((twice.cov() - once.cov()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((twice.mean() - once.mean()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(loss_channel(st, "m0", 0.6, 2.0).is_physical());
  CHECK_THROWS_AS(loss_channel(st, "m0", 1.5), ValidationError);
  CHECK_THROWS_AS(loss_channel(st, "m0", 0.5, -1.0), ValidationError);
}

TEST_CASE("gaussian_fidelity") {
  const GaussianState vac({ModeLabel::mechanical()}, Vector::Zero(2), 0.5 * Matrix::Identity(2, 2));
  CHECK(gaussian_fidelity(vac, vac) == doctest::Approx(1.0));
  const GaussianState noisy({ModeLabel::mechanical()}, Vector::Zero(2), (5.0 / 6.0) * Matrix::Identity(2, 2));
  CHECK(gaussian_fidelity(vac, noisy) == doctest::Approx(0.75).epsilon(1e-12));
  Vector shifted(2);
  shifted << 1.0, 0.0;
  const GaussianState moved({ModeLabel::mechanical()}, shifted, 0.5 * Matrix::Identity(2, 2));
  CHECK(gaussian_fidelity(vac, moved) == doctest::Approx(std::exp(-0.5)));
}
