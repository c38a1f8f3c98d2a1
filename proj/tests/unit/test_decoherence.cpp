#include "eprbus/decoherence.hpp"
#include "eprbus/errors.hpp"
#include "eprbus/protocols.hpp"

#include <doctest.h>

#include <array>
#include <numbers>

using namespace eprbus;

TEST_CASE("mismatch_penalty") {
  CHECK(mismatch_penalty(0.0, 1.0, 30.0) == 0.0);
  CHECK(mismatch_penalty(0.01, 1.0, 30.0) == doctest::Approx(0.1024));
  const double tolerable = mismatch_penalty(1.0 / 1000.0, 1.0, 100.0);
  CHECK(tolerable == doctest::Approx(0.0104).epsilon(0.01));
  CHECK(tolerable < 0.1);
}

TEST_CASE("damping_penalty") {
  CHECK(damping_penalty(0.0, 830.0) == 0.0);
  CHECK(damping_penalty(1e-3, 830.0) == doctest::Approx(0.831));
  CHECK(damping_is_perturbative(1e-4, 830.0));
  CHECK_FALSE(damping_is_perturbative(1e-3, 830.0));
}

TEST_CASE("photon_loss_map") {
  CHECK(photon_loss_map(0.7, 0.0) == 0.7);
  CHECK(photon_loss_map(2.0 / 3.0, 0.1) == doctest::Approx(0.8).epsilon(1e-15));
  for (double eps : {0.0, 0.2, 0.9, 1.0}) CHECK(photon_loss_map(2.0, eps) == doctest::Approx(2.0));
  SUBCASE("monotone and contracting toward 2") {
    for (double eps : {0.05, 0.3, 0.8}) {
      double prev = -1.0;
      for (double d = 0.0; d <= 4.0; d += 0.25) {
        const double m = photon_loss_map(d, eps);
        CHECK(m >= prev);
        CHECK(std::abs(m - 2.0) <= std::abs(d - 2.0) + 1e-15);
        if (d < 2.0) CHECK(m < 2.0);
        prev = m;
      }
    }
  }
}

TEST_CASE("apply_budget") {
  const auto base = EPRReport::from_quadratures(1.0 / 3.0, 1.0 / 3.0, Provenance::IdealizedMap);
  SUBCASE("empty budget is the identity") {
    const auto out = apply_budget(base, LossBudget{}, 1.0, 0.0);
    CHECK(out.delta_epr == base.delta_epr);
    CHECK(out.corrections.empty());
  }
  SUBCASE("photon loss alone") {
    LossBudget b;
    b.photon_loss = 0.05;
    const auto out = apply_budget(base, b, 1.0, 0.0);
    CHECK(out.delta_epr == doctest::Approx(0.95 * 2.0 / 3.0 + 0.1));
    CHECK(out.delta_epr == doctest::Approx(0.733333333333));
    CHECK(out.corrections.size() == 1);
  }
  SUBCASE("mismatch and damping add") {
    LossBudget b;
    b.eps_mismatch = 0.01;
    b.gamma_m_tau = 1e-4;
    b.n_th = 830.0;
    const auto out = apply_budget(base, b, 1.0, 30.0);
    CHECK(out.delta_epr ==
          doctest::Approx(2.0 / 3.0 + mismatch_penalty(0.01, 1.0, 30.0) + 2.0 * damping_penalty(1e-4, 830.0)));
    CHECK(out.provenance == Provenance::IdealizedMap);
  }
  SUBCASE("never decreases delta and can destroy entanglement") {
    for (double e : {0.0, 0.01, 0.05}) {
      for (double loss : {0.0, 0.3, 0.99}) {
        LossBudget b;
        b.eps_mismatch = e;
        b.photon_loss = loss;
        CHECK(apply_budget(base, b, 1.0, 30.0).delta_epr >= base.delta_epr - 1e-15);
      }
    }
    LossBudget b;
    b.eps_mismatch = 0.1;
    const auto out = apply_budget(base, b, 1.0, 30.0);
    CHECK(out.delta_epr > 2.0);
    CHECK_FALSE(out.entangled);
  }
  SUBCASE("invalid budgets") {
    LossBudget b;
    b.photon_loss = 1.5;
    CHECK_THROWS_AS(apply_budget(base, b, 1.0, 0.0), ValidationError);
    b.photon_loss = 0.0;
    b.gamma_m_tau = -1.0;
    CHECK_THROWS_AS(apply_budget(base, b, 1.0, 0.0), ValidationError);
  }
}

TEST_CASE("loss on the light before detection is affine in delta to first order") {
  // Mode-level loss is exact; its effect matches photon_loss_map with an
  // effective eps proportional to the loss.
  const auto p = ProtocolParams::matched(1.0, 0.0);
  const std::array<ModeSpec, 2> specs{ModeSpec{ModeLabel::mechanical(), 0.0, 0.0, 0.0},
                                      ModeSpec{ModeLabel::atomic(), 0.0, 0.0, 0.0}};
  const auto initial = make_state(specs);
  const double clean = predict_epr_variance(1.0, 0.0);
  auto eps_eff = [&](double loss) {
    auto lossy = p;
    lossy.eta_det = 1.0 - loss;
    const double exact = run_epr_generation(initial, lossy, {}).report.delta_epr;
    return (exact - clean) / (2.0 - clean);
  };
  const double small = eps_eff(1e-4);
  const double large = eps_eff(1e-2);
  CHECK(small > 0.0);
  CHECK(large / small == doctest::Approx(100.0).epsilon(0.02));
  CHECK(photon_loss_map(clean, large) <= 2.0);
}
