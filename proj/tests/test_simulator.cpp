#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace ndde;
using ndde::testing::kPi;
using ndde::testing::single;
using ndde::testing::synthetic;

namespace {

NeutralEquation ode(double b) { return single(0.0, 0.0, b, 0.0); }

double max_abs(const std::vector<double>& v, std::size_t from = 0) {
  double m = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace

TEST(Integrate, ExponentialDecay) {
  const auto tr = integrate(ode(1.0), HistorySpec{}, 1.0, 1e-3);
  EXPECT_NEAR(tr.t.back(), 1.0, 1e-12);
  EXPECT_NEAR(tr.x.back(), std::exp(-1.0), 1e-4);
  EXPECT_EQ(tr.x.front(), 1.0);
  EXPECT_EQ(tr.t.size(), tr.x.size());
  EXPECT_EQ(tr.t.size(), tr.xdot.size());
  for (std::size_t i = 1; i < tr.t.size(); ++i) ASSERT_GT(tr.t[i], tr.t[i - 1]);
}

TEST(Integrate, MatchesStepwiseClosedForm) {
  // x' = -x(t - 1), x = 1 on [-1, 0]: x = 1 - t on [0, 1],
  // x = 1 - t + (t - 1)^2 / 2 on [1, 2].
  const auto tr = integrate(single(0.0, 0.0, 1.0, 1.0), HistorySpec{}, 2.0, 1e-3);
  for (double t : {0.5, 1.0, 1.5, 2.0}) {
    const double want = t <= 1.0 ? 1.0 - t : 1.0 - t + 0.5 * (t - 1.0) * (t - 1.0);
    EXPECT_NEAR(value_at(tr, t), want, 1e-9) << "t=" << t;
  }
}

TEST(Integrate, NeutralStepwiseClosedForm) {
  // x' - 0.5 x'(t - 1) = -x(t - 1) with x = 1, x' = 0 on history:
  // on [0, 1] x' = -1, so x = 1 - t; on [1, 2] x' = -0.5 - (2 - t),
  // giving x(2) = 0 - 0.5 - 0.5 = -1.
  const auto tr = integrate(single(0.5, 1.0, 1.0, 1.0), HistorySpec{}, 2.0, 1e-3);
  // the x' jump at 0 reappears at t = 1 through the nearest-node lookup: one O(dt) step
  EXPECT_NEAR(value_at(tr, 1.0), 0.0, 1e-3);
  EXPECT_NEAR(value_at(tr, 2.0), -1.0, 1e-3);
}

TEST(Integrate, OscillationBoundaryIsNotDecaying) {
  const auto tr = integrate(single(0.0, 0.0, 1.0, kPi / 2), HistorySpec{}, 100.0, 1e-3);
  const double tail = max_abs(tr.x, tr.x.size() / 2);
  EXPECT_GT(tail, 0.2);
  EXPECT_LT(max_abs(tr.x), 5.0);
  EXPECT_NE(estimate_decay(tr).classification, DecayClass::Decaying);
}

TEST(Integrate, WorkedFamilyDecays) {
  const auto tr = integrate(single(1.0 / 3.0, 1.0, 1.0 / 3.0, 1.0), HistorySpec{}, 200.0, 1e-3);
  const auto est = estimate_decay(tr);
  EXPECT_EQ(est.classification, DecayClass::Decaying);
  EXPECT_GT(est.gamma_hat, 0.0);
}

TEST(Integrate, ResidualBelowTolerance) {
  std::vector<NeutralEquation> eqs{single(1.0 / 3.0, 1.0, 1.0 / 3.0, 1.0), single(0.4, 0.0, 0.5, 0.7),
                                   single(CoefficientExpr::sinusoid(0.2, 0.2, 1.0), DelayExpr::sinlag(1.0, 0.3, 2.0),
                                          CoefficientExpr::piecewise(2.0, {0.0, 1.0}, {0.2, 0.6}), DelayExpr::lag(0.8))};
  for (const auto& eq : eqs) {
    const auto tr = integrate(eq, HistorySpec{}, 30.0, 1e-2);
    EXPECT_LE(max_residual(eq, HistorySpec{}, tr), 1e-10);
  }
}

TEST(Integrate, RejectsIllPosedAndBadArguments) {
  EXPECT_THROW(integrate(single(1.1, 1.0, 0.3, 1.0), HistorySpec{}, 10.0, 1e-2), std::invalid_argument);
  EXPECT_THROW(integrate(ode(1.0), HistorySpec{}, 10.0, 0.0), std::invalid_argument);
  EXPECT_THROW(integrate(ode(1.0), HistorySpec{}, -1.0, 1e-2), std::invalid_argument);
}

TEST(Integrate, ConvergenceUnderHalving) {
  const std::vector<NeutralEquation> eqs{
      single(0.0, 0.0, 0.5, 1.0),
      single(CoefficientExpr::constant(0.0), DelayExpr::lag(0.0), CoefficientExpr::sinusoid(0.5, 0.2, 1.0),
             DelayExpr::lag(0.7)),
      single(CoefficientExpr::constant(0.0), DelayExpr::lag(0.0), CoefficientExpr::constant(0.4),
             DelayExpr::sinlag(1.0, 0.25, 1.0)),
  };
  for (const auto& eq : eqs) {
    // history phi = c + 0.3 sin s with c chosen so x' has no jump at t0
    const double b0 = eval(eq.delay[0].b, 0.0);
    const double c = -0.3 / b0 - 0.3 * std::sin(apply(eq.delay[0].h, 0.0));
    const HistorySpec smooth{CoefficientExpr::sinusoid(c, 0.3, 1.0), CoefficientExpr::sinusoid(0.0, 0.3, 1.0, kPi / 2)};
    double prev = integrate(eq, smooth, 10.0, 0.02).x.back();
    double prev_change = 0.0;
    for (double dt : {0.01, 0.005, 0.0025}) {
      const double x = integrate(eq, smooth, 10.0, dt).x.back();
      const double change = std::abs(x - prev);
      if (prev_change > 1e-13) {
        EXPECT_LE(change, 0.6 * prev_change) << describe(eq) << " dt=" << dt;
      }
      prev_change = change;
      prev = x;
    }
  }
}

TEST(Integrate, Linearity) {
  const auto eq = single(CoefficientExpr::constant(0.3), DelayExpr::lag(0.5), CoefficientExpr::constant(0.4),
                         DelayExpr::lag(1.0));
  const HistorySpec h{CoefficientExpr::sinusoid(0.5, 0.3, 2.0), CoefficientExpr::sinusoid(0.0, 0.6, 2.0, kPi / 2)};
  const auto f = CoefficientExpr::sinusoid(0.1, 0.2, 0.7);
  const double alpha = -2.75;
  const HistorySpec hs{scaled(h.phi, alpha), scaled(h.psi, alpha)};
  const auto base = integrate(eq, h, 20.0, 5e-3, f);
  const auto scaled_run = integrate(eq, hs, 20.0, 5e-3, scaled(f, alpha));
  ASSERT_EQ(base.x.size(), scaled_run.x.size());
  const double scale = max_abs(base.x);
  for (std::size_t i = 0; i < base.x.size(); ++i) {
    EXPECT_NEAR(scaled_run.x[i], alpha * base.x[i], 1e-10 * std::abs(alpha) * scale);
  }
}

TEST(Integrate, Deterministic) {
  const auto eq = single(1.0 / 3.0, 1.0, 1.0 / 3.0, 1.0);
  const auto a = integrate(eq, HistorySpec{}, 20.0, 1e-3);
  const auto b = integrate(eq, HistorySpec{}, 20.0, 1e-3);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.xdot, b.xdot);
  EXPECT_EQ(a.meta.fingerprint, b.meta.fingerprint);
}

TEST(Integrate, ForcedOdeMatchesClosedForm) {
  const auto tr = integrate(ode(1.0), HistorySpec::zero(), 5.0, 1e-3, CoefficientExpr::constant(1.0));
  for (double t : {1.0, 2.5, 5.0}) EXPECT_NEAR(value_at(tr, t), 1.0 - std::exp(-t), 1e-6);
}

TEST(Integrate, KernelEquationMatchesOde) {
  // x' + ∫_{t-1}^t x = 0 against an independent fine-grid integration.
  NeutralEquation eq;
  eq.kernel = DistributedKernel::uniform(1.0, DelayExpr::lag(1.0));
  const auto tr = integrate(eq, HistorySpec{}, 5.0, 1e-3);

  const double h = 1e-4;
  const auto n_lag = static_cast<std::size_t>(1.0 / h);
  std::vector<double> xs(n_lag + 1, 1.0);  // history on [-1, 0]
  double window = 1.0;                      // ∫_{t-1}^t x by trapezoid on the fine grid
  for (std::size_t k = 0; k < static_cast<std::size_t>(5.0 / h); ++k) {
    const std::size_t n = xs.size() - 1;
    // Heun step
    const double x = xs[n];
    const double pred = x - h * window;
    const double win_pred = window + 0.5 * h * (pred + x) - 0.5 * h * (xs[n - n_lag] + xs[n - n_lag + 1]);
    const double next = x - 0.5 * h * (window + win_pred);
    const double win_next = window + 0.5 * h * (next + x) - 0.5 * h * (xs[n - n_lag] + xs[n - n_lag + 1]);
    xs.push_back(next);
    window = win_next;
  }
  EXPECT_NEAR(tr.x.back(), xs.back(), 1e-4);
}

TEST(Geometric, PantographMatchesUniformOnShortHorizon) {
  const auto eq = single(CoefficientExpr::constant(0.4), DelayExpr::proportional(0.5), CoefficientExpr::reciprocal(1.0),
                         DelayExpr::proportional(0.7), 1.0);
  const auto geo = integrate_geometric(eq, HistorySpec{}, 20.0, 1e-4);
  const auto uni = integrate(eq, HistorySpec{}, 20.0, 1e-3);
  EXPECT_NEAR(geo.x.back(), uni.x.back(), 1e-3);
  EXPECT_NEAR(geo.t.back(), 20.0, 20.0 * 2e-4);
  EXPECT_LE(max_residual(eq, HistorySpec{}, geo), 1e-10);
}

TEST(Geometric, RequiresPositiveT0) {
  EXPECT_THROW(integrate_geometric(ode(1.0), HistorySpec{}, 10.0), std::invalid_argument);
}

TEST(Fundamental, ExponentialForOde) {
  const auto X = fundamental(ode(1.0), 0.0, 3.0, 1e-3);
  for (double t : {0.5, 1.0, 3.0}) EXPECT_NEAR(value_at(X, t), std::exp(-t), 1e-4);
}

TEST(Fundamental, ZeroBeforeStart) {
  const auto X = fundamental(single(0.0, 0.0, 0.3, 1.0), 2.0, 6.0, 1e-3);
  EXPECT_EQ(value_at(X, 1.0), 0.0);
  EXPECT_EQ(value_at(X, 2.0), 1.0);
  // zero history: flat until the delay reaches s
  EXPECT_NEAR(value_at(X, 2.9), 1.0, 1e-12);
}

TEST(Fundamental, PositiveUnderInverseETest) {
  const double tau = 1.3;
  const auto X = fundamental(single(0.0, 0.0, kInvE / tau, tau), 0.0, 50.0, 1e-3);
  for (double x : X.x) ASSERT_GT(x, 0.0);
}

TEST(Representation, ZeroForcingIsZero) {
  EXPECT_LT(representation_check(CoefficientExpr::constant(0.3), DelayExpr::lag(1.0), CoefficientExpr::constant(0.0), 5.0,
                                 1e-3),
            1e-14);
}

TEST(Representation, ConstantForcingOde) {
  EXPECT_LE(representation_check(CoefficientExpr::constant(1.0), DelayExpr::lag(0.0), CoefficientExpr::constant(1.0), 5.0,
                                 1e-3),
            1e-3);
}

TEST(Representation, RejectsMisalignedSpacing) {
  EXPECT_THROW(representation_check(CoefficientExpr::constant(1.0), DelayExpr::lag(0.0), CoefficientExpr::constant(1.0),
                                    1.0, 3e-3, 1e-2),
               std::invalid_argument);
}

TEST(Lemma9, BoundHoldsOnForcedRun) {
  const auto eq = single(0.3, 0.5, 0.6, 1.0);
  const auto f = CoefficientExpr::sinusoid(0.0, 1.0, 1.0);
  const auto tr = integrate(eq, HistorySpec::zero(), 30.0, 1e-3, f);
  EXPECT_LE(lemma9_max_excess(eq, tr, f), 1e-6);
}

TEST(Decay, ExactExponential) {
  const auto est = estimate_decay(synthetic([](double t) { return 3.0 * std::exp(-0.5 * t); }, 100.0, 0.01));
  EXPECT_NEAR(est.gamma_hat, 0.5, 1e-3);
  EXPECT_EQ(est.classification, DecayClass::Decaying);
  EXPECT_GE(est.r2, 0.9);
  EXPECT_EQ(est.windows_used, 20u);
}

TEST(Decay, GrowingEnvelope) {
  const auto est = estimate_decay(synthetic([](double t) { return std::exp(0.1 * t) * std::sin(t); }, 200.0, 0.01));
  EXPECT_NEAR(est.gamma_hat, -0.1, 1e-2);
  EXPECT_EQ(est.classification, DecayClass::Growing);
}

TEST(Decay, PureOscillationIsInconclusive) {
  const auto est = estimate_decay(synthetic([](double t) { return std::sin(t); }, 200.0, 0.01));
  EXPECT_LT(std::abs(est.gamma_hat), 1e-3);
  EXPECT_EQ(est.classification, DecayClass::Inconclusive);
}

TEST(Decay, AllZeroIsDecayingWithInfiniteRate) {
  const auto est = estimate_decay(synthetic([](double) { return 0.0; }, 50.0, 0.1));
  EXPECT_EQ(est.classification, DecayClass::Decaying);
  EXPECT_TRUE(std::isinf(est.gamma_hat) && est.gamma_hat > 0);
}

TEST(Decay, ClassificationInvariants) {
  for (double g : {-0.3, -0.01, -1e-4, 0.0, 1e-4, 0.01, 0.3}) {
    for (double w : {0.0, 1.0, 5.0}) {
      const auto est = estimate_decay(synthetic(
          [&](double t) { return std::exp(-g * t) * (w == 0.0 ? 1.0 : std::cos(w * t) + 1.5); }, 200.0, 0.01));
      if (est.classification == DecayClass::Decaying) {
        EXPECT_GE(est.gamma_hat, 1e-3);
        EXPECT_GE(est.r2, 0.9);
      } else if (est.classification == DecayClass::Growing) {
        EXPECT_LE(est.gamma_hat, -1e-3);
        EXPECT_GE(est.r2, 0.9);
      }
    }
  }
}

TEST(Bisect, FindsKnownThreshold) {
  const double got = bisect_threshold([](double p) { return p < 1.2345; }, 0.0, 3.0, 1e-9);
  EXPECT_NEAR(got, 1.2345, 1e-9);
}

TEST(Bisect, NonBracketingNamesBothEnds) {
  try {
    bisect_threshold([](double) { return true; }, 0.0, 1.0, 1e-3);
    FAIL() << "expected ThresholdError";
  } catch (const ThresholdError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("oracle(0"), std::string::npos);
    EXPECT_NE(msg.find("oracle(1"), std::string::npos);
  }
}

TEST(Bisect, CriterionOraclesOnWorkedFamily) {
  auto oracle = [](const char* id) {
    return [id](double tau) { return satisfied(check_criterion(single(1.0 / 3.0, 1.0, 1.0 / 3.0, tau), id)); };
  };
  // the second corollary only covers b tau >= 1/e, so start inside that band
  EXPECT_NEAR(bisect_threshold(oracle("cor2b_B"), 1.2, 4.0, 1e-6), 1.0 + 3.0 / kE, 1e-4);
  EXPECT_NEAR(bisect_threshold(oracle("P8"), 1e-3, 4.0, 1e-6), 3.0 / kE, 1e-4);
}
