#include <gtest/gtest.h>

#include <optional>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace ndde;
using ndde::testing::kPi;
using ndde::testing::simpson;
using ndde::testing::simpson_split;

namespace {

struct Variant {
  const char* name;
  CoefficientExpr f;
  double t0;
};

std::vector<Variant> variants() {
  return {
      {"constant", CoefficientExpr::constant(-0.4), 0.0},
      {"sinusoid", CoefficientExpr::sinusoid(1.0, 0.5, 2.0, 0.3), 0.0},
      {"piecewise", CoefficientExpr::piecewise(2.0, {0.0, 0.7, 1.0}, {0.2, -0.1, 0.4}), 0.0},
      {"reciprocal", CoefficientExpr::reciprocal(1.0 / 3.0), 1.0},
  };
}

// Jump locations of a piecewise coefficient inside [a, b].
std::vector<double> jumps(const CoefficientExpr& f, double a, double b) {
  std::vector<double> out;
  const auto* p = f.as<PiecewisePeriodic>();
  if (!p) return out;
  for (double k = std::floor(a / p->period) - 1; k * p->period <= b; k += 1.0) {
    for (double br : p->breaks) {
      const double t = k * p->period + br;
      if (t > a && t < b) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Eval, SpecExamples) {
  EXPECT_DOUBLE_EQ(eval(CoefficientExpr::constant(0.3), 7.0), 0.3);
  EXPECT_NEAR(eval(CoefficientExpr::sinusoid(1.0, 0.5, 2.0, 0.0), kPi / 4), 1.5, 1e-15);
  EXPECT_NEAR(eval(CoefficientExpr::reciprocal(1.0 / 3.0), 3.0), 1.0 / 9.0, 1e-16);
}

TEST(Eval, ReciprocalRejectsNonPositiveTime) {
  EXPECT_THROW(eval(CoefficientExpr::reciprocal(1.0), 0.0), std::domain_error);
  EXPECT_THROW(eval(CoefficientExpr::reciprocal(1.0), -2.0), std::domain_error);
}

TEST(Eval, PiecewiseIsRightContinuous) {
  const auto f = CoefficientExpr::piecewise(2.0, {0.0, 1.0}, {0.2, 0.4});
  EXPECT_DOUBLE_EQ(eval(f, 0.0), 0.2);
  EXPECT_DOUBLE_EQ(eval(f, 1.0), 0.4);
  EXPECT_DOUBLE_EQ(eval(f, 1.999), 0.4);
  EXPECT_DOUBLE_EQ(eval(f, 2.0), 0.2);
  EXPECT_DOUBLE_EQ(eval(f, 5.5), 0.4);
}

TEST(Construction, RejectsInvalidParameters) {
  EXPECT_THROW(CoefficientExpr::sinusoid(1.0, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(CoefficientExpr::piecewise(0.0, {0.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(CoefficientExpr::piecewise(2.0, {0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(CoefficientExpr::piecewise(2.0, {0.0, 1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(DelayExpr::lag(-1.0), std::invalid_argument);
  EXPECT_THROW(DelayExpr::proportional(1.0), std::invalid_argument);
  EXPECT_THROW(DelayExpr::proportional(0.0), std::invalid_argument);
  EXPECT_THROW(DelayExpr::sinlag(0.4, 0.5, 1.0), std::invalid_argument);
}

TEST(SupNorm, SpecExamples) {
  auto c = sup_norm(CoefficientExpr::constant(-0.4), 0.0);
  EXPECT_DOUBLE_EQ(c.value, 0.4);
  EXPECT_TRUE(c.exact);
  c = sup_norm(CoefficientExpr::sinusoid(1.0, 0.5, 2.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(c.value, 1.5);
  EXPECT_TRUE(c.exact);
  c = sup_norm(CoefficientExpr::reciprocal(1.0 / 3.0), 1.0);
  EXPECT_DOUBLE_EQ(c.value, 1.0 / 3.0);
  EXPECT_TRUE(c.exact);
}

TEST(InfBound, SpecExamples) {
  EXPECT_DOUBLE_EQ(inf_bound(CoefficientExpr::constant(0.3), 0.0).value, 0.3);
  EXPECT_DOUBLE_EQ(inf_bound(CoefficientExpr::sinusoid(1.0, 0.5, 2.0, 0.0), 0.0).value, 0.5);
  const auto r = inf_bound(CoefficientExpr::reciprocal(1.0 / 3.0), 1.0);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_TRUE(r.exact);
}

TEST(Integral, SpecExamples) {
  EXPECT_NEAR(integral(CoefficientExpr::constant(1.0 / 3.0), 0.0, 1.0), 1.0 / 3.0, 1e-16);
  for (double t : {2.0, 10.0, 1e4}) {
    EXPECT_NEAR(integral(CoefficientExpr::reciprocal(1.5), 0.6 * t, t), 1.5 * std::log(1.0 / 0.6), 1e-13);
  }
  EXPECT_NEAR(integral(CoefficientExpr::sinusoid(1.0, 1.0, 2 * kPi, 0.0), 0.0, 1.0), 1.0, 1e-14);
}

TEST(Integral, ReciprocalDomain) {
  EXPECT_THROW(integral(CoefficientExpr::reciprocal(1.0), 0.0, 1.0), std::domain_error);
}

TEST(Integral, AgreesWithQuadratureOnRandomIntervals) {
  std::mt19937_64 rng(7);
  for (const auto& v : variants()) {
    std::uniform_real_distribution<double> start(v.t0 + (v.t0 > 0 ? 0.0 : 0.0), v.t0 + 30.0);
    std::uniform_real_distribution<double> len(0.01, 12.0);
    auto fn = [&](double t) { return eval(v.f, t); };
    for (int i = 0; i < 100; ++i) {
      const double a = std::max(start(rng), v.t0 + 1e-9);
      const double b = a + len(rng);
      const double want = simpson_split(fn, a, b, jumps(v.f, a, b), 1e-13);
      const double got = integral(v.f, a, b);
      EXPECT_NEAR(got, want, 1e-8 * std::max(1.0, std::abs(want))) << v.name << " on [" << a << ", " << b << "]";
    }
  }
}

TEST(Integral, Additive) {
  std::mt19937_64 rng(11);
  for (const auto& v : variants()) {
    std::uniform_real_distribution<double> u(v.t0 + 0.01, v.t0 + 40.0);
    for (int i = 0; i < 200; ++i) {
      double p[3] = {u(rng), u(rng), u(rng)};
      std::sort(p, p + 3);
      const double whole = integral(v.f, p[0], p[2]);
      const double parts = integral(v.f, p[0], p[1]) + integral(v.f, p[1], p[2]);
      EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, std::abs(whole))) << v.name;
    }
  }
}

TEST(Bounds, EvalStaysWithinSupAndInf) {
  for (const auto& v : variants()) {
    const double hi = sup_norm(v.f, v.t0).value;
    const double up = sup_value(v.f, v.t0).value;
    const double lo = inf_bound(v.f, v.t0).value;
    for (int i = 0; i < 10000; ++i) {
      const double t = v.t0 + 1e-3 * i * 7.3;
      const double x = eval(v.f, t);
      EXPECT_LE(std::abs(x), hi + 1e-12) << v.name << " t=" << t;
      EXPECT_LE(x, up + 1e-12) << v.name << " t=" << t;
      EXPECT_GE(x, lo - 1e-12) << v.name << " t=" << t;
    }
  }
}

TEST(Bounds, SinusoidSupIsAttainedAfterT0) {
  // Starting mid-period must not change the sup of a periodic function.
  const auto f = CoefficientExpr::sinusoid(0.2, -0.7, 3.0, 1.1);
  EXPECT_NEAR(sup_norm(f, 123.4).value, 0.9, 1e-15);
  EXPECT_NEAR(inf_bound(f, 123.4).value, -0.5, 1e-15);
  EXPECT_NEAR(ndde::testing::grid_max([&](double t) { return std::abs(eval(f, t)); }, 123.4, 130.0), 0.9, 1e-6);
}

TEST(Delay, Accessors) {
  const auto d = DelayExpr::lag(1.5);
  EXPECT_DOUBLE_EQ(apply(d, 4.0), 2.5);
  EXPECT_DOUBLE_EQ(lag(d, 4.0), 1.5);
  EXPECT_TRUE(is_bounded(d));
  const auto p = DelayExpr::proportional(0.5);
  EXPECT_DOUBLE_EQ(apply(p, 4.0), 2.0);
  EXPECT_FALSE(is_bounded(p));
  EXPECT_TRUE(std::isinf(sup_lag(p)));
  const auto s = DelayExpr::sinlag(1.0, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(sup_lag(s), 1.5);
  EXPECT_DOUBLE_EQ(inf_lag(s, 0.0), 0.5);
  for (double t = 0.0; t < 50.0; t += 0.37) EXPECT_LE(apply(s, t), t);
}

TEST(WindowIntegral, SpecExamples) {
  auto c = sup_window_integral(CoefficientExpr::constant(1.0 / 3.0), DelayExpr::lag(1.0), 0.0);
  EXPECT_NEAR(c.value, 1.0 / 3.0, 1e-16);
  EXPECT_TRUE(c.exact);

  const double lambda = std::exp(-1.0 / kE);
  c = sup_window_integral(CoefficientExpr::reciprocal(1.0), DelayExpr::proportional(lambda), 1.0);
  EXPECT_NEAR(c.value, 1.0 / kE, 1e-15);
  EXPECT_TRUE(c.exact);
  // Rounded parameter from the worked value 0.6922
  c = sup_window_integral(CoefficientExpr::reciprocal(1.0), DelayExpr::proportional(0.6922), 1.0);
  EXPECT_NEAR(c.value, 0.3679, 1e-4);

  c = sup_window_integral(CoefficientExpr::constant(1.0 / 3.0), DelayExpr::sinlag(1.0, 0.5, 1.0), 0.0);
  EXPECT_NEAR(c.value, 0.5, 1e-15);
  EXPECT_TRUE(c.exact);
}

TEST(WindowIntegral, RejectsNegativeCoefficient) {
  EXPECT_THROW(sup_window_integral(CoefficientExpr::sinusoid(0.1, 0.5, 1.0), DelayExpr::lag(1.0), 0.0),
               std::invalid_argument);
}

TEST(WindowIntegral, ClosedFormsMatchBruteForce) {
  struct Case {
    CoefficientExpr f;
    DelayExpr h;
    double t0;
    std::optional<double> inf_limit{};  // infimum approached only as t -> inf
  };
  const std::vector<Case> cases{
      {CoefficientExpr::sinusoid(0.5, 0.3, 2.0, 0.4), DelayExpr::lag(1.3), 0.0},
      {CoefficientExpr::piecewise(2.0, {0.0, 0.5, 1.2}, {0.1, 0.6, 0.3}), DelayExpr::lag(0.9), 0.0},
      {CoefficientExpr::piecewise(1.0, {0.0, 0.25}, {0.4, 0.0}), DelayExpr::lag(2.6), 0.3},
      {CoefficientExpr::reciprocal(0.8), DelayExpr::lag(1.0), 2.0, 0.0},
      {CoefficientExpr::constant(0.4), DelayExpr::sinlag(1.0, 0.3, 2.0), 0.0},
  };
  for (const auto& c : cases) {
    const auto b = window_integral_bounds(c.f, c.h, c.t0);
    ASSERT_TRUE(b.sup.exact);
    auto W = [&](double t) { return integral(c.f, apply(c.h, t), t); };
    const double hi = ndde::testing::grid_max(W, c.t0, c.t0 + 20.0, 400000);
    double lo = ndde::testing::grid_min(W, c.t0, c.t0 + 20.0, 400000);
    if (c.inf_limit) lo = std::min(lo, *c.inf_limit);
    EXPECT_GE(b.sup.value, hi - 1e-12);
    EXPECT_NEAR(b.sup.value, hi, 1e-4);
    EXPECT_LE(b.inf.value, lo + 1e-12);
    EXPECT_NEAR(b.inf.value, lo, 1e-4);
  }
}

TEST(WindowIntegral, SampledNeverExceedsExact) {
  const auto f = CoefficientExpr::sinusoid(0.5, 0.3, 2.0, 0.4);
  const auto h = DelayExpr::lag(1.3);
  const auto exact = window_integral_bounds(f, h, 0.0);
  const auto sampled = sampled_window_integral_bounds(f, h, 0.0, {50.0, 20000});
  EXPECT_FALSE(sampled.sup.exact);
  EXPECT_EQ(sampled.sup.samples, 20000u);
  EXPECT_DOUBLE_EQ(sampled.sup.horizon, 50.0);
  EXPECT_LE(sampled.sup.value, exact.sup.value + 1e-12);
  EXPECT_GE(sampled.inf.value, exact.inf.value - 1e-12);
}

TEST(WindowIntegral, SinusoidOverSinusoidalLagFallsBackToSampling) {
  const auto c = sup_window_integral(CoefficientExpr::sinusoid(1.0, 0.5, 2.0), DelayExpr::sinlag(1.0, 0.2, 1.0), 0.0);
  EXPECT_FALSE(c.exact);
  EXPECT_GT(c.samples, 0u);
}

TEST(RatioSupNorm, SpecExamples) {
  auto c = ratio_sup_norm(CoefficientExpr::constant(1.0 / 3.0), CoefficientExpr::constant(1.0 / 3.0), 0.0);
  EXPECT_DOUBLE_EQ(c.value, 1.0);
  EXPECT_TRUE(c.exact);
  c = ratio_sup_norm(CoefficientExpr::constant(0.2), CoefficientExpr::sinusoid(1.0, 0.5, 2.0, 0.0), 0.0);
  EXPECT_NEAR(c.value, 0.4, 1e-15);
  EXPECT_TRUE(c.exact);
  EXPECT_THROW(ratio_sup_norm(CoefficientExpr::constant(0.3), CoefficientExpr::reciprocal(1.0), 1.0),
               std::domain_error);
}

TEST(RatioSupNorm, IsAnUpperBoundOfTheSampledRatio) {
  const std::vector<std::pair<CoefficientExpr, CoefficientExpr>> pairs{
      {CoefficientExpr::sinusoid(0.2, 0.1, 1.0), CoefficientExpr::sinusoid(1.0, 0.5, 2.0)},
      {CoefficientExpr::piecewise(2.0, {0.0, 1.0}, {0.1, 0.3}), CoefficientExpr::piecewise(2.0, {0.0, 1.5}, {0.5, 1.0})},
      {CoefficientExpr::sinusoid(0.2, 0.1, 1.0), CoefficientExpr::constant(0.5)},
      {CoefficientExpr::reciprocal(0.4), CoefficientExpr::reciprocal(0.8)},
  };
  for (const auto& [num, den] : pairs) {
    const double bound = ratio_sup_norm(num, den, 1.0).value;
    const double seen =
        ndde::testing::grid_max([&](double t) { return std::abs(eval(num, t) / eval(den, t)); }, 1.0, 40.0);
    EXPECT_GE(bound, seen - 1e-12);
  }
}

TEST(Scaled, ScalesEveryVariant) {
  for (const auto& v : variants()) {
    const auto g = scaled(v.f, -2.5);
    for (double t = v.t0 + 0.1; t < v.t0 + 10.0; t += 0.77) EXPECT_NEAR(eval(g, t), -2.5 * eval(v.f, t), 1e-14);
  }
}

TEST(IntegralDiverges, PerFamily) {
  EXPECT_TRUE(integral_diverges(CoefficientExpr::constant(0.1)));
  EXPECT_FALSE(integral_diverges(CoefficientExpr::constant(0.0)));
  EXPECT_TRUE(integral_diverges(CoefficientExpr::sinusoid(1.0, 0.5, 1.0)));
  EXPECT_TRUE(integral_diverges(CoefficientExpr::reciprocal(1.0)));
}
