#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace ndde;
using ndde::testing::single;

TEST(Monotone, Theorem1InNeutralCoefficient) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ua(0.0, 0.9), ub(0.01, 1.0), ut(0.0, 2.0), frac(0.0, 1.0);
  int hits = 0;
  for (int i = 0; i < 3000; ++i) {
    const double a = ua(rng), b = ub(rng), sigma = ut(rng), tau = ut(rng);
    if (!satisfied(check_criterion(single(a, sigma, b, tau), "thm1"))) continue;
    ++hits;
    for (int k = 0; k < 5; ++k) {
      const double smaller = a * frac(rng);
      EXPECT_TRUE(satisfied(check_criterion(single(smaller, sigma, b, tau), "thm1")))
          << "a=" << a << " a'=" << smaller << " b=" << b << " tau=" << tau;
      EXPECT_TRUE(satisfied(check_criterion(single(-smaller, sigma, b, tau), "thm1")));
    }
  }
  EXPECT_GT(hits, 100);
}

TEST(Monotone, WorkedFamilyVerdictsInTau) {
  // Below each threshold the criterion holds, above it fails.
  const auto rows = closed_form_thresholds(1.0 / 3.0, 1.0 / 3.0);
  for (const auto& r : rows) {
    const auto ok = criterion_union(r.oracle);
    for (double sigma : {0.0, 1.0, 2.0}) {
      if (sigma == 0.0 && (r.label == "P2" || r.label == "P2a")) {
        // both need a positive neutral lag
        EXPECT_EQ(check_criterion(example1_equation(0.5 * r.closed_form, sigma), r.label).verdict, Verdict::NotApplicable);
        continue;
      }
      for (double f : {0.1, 0.5, 0.9, 0.999}) {
        EXPECT_TRUE(ok(example1_equation(f * r.closed_form, sigma))) << r.label << " sigma=" << sigma << " f=" << f;
      }
      for (double f : {1.001, 1.1, 1.5}) {
        EXPECT_FALSE(ok(example1_equation(f * r.closed_form, sigma))) << r.label << " sigma=" << sigma << " f=" << f;
      }
    }
  }
}

TEST(ThresholdTable, BisectionMatchesClosedForms) {
  const double want[] = {7.0 / 6.0, std::sqrt(6.0), 5.0 / 9.0, 3.0 / kE, 1.0 + 3.0 / kE};
  for (double sigma : {0.5, 1.0, 2.0}) {
    const auto rows = example1_thresholds(sigma);
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_NEAR(rows[i].closed_form, want[i], 1e-9) << rows[i].label;
      EXPECT_NEAR(rows[i].bisected, want[i], 1e-4) << rows[i].label << " sigma=" << sigma;
    }
  }
}

TEST(ThresholdTable, ClosedFormsAgreeWithVerdictsForOtherCoefficients) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> ua(0.02, 0.45), ub(0.1, 1.0);
  for (int i = 0; i < 40; ++i) {
    const double a = ua(rng), b = ub(rng);
    for (const auto& r : closed_form_thresholds(a, b)) {
      if (!(r.closed_form > 1e-3)) continue;
      const auto ok = criterion_union(r.oracle);
      const double th =
          bisect_threshold([&](double tau) { return ok(example1_equation(tau, 1.0, a, b)); }, 1e-4, 4.0 * r.closed_form, 1e-9);
      EXPECT_NEAR(th, r.closed_form, 1e-7) << r.label << " a=" << a << " b=" << b;
    }
  }
}

TEST(Consistency, Corollary1ImpliesTheorem1) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> ua(-0.6, 0.6), ub(0.01, 1.0), ut(0.0, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const auto eq = single(ua(rng), ut(rng), ub(rng), ut(rng));
    if (satisfied(check_criterion(eq, "cor1"))) {
      EXPECT_TRUE(satisfied(check_criterion(eq, "thm1")));
    }
  }
}

TEST(Consistency, SatisfiedWitnessesHoldWithMargin) {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> ua(0.0, 0.6), ub(0.01, 1.0), ut(0.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    NeutralEquation eq = single(ua(rng), ut(rng), ub(rng), ut(rng));
    if (i % 2) eq.delay.push_back({CoefficientExpr::constant(0.5 * ub(rng)), DelayExpr::lag(ut(rng))});
    for (const auto& v : evaluate_all(eq)) {
      if (!satisfied(v) || v.witnesses.empty()) continue;
      // at least one branch passes: some witness holds under its rule
      bool any = false;
      for (const auto& w : v.witnesses) any = any || outcome(w) == Outcome::Pass;
      EXPECT_TRUE(any) << v.criterion;
    }
  }
}

TEST(Consistency, NotApplicableNamesAReason) {
  const std::vector<NeutralEquation> eqs{
      single(CoefficientExpr::constant(0.4), DelayExpr::proportional(0.5), CoefficientExpr::reciprocal(1.0),
             DelayExpr::proportional(0.7), 1.0),
      single(0.2, 1.0, 0.3, 1.0),
      single(1.2, 1.0, 0.3, 1.0),
  };
  for (const auto& eq : eqs) {
    for (const auto& v : evaluate_all(eq)) {
      if (v.verdict == Verdict::NotApplicable) {
        EXPECT_FALSE(v.note.empty()) << v.criterion;
      }
    }
  }
}

TEST(SubsetDominance, FixedSubsetsAgreeWithSearch) {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> ua(0.0, 0.5), ub(0.0, 0.6), ut(0.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    NeutralEquation eq = single(ua(rng), ut(rng), ub(rng), ut(rng));
    eq.delay.push_back({CoefficientExpr::constant(ub(rng)), DelayExpr::lag(ut(rng))});
    for (const char* id : {"thm5", "thm6"}) {
      const auto v = check_criterion(eq, id);
      if (!satisfied(v)) continue;
      const auto fixed = std::string(id) == "thm5" ? check_theorem5_subset(eq, *v.subset)
                                                    : check_theorem6_subset(eq, *v.subset);
      ASSERT_EQ(fixed.witnesses.size(), v.witnesses.size());
      for (std::size_t k = 0; k < v.witnesses.size(); ++k) {
        EXPECT_EQ(fixed.witnesses[k].label, v.witnesses[k].label);
        EXPECT_EQ(fixed.witnesses[k].lhs, v.witnesses[k].lhs);
        EXPECT_EQ(fixed.witnesses[k].rhs, v.witnesses[k].rhs);
      }
    }
  }
}

TEST(Lemma4, InverseETestIntegralBoundedByOne) {
  const std::vector<std::pair<CoefficientExpr, DelayExpr>> cases{
      {CoefficientExpr::constant(kInvE), DelayExpr::lag(1.0)},
      {CoefficientExpr::constant(0.2), DelayExpr::lag(1.5)},
  };
  for (const auto& [a, h] : cases) {
    ASSERT_LE(sup_window_integral(a, h, 0.0).value, kInvE + 1e-15);
    EXPECT_LE(lemma4_max_integral(a, h, 0.0, 15.0, 1e-3), 1.0 + 1e-3);
  }
}

TEST(Lemma9, PrefixBoundOnRandomForcedRuns) {
  std::mt19937_64 rng(127);
  std::uniform_real_distribution<double> ua(-0.6, 0.6), ub(0.0, 1.0), ut(0.1, 2.0), uf(0.1, 3.0);
  for (int i = 0; i < 8; ++i) {
    const auto eq = single(ua(rng), ut(rng), ub(rng), ut(rng));
    const auto f = CoefficientExpr::sinusoid(0.2 * ua(rng), ub(rng), uf(rng));
    const auto tr = integrate(eq, HistorySpec::zero(), 20.0, 2e-3, f);
    EXPECT_LE(lemma9_max_excess(eq, tr, f), 1e-6) << describe(eq);
  }
}

TEST(Sigma, NonDecreasingAndExactRule) {
  EXPECT_EQ(compute_sigma(kInvE), 1.0);
  double prev = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double s = compute_sigma(1.5 * i / 49.0);
    EXPECT_GE(s, prev - 1e-9);
    prev = s;
  }
}
