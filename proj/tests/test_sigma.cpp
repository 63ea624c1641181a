#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "support.hpp"

using namespace ndde;

namespace {

// ∫_0^T |x| for x' = -x(t - w), x(0) = 1, x = 0 before 0, by a plain
// trapezoid ring buffer at a step much finer than the library's. w > 0.
double sigma_oracle(double w, double T, double dt) {
  const auto N = static_cast<std::size_t>(std::llround(w / dt));
  std::deque<double> past(N, 0.0);  // x_{n-N} .. x_{n-1}
  double x = 1.0, acc = 0.0;
  const auto steps = static_cast<std::size_t>(T / dt);
  for (std::size_t n = 0; n < steps; ++n) {
    const double lagged_now = past.front();
    const double lagged_next = N == 1 ? x : past[1];
    const double next = x - 0.5 * dt * (lagged_now + lagged_next);
    past.pop_front();
    past.push_back(x);
    acc += 0.5 * dt * (std::abs(x) + std::abs(next));
    x = next;
  }
  return acc;
}

}  // namespace

TEST(Sigma, ExactRuleBelowInverseE) {
  EXPECT_EQ(compute_sigma(0.0), 1.0);
  EXPECT_EQ(compute_sigma(kInvE), 1.0);
  EXPECT_EQ(compute_sigma(0.2), 1.0);
}

TEST(Sigma, DomainErrors) {
  EXPECT_THROW(compute_sigma(-0.1), std::invalid_argument);
  EXPECT_THROW(compute_sigma(std::numbers::pi / 2), std::domain_error);
  EXPECT_THROW(compute_sigma(2.0), std::domain_error);
}

TEST(Sigma, OscillatoryRegimeExceedsOne) {
  const double s = compute_sigma(0.5);
  EXPECT_GT(s, 1.0);
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_GT(compute_sigma(1.5), 10.0);
}

TEST(Sigma, MatchesIndependentIntegration) {
  for (double w : {0.5, 0.8, 1.0, 1.2}) {
    const double want = sigma_oracle(w, 200.0, 1e-4);
    EXPECT_NEAR(compute_sigma(w), want, 2e-3 * want) << "w=" << w;
  }
}

TEST(Sigma, NonDecreasingOnGrid) {
  double prev = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double w = 1.5 * i / 49.0;
    const double s = compute_sigma(w);
    EXPECT_GE(s, prev - 1e-9) << "w=" << w;
    prev = s;
  }
}

TEST(Sigma, TableCoversScanGrid) {
  const auto& table = sigma_table();
  const auto grid = omega_scan_grid();
  ASSERT_EQ(table.size(), grid.size());
  EXPECT_EQ(grid.size(), 201u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_NEAR(grid.back(), std::numbers::pi / 2 - 0.01, 1e-15);
}

TEST(CharRoot, SpecExamples) {
  auto r = char_root_positive(0.1, 0.01, 0.1, 0.1);
  EXPECT_TRUE(r.found);
  const double l = r.root;
  EXPECT_NEAR(l - 0.1 * l * std::exp(0.1 * l) - 0.01 * std::exp(0.1 * l), 0.0, 1e-8);

  EXPECT_FALSE(char_root_positive(0.9, 1.0, 1.0, 1.0).found);

  r = char_root_positive(0.0, 0.7, 0.0, 0.0);
  EXPECT_TRUE(r.found);
  EXPECT_NEAR(r.root, 0.7, 1e-9);
}
