#pragma once

// Independent numeric oracles shared by the test binaries. Nothing here
// calls into the library's closed forms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ndde/ndde.hpp"

namespace ndde::testing {

inline constexpr double kPi = std::numbers::pi;

/// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                      int depth = 50) {
  struct S {
    const std::function<double(double)>& f;
    double rec(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
      return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1);
    }
  } s{f};
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return s.rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Simpson over [a, b] split at the given interior points, for integrands
/// with known jumps.
inline double simpson_split(const std::function<double(double)>& f, double a, double b, std::vector<double> cuts,
                            double tol = 1e-12) {
  cuts.push_back(b);
  double total = 0.0, left = a;
  for (double c : cuts) {
    if (c <= left || c > b) continue;
    total += simpson(f, left, c, tol);
    left = c;
  }
  return total;
}

/// Brute-force sup of f over a dense grid.
inline double grid_max(const std::function<double(double)>& f, double a, double b, std::size_t n = 200000) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= n; ++i) m = std::max(m, f(a + (b - a) * static_cast<double>(i) / static_cast<double>(n)));
  return m;
}

inline double grid_min(const std::function<double(double)>& f, double a, double b, std::size_t n = 200000) {
  return -grid_max([&](double t) { return -f(t); }, a, b, n);
}

inline NeutralEquation single(double a, double sigma, double b, double tau, double t0 = 0.0) {
  NeutralEquation eq;
  eq.t0 = t0;
  if (a != 0.0 || sigma != 0.0) eq.neutral.push_back({CoefficientExpr::constant(a), DelayExpr::lag(sigma)});
  eq.delay.push_back({CoefficientExpr::constant(b), DelayExpr::lag(tau)});
  return eq;
}

inline NeutralEquation single(const CoefficientExpr& a, const DelayExpr& g, const CoefficientExpr& b,
                              const DelayExpr& h, double t0 = 0.0) {
  NeutralEquation eq;
  eq.t0 = t0;
  eq.neutral.push_back({a, g});
  eq.delay.push_back({b, h});
  return eq;
}

inline Trajectory synthetic(const std::function<double(double)>& x, double t_end, double dt) {
  Trajectory tr;
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    tr.t.push_back(t);
    tr.x.push_back(x(t));
    tr.xdot.push_back(0.0);
  }
  tr.meta.dt = dt;
  return tr;
}

}  // namespace ndde::testing
