#pragma once

// sigma(omega): the L1 norm of the fundamental solution of x'(t) = -x(t - omega),
// and the positive-root scan for lambda = a lambda e^{sigma lambda} + b e^{tau lambda}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ndde/funcmodel.hpp"

namespace ndde {

struct SigmaOptions {
  double max_step = 1e-3;
  double tail_tol = 1e-8;
  double block = 50.0;
  double horizon_cap = 5e5;
};

/// ∫_0^∞ |x_omega(s)| ds for 0 <= omega < pi/2.
///
/// Since ∫ x_omega = 1 exactly, the value is 1 + 2 ∫ (x_omega)^-, so only
/// the negative part is integrated numerically. Exactly 1 for omega <= 1/e
/// where x_omega stays positive.
inline double compute_sigma(double omega, SigmaOptions opts = {}) {
  if (!(omega >= 0.0)) throw std::invalid_argument("compute_sigma: omega must be non-negative");
  if (omega >= std::numbers::pi / 2) {
    throw std::domain_error("compute_sigma: integral diverges for omega >= pi/2");
  }
  if (omega <= kInvE) return 1.0;

  const auto N = static_cast<std::size_t>(std::ceil(omega / opts.max_step));
  const double dt = omega / static_cast<double>(N);
  // ring holds x_{n-N} .. x_n
  std::vector<double> ring(N + 1, 0.0);
  std::size_t head = 0;  // slot of x_n
  ring[0] = 1.0;
  auto slot = [&](std::size_t back) { return (head + ring.size() - back) % ring.size(); };

  double negative = 0.0;
  double block_max = 0.0;
  double prev_block_max = 0.0;
  std::size_t blocks = 0;
  const auto steps_per_block = static_cast<std::size_t>(std::ceil(opts.block / dt));
  const auto max_steps = static_cast<std::size_t>(std::ceil(opts.horizon_cap / dt));

  for (std::size_t n = 0; n < max_steps; ++n) {
    const double xn = ring[head];
    double next = xn;
    if (n >= N) {
      // segment [t_n, t_{n+1}] reads x on [t_{n-N}, t_{n+1-N}]
      next = xn - 0.5 * dt * (ring[slot(N)] + ring[slot(N - 1)]);
    }
    if (xn < 0.0 && next <= 0.0) {
      negative += -0.5 * (xn + next) * dt;
    } else if ((xn < 0.0) != (next < 0.0)) {
      const double neg = xn < 0.0 ? -xn : -next;
      negative += 0.5 * dt * neg * neg / (std::abs(xn) + std::abs(next));
    }
    head = (head + 1) % ring.size();
    ring[head] = next;
    block_max = std::max(block_max, std::abs(next));

    if ((n + 1) % steps_per_block == 0) {
      ++blocks;
      if (blocks >= 3 && prev_block_max > 0.0) {
        const double r = block_max / prev_block_max;
        if (r < 1.0) {
          const double tail = block_max * opts.block * r / (1.0 - r);
          if (2.0 * tail < opts.tail_tol) break;
        }
      }
      prev_block_max = block_max;
      block_max = 0.0;
    }
  }
  return 1.0 + 2.0 * negative;
}

/// The omega grid used by the scanning criteria: 200 points on
/// [0, pi/2 - 0.01] plus 1/e, sorted.
inline std::vector<double> omega_scan_grid() {
  std::vector<double> grid;
  const double hi = std::numbers::pi / 2 - 0.01;
  for (int i = 0; i < 200; ++i) grid.push_back(hi * i / 199.0);
  grid.push_back(kInvE);
  std::sort(grid.begin(), grid.end());
  return grid;
}

/// sigma on omega_scan_grid(), computed once.
inline const std::vector<std::pair<double, double>>& sigma_table() {
  static const std::vector<std::pair<double, double>> table = [] {
    std::vector<std::pair<double, double>> t;
    for (double w : omega_scan_grid()) t.emplace_back(w, compute_sigma(w));
    return t;
  }();
  return table;
}

struct RootScan {
  bool found = false;
  double root = 0.0;
  double max_value = -kInf;  // largest F seen on the scan grid
};

/// Looks for a positive root of F(l) = l - a l e^{sigma l} - b e^{tau l}.
/// F(0) = -b < 0, so any positive sample certifies a root, which is then
/// refined by bisection.
inline RootScan char_root_positive(double a, double b, double sigma, double tau,
                                   std::size_t points = 10000) {
  auto F = [&](double l) {
    double v = l;
    if (a != 0.0) v -= a * l * std::exp(sigma * l);
    if (b != 0.0) v -= b * std::exp(tau * l);
    return v;
  };
  const double Lambda = 10.0 * std::max({1.0, sigma > 0.0 ? 1.0 / sigma : 1.0, b});
  const double lo = Lambda * 1e-6;
  RootScan out;
  double prev = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double l = lo * std::pow(Lambda / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    const double v = F(l);
    out.max_value = std::max(out.max_value, v);
    if (v > 0.0 && !out.found) {
      double left = prev;
      double right = l;
      while (right - left > 1e-10) {
        const double mid = 0.5 * (left + right);
        (F(mid) > 0.0 ? right : left) = mid;
      }
      out.found = true;
      out.root = 0.5 * (left + right);
    }
    prev = l;
  }
  return out;
}

}  // namespace ndde
