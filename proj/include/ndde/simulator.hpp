#pragma once

// Method-of-steps integrator for the neutral equation, fundamental functions,
// the decay estimator and threshold bisection.
//
// Scheme: x(h(t)) is read by linear interpolation of stored x, x'(g(t)) by
// the nearest stored derivative; x advances by the trapezoid rule. When a
// lookup lands on the point being computed the step is solved by fixed-point
// iteration, which contracts because the neutral norms sum to less than one.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ndde/equation.hpp"
#include "ndde/funcmodel.hpp"
#include "ndde/parallel.hpp"

namespace ndde {

struct TrajectoryMeta {
  double dt = 0.0;   // uniform step, or 0 on a geometric grid
  double eta = 0.0;  // geometric ratio minus one, or 0 on a uniform grid
  std::string method;
  std::uint64_t fingerprint = 0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> xdot;
  TrajectoryMeta meta;
};

struct StepOptions {
  double tol = 1e-12;  // relative change of x'(t_n) between iterations
  int max_iter = 100;
};

namespace detail {

class Grid {
 public:
  static Grid uniform(double start, double dt) { return Grid(start, dt, 0.0); }
  static Grid geometric(double start, double eta) { return Grid(start, 0.0, eta); }

  bool is_uniform() const { return eta_ == 0.0; }
  double start() const { return start_; }
  double dt() const { return dt_; }
  double eta() const { return eta_; }

  double time(std::int64_t i) const {
    if (is_uniform()) return start_ + static_cast<double>(i) * dt_;
    return start_ * std::exp(static_cast<double>(i) * log_ratio_);
  }

  /// Continuous grid coordinate of s; integers are grid points.
  double position(double s) const {
    if (is_uniform()) return (s - start_) / dt_;
    return std::log(s / start_) / log_ratio_;
  }

 private:
  Grid(double start, double dt, double eta)
      : start_(start), dt_(dt), eta_(eta), log_ratio_(eta > 0.0 ? std::log1p(eta) : 0.0) {}
  double start_;
  double dt_;
  double eta_;
  double log_ratio_;
};

struct Locus {
  std::int64_t index;  // left node
  double frac;         // weight of the right node, in [0, 1)
};

inline constexpr double kSnap = 1e-9;

inline Locus locate(const Grid& g, double s) {
  const double pos = g.position(s);
  double idx = std::floor(pos);
  double frac = pos - idx;
  if (frac > 1.0 - kSnap) {
    idx += 1.0;
    frac = 0.0;
  } else if (frac < kSnap) {
    frac = 0.0;
  }
  const auto i = static_cast<std::int64_t>(idx);
  if (frac != 0.0 && !g.is_uniform()) {
    const double left = g.time(i);
    frac = (s - left) / (g.time(i + 1) - left);
  }
  return {i, frac};
}

class Engine {
 public:
  Engine(const NeutralEquation& eq, Grid grid, std::optional<HistorySpec> history,
         std::optional<CoefficientExpr> forcing, double start_value, StepOptions opts)
      : eq_(eq), grid_(grid), history_(std::move(history)), forcing_(std::move(forcing)), opts_(opts) {
    if (eq_.kernel && !grid_.is_uniform()) {
      throw std::invalid_argument("distributed kernels need a uniform grid");
    }
    start_value_ = start_value;
  }

  Trajectory run(std::int64_t steps) {
    t_.reserve(static_cast<std::size_t>(steps) + 1);
    x_.reserve(static_cast<std::size_t>(steps) + 1);
    xd_.reserve(static_cast<std::size_t>(steps) + 1);
    for (std::int64_t n = 0; n <= steps; ++n) step(n);
    Trajectory out;
    out.t = std::move(t_);
    out.x = std::move(x_);
    out.xdot = std::move(xd_);
    return out;
  }

  /// Residual |x'_i - F_i| of a finished trajectory.
  static double residual(const NeutralEquation& eq, const Grid& grid, const Trajectory& tr,
                         std::optional<HistorySpec> history, std::optional<CoefficientExpr> forcing) {
    Engine e(eq, grid, std::move(history), std::move(forcing), tr.x.front(), {});
    e.t_ = tr.t;
    e.x_ = tr.x;
    e.xd_ = tr.xdot;
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      e.current_ = static_cast<std::int64_t>(i);
      worst = std::max(worst, std::abs(tr.xdot[i] - e.rhs(tr.t[i])));
    }
    return worst;
  }

 private:
  double hist_x(double s) const { return history_ ? eval(history_->phi, s) : 0.0; }
  double hist_xd(double s) const { return history_ ? eval(history_->psi, s) : 0.0; }

  double node_x(std::int64_t i) {
    if (i < 0) return hist_x(grid_.time(i));
    if (i == current_) touched_ = true;
    return x_[static_cast<std::size_t>(i)];
  }

  double lookup_x(double s) {
    const auto loc = locate(grid_, s);
    if (loc.index < 0) {
      if (loc.index == -1 && loc.frac == 0.0) return hist_x(s);
      return hist_x(s);
    }
    const double left = node_x(loc.index);
    if (loc.frac == 0.0) return left;
    return left + loc.frac * (node_x(loc.index + 1) - left);
  }

  double lookup_xd(double s) {
    const auto loc = locate(grid_, s);
    if (loc.index < 0) return hist_xd(s);
    const std::int64_t i = loc.frac < 0.5 ? loc.index : loc.index + 1;
    if (i == current_) touched_ = true;
    return xd_[static_cast<std::size_t>(i)];
  }

  // ∫_{h(t)}^t K(t,s) x(s) ds, trapezoid on grid nodes (virtual nodes before
  // the start read the history) with the partial first cell interpolated.
  double kernel_term(double t) {
    const auto& k = *eq_.kernel;
    const double lower = apply(k.h, t);
    if (!(lower < t)) return 0.0;
    const auto loc = locate(grid_, lower);
    const std::int64_t first = loc.frac == 0.0 ? loc.index : loc.index + 1;
    double sum = 0.0;
    double prev_s = lower;
    double prev_v = kernel_value(k, t, lower) * lookup_x(lower);
    for (std::int64_t j = first; j <= current_; ++j) {
      const double s = grid_.time(j);
      const double v = kernel_value(k, t, s) * node_x(j);
      sum += 0.5 * (s - prev_s) * (v + prev_v);
      prev_s = s;
      prev_v = v;
    }
    return sum;
  }

  // The right-hand side F(t) = Σ a x'(g) - Σ b x(h) - ∫K x + f.
  double rhs(double t) {
    double v = 0.0;
    for (const auto& n : eq_.neutral) v += eval(n.a, t) * lookup_xd(apply(n.g, t));
    for (const auto& d : eq_.delay) v -= eval(d.b, t) * lookup_x(apply(d.h, t));
    if (eq_.kernel) v -= kernel_term(t);
    if (forcing_) v += eval(*forcing_, t);
    return v;
  }

  void step(std::int64_t n) {
    const double t = grid_.time(n);
    current_ = n;
    t_.push_back(t);
    if (n == 0) {
      x_.push_back(start_value_);
      xd_.push_back(0.0);
    } else {
      const double h = t - t_[static_cast<std::size_t>(n - 1)];
      x_.push_back(x_.back() + h * xd_.back());
      xd_.push_back(xd_.back());
    }
    const std::size_t i = static_cast<std::size_t>(n);
    for (int iter = 0;; ++iter) {
      touched_ = false;
      const double f = rhs(t);
      const double change = std::abs(f - xd_[i]);
      xd_[i] = f;
      if (n > 0) {
        const double h = t - t_[i - 1];
        x_[i] = x_[i - 1] + 0.5 * h * (xd_[i - 1] + xd_[i]);
      }
      if (!touched_) return;
      if (iter > 0 && change <= opts_.tol * std::max(1.0, std::abs(f))) return;
      if (iter + 1 >= opts_.max_iter) {
        throw std::runtime_error("fixed-point iteration did not converge at t = " + std::to_string(t));
      }
    }
  }

  const NeutralEquation& eq_;
  Grid grid_;
  std::optional<HistorySpec> history_;  // nullopt: zero history
  std::optional<CoefficientExpr> forcing_;
  StepOptions opts_;
  double start_value_ = 0.0;
  std::vector<double> t_, x_, xd_;
  std::int64_t current_ = 0;
  bool touched_ = false;
};

inline void require_well_posed(const NeutralEquation& eq) {
  for (const auto& f : validate(eq)) {
    if (f.severity == Severity::Error) throw std::invalid_argument("ill-posed equation: " + f.message);
  }
}

inline std::int64_t step_count(double span, double dt) {
  const double n = span / dt;
  const double r = std::round(n);
  if (std::abs(n - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(n));
}

}  // namespace detail

/// Solves the initial value problem on [t0, t_end] with uniform step dt.
inline Trajectory integrate(const NeutralEquation& eq, const HistorySpec& hist, double t_end, double dt,
                            const std::optional<CoefficientExpr>& forcing = std::nullopt, StepOptions opts = {}) {
  detail::require_well_posed(eq);
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(t_end > eq.t0)) throw std::invalid_argument("integrate: t_end must exceed t0");
  const auto grid = detail::Grid::uniform(eq.t0, dt);
  detail::Engine engine(eq, grid, hist, forcing, eval(hist.phi, eq.t0), opts);
  auto tr = engine.run(detail::step_count(t_end - eq.t0, dt));
  tr.meta = {dt, 0.0, "steps-trapezoid-uniform", fingerprint(eq)};
  return tr;
}

/// Same scheme on the geometric grid t_i = t0 (1 + eta)^i (t0 > 0), which
/// keeps proportional-delay lookups resolved over long horizons.
inline Trajectory integrate_geometric(const NeutralEquation& eq, const HistorySpec& hist, double t_end,
                                      double eta = 1e-3,
                                      const std::optional<CoefficientExpr>& forcing = std::nullopt,
                                      StepOptions opts = {}) {
  detail::require_well_posed(eq);
  if (!(eq.t0 > 0.0)) throw std::invalid_argument("integrate_geometric: t0 must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("integrate_geometric: eta must be positive");
  if (!(t_end > eq.t0)) throw std::invalid_argument("integrate_geometric: t_end must exceed t0");
  const auto grid = detail::Grid::geometric(eq.t0, eta);
  const auto steps = static_cast<std::int64_t>(std::ceil(std::log(t_end / eq.t0) / std::log1p(eta) - 1e-9));
  detail::Engine engine(eq, grid, hist, forcing, eval(hist.phi, eq.t0), opts);
  auto tr = engine.run(steps);
  tr.meta = {0.0, eta, "steps-trapezoid-geometric", fingerprint(eq)};
  return tr;
}

/// Largest |x'_i - F(t_i)| over a trajectory produced by integrate or
/// integrate_geometric.
inline double max_residual(const NeutralEquation& eq, const HistorySpec& hist, const Trajectory& tr,
                           const std::optional<CoefficientExpr>& forcing = std::nullopt) {
  const auto grid = tr.meta.eta > 0.0 ? detail::Grid::geometric(tr.t.front(), tr.meta.eta)
                                      : detail::Grid::uniform(tr.t.front(), tr.meta.dt);
  return detail::Engine::residual(eq, grid, tr, hist, forcing);
}

/// Linear interpolation of x; 0 before the first sample.
inline double value_at(const Trajectory& tr, double t) {
  if (tr.t.empty() || t < tr.t.front()) return 0.0;
  if (t >= tr.t.back()) return tr.x.back();
  const auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - tr.t.begin()) - 1;
  const double w = (t - tr.t[i]) / (tr.t[i + 1] - tr.t[i]);
  return tr.x[i] + w * (tr.x[i + 1] - tr.x[i]);
}

/// X(., s): zero history before s and X(s, s) = 1.
inline Trajectory fundamental(const NeutralEquation& eq, double s, double t_end, double dt, StepOptions opts = {}) {
  detail::require_well_posed(eq);
  if (s < eq.t0) throw std::invalid_argument("fundamental: s must be >= t0");
  if (!(dt > 0.0) || !(t_end > s)) throw std::invalid_argument("fundamental: need dt > 0 and t_end > s");
  const auto grid = detail::Grid::uniform(s, dt);
  detail::Engine engine(eq, grid, std::nullopt, std::nullopt, 1.0, opts);
  auto tr = engine.run(detail::step_count(t_end - s, dt));
  tr.meta = {dt, 0.0, "fundamental-uniform", fingerprint(eq)};
  return tr;
}

namespace detail {

// Fundamental functions X(., s_j) on s_j = t0 + j ds, j = 0..count-1.
inline std::vector<Trajectory> fundamentals_on_grid(const NeutralEquation& eq, double t0, double ds, std::size_t count,
                                                    double t_end, double dt) {
  std::vector<Trajectory> out(count);
  parallel_for(count, [&](std::size_t j) {
    const double s = t0 + static_cast<double>(j) * ds;
    if (t_end - s < dt * 0.5) {
      Trajectory single;
      single.t = {s};
      single.x = {1.0};
      single.xdot = {0.0};
      out[j] = std::move(single);
    } else {
      out[j] = fundamental(eq, s, t_end, dt);
    }
  });
  return out;
}

inline std::size_t ratio_steps(double ds, double dt) {
  const double r = ds / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n) throw std::invalid_argument("ds must be an integer multiple of dt");
  return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Compares the direct solution of x' + b x(h) = f (zero history) with the
/// assembly ∫_{t0}^t X(t,s) f(s) ds built from fundamentals on an s-grid of
/// spacing ds. Returns the largest deviation over probes on that grid.
inline double representation_check(const CoefficientExpr& b, const DelayExpr& h, const CoefficientExpr& f,
                                    double t_end, double dt, double ds = 1e-2, double t0 = 0.0) {
  NeutralEquation eq;
  eq.t0 = t0;
  eq.delay.push_back({b, h});
  detail::ratio_steps(ds, dt);
  const auto direct = integrate(eq, HistorySpec::zero(), t_end, dt, f);
  const auto count = static_cast<std::size_t>(detail::step_count(t_end - t0, ds)) + 1;
  const auto X = detail::fundamentals_on_grid(eq, t0, ds, count, t_end, dt);

  double worst = 0.0;
  for (std::size_t p = 1; p < count; ++p) {
    const double t = t0 + static_cast<double>(p) * ds;
    double acc = 0.0;
    for (std::size_t j = 0; j <= p; ++j) {
      const double s = t0 + static_cast<double>(j) * ds;
      const double w = (j == 0 || j == p) ? 0.5 : 1.0;
      acc += w * value_at(X[j], t) * eval(f, s);
    }
    acc *= ds;
    worst = std::max(worst, std::abs(acc - value_at(direct, t)));
  }
  return worst;
}

/// max over probes t of ∫_{t0+tau0}^t X0(t,s) a(s) ds for x' + a x(h0) = 0,
/// with the s-integral assembled by the trapezoid rule on spacing ds.
inline double lemma4_max_integral(const CoefficientExpr& a, const DelayExpr& h0, double t0, double t_end, double dt,
                                  double ds = 1e-2) {
  NeutralEquation eq;
  eq.t0 = t0;
  eq.delay.push_back({a, h0});
  detail::ratio_steps(ds, dt);
  const double tau0 = sup_lag(h0);
  if (!std::isfinite(tau0)) throw std::invalid_argument("lemma4_max_integral: needs a bounded delay");
  const auto first = static_cast<std::size_t>(std::ceil(tau0 / ds - 1e-9));
  const auto count = static_cast<std::size_t>(detail::step_count(t_end - t0, ds)) + 1;
  if (first + 1 >= count) throw std::invalid_argument("lemma4_max_integral: horizon too short");
  std::vector<Trajectory> X(count);
  parallel_for(count - first, [&](std::size_t k) {
    const std::size_t j = first + k;
    const double s = t0 + static_cast<double>(j) * ds;
    if (j + 1 < count) X[j] = fundamental(eq, s, t_end, dt);
    else X[j] = Trajectory{{s}, {1.0}, {0.0}, {}};
  });
  double worst = 0.0;
  for (std::size_t p = first + 1; p < count; ++p) {
    const double t = t0 + static_cast<double>(p) * ds;
    double acc = 0.0;
    for (std::size_t j = first; j <= p; ++j) {
      const double s = t0 + static_cast<double>(j) * ds;
      const double w = (j == first || j == p) ? 0.5 : 1.0;
      acc += w * value_at(X[j], t) * eval(a, s);
    }
    worst = std::max(worst, acc * ds);
  }
  return worst;
}

/// Largest excess of sup_I |x'| over Σ‖b_k‖/(1-Σ‖a_k‖) sup_I |x| + ‖f‖/(1-Σ‖a_k‖)
/// across prefix intervals I = [t0, t_i] of a zero-history trajectory.
inline double lemma9_max_excess(const NeutralEquation& eq, const Trajectory& tr,
                                const std::optional<CoefficientExpr>& forcing = std::nullopt) {
  double na = 0.0;
  for (const auto& n : eq.neutral) na += sup_norm(n.a, eq.t0).value;
  double nb = 0.0;
  for (const auto& d : eq.delay) nb += sup_norm(d.b, eq.t0).value;
  const double nf = forcing ? sup_norm(*forcing, eq.t0).value : 0.0;
  double sup_x = 0.0, sup_xd = 0.0, worst = -kInf;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    sup_x = std::max(sup_x, std::abs(tr.x[i]));
    sup_xd = std::max(sup_xd, std::abs(tr.xdot[i]));
    worst = std::max(worst, sup_xd - (nb * sup_x + nf) / (1.0 - na));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Decay estimation and threshold search
// ---------------------------------------------------------------------------

enum class DecayClass { Decaying, Growing, Inconclusive };

inline const char* to_string(DecayClass c) {
  switch (c) {
    case DecayClass::Decaying: return "Decaying";
    case DecayClass::Growing: return "Growing";
    case DecayClass::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct DecayEstimate {
  double gamma_hat = 0.0;
  double M_hat = 0.0;
  double r2 = 0.0;
  DecayClass classification = DecayClass::Inconclusive;
  std::size_t windows_used = 0;
};

struct DecayOptions {
  std::size_t windows = 20;
  double tail_fraction = 0.75;
  double gamma_min = 1e-3;
  double r2_min = 0.9;
  double floor = 1e-300;
};

/// Least-squares fit of log(max |x|) per window over the last part of the
/// horizon; gamma_hat is minus the slope.
inline DecayEstimate estimate_decay(const Trajectory& tr, DecayOptions opts = {}) {
  DecayEstimate est;
  if (tr.t.size() < 2) throw std::invalid_argument("estimate_decay: trajectory too short");
  const double t_first = tr.t.front();
  const double t_last = tr.t.back();
  const double begin = t_last - opts.tail_fraction * (t_last - t_first);
  const double width = (t_last - begin) / static_cast<double>(opts.windows);

  std::vector<double> peak(opts.windows, 0.0);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.t[i] < begin) continue;
    auto w = static_cast<std::size_t>((tr.t[i] - begin) / width);
    if (w >= opts.windows) w = opts.windows - 1;
    peak[w] = std::max(peak[w], std::abs(tr.x[i]));
  }

  bool all_zero = true;
  for (double v : tr.x) all_zero = all_zero && v == 0.0;
  if (all_zero) {
    est.gamma_hat = kInf;
    est.r2 = 1.0;
    est.classification = DecayClass::Decaying;
    return est;
  }

  std::vector<double> xs, ys;
  bool vanished = false;
  for (std::size_t w = 0; w < opts.windows; ++w) {
    if (peak[w] < opts.floor) {
      vanished = true;
      continue;
    }
    xs.push_back(begin + (static_cast<double>(w) + 0.5) * width - t_first);
    ys.push_back(std::log(peak[w]));
  }
  est.windows_used = xs.size();
  if (xs.size() < 3) {
    // The solution fell below the representable floor over most of the tail.
    if (vanished) {
      est.gamma_hat = kInf;
      est.r2 = 1.0;
      est.classification = DecayClass::Decaying;
    }
    return est;
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  est.gamma_hat = -slope;
  est.M_hat = std::exp(intercept);
  est.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  if (est.r2 >= opts.r2_min && est.gamma_hat >= opts.gamma_min) {
    est.classification = DecayClass::Decaying;
  } else if (est.r2 >= opts.r2_min && est.gamma_hat <= -opts.gamma_min) {
    est.classification = DecayClass::Growing;
  }
  return est;
}

class ThresholdError : public std::runtime_error {
 public:
  ThresholdError(double lo, bool lo_ok, double hi, bool hi_ok)
      : std::runtime_error("endpoints do not bracket a transition: oracle(" + std::to_string(lo) + ") = " +
                           (lo_ok ? "stable" : "not stable") + ", oracle(" + std::to_string(hi) +
                           ") = " + (hi_ok ? "stable" : "not stable")) {}
};

/// Bisection on a Boolean oracle until the bracket is no wider than tol;
/// returns the bracket midpoint.
inline double bisect_threshold(const std::function<bool(double)>& oracle, double lo, double hi, double tol) {
  if (!(lo < hi) || !(tol > 0.0)) throw std::invalid_argument("bisect_threshold: need lo < hi and tol > 0");
  const bool lo_ok = oracle(lo);
  const bool hi_ok = oracle(hi);
  if (lo_ok == hi_ok) throw ThresholdError(lo, lo_ok, hi, hi_ok);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (oracle(mid) == lo_ok) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

using EquationFamily = std::function<NeutralEquation(double)>;

struct SimulationSettings {
  HistorySpec history;
  double t_end = 400.0;
  double dt = 5e-3;
  DecayOptions decay;
};

inline std::function<bool(double)> simulation_oracle(EquationFamily family, SimulationSettings s) {
  return [family = std::move(family), s](double p) {
    const auto eq = family(p);
    const auto tr = integrate(eq, s.history, s.t_end, s.dt);
    return estimate_decay(tr, s.decay).classification == DecayClass::Decaying;
  };
}

}  // namespace ndde
