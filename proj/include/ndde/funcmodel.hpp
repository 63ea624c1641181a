#pragma once

// Closed-form coefficient and delay functions together with the exact (or
// sampled) norms, infima, antiderivatives and window integrals that the
// stability criteria consume.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ndde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kE = std::numbers::e;
inline constexpr double kInvE = 1.0 / std::numbers::e;

/// A one-sided bound on a sup- or inf-type quantity.
///
/// `exact` marks values derived from closed forms; such a value is either the
/// true quantity or, when `conservative` is also set, a rigorous bound on the
/// safe side (upper for sup-type, lower for inf-type). Sampled values carry
/// exact = false together with the sampling horizon and sample count.
struct BoundCertificate {
  double value = 0.0;
  bool exact = true;
  bool conservative = false;
  double horizon = 0.0;
  std::size_t samples = 0;

  static BoundCertificate closed(double v) { return {v, true, false, 0.0, 0}; }
  static BoundCertificate bound(double v) { return {v, true, true, 0.0, 0}; }
  static BoundCertificate sampled(double v, double horizon, std::size_t samples) {
    return {v, false, false, horizon, samples};
  }

  bool operator==(const BoundCertificate&) const = default;
};

/// Builds a certificate for a value computed from other certificates:
/// exactness is the conjunction, conservativeness the disjunction.
template <typename... Certs>
BoundCertificate derived(double value, const Certs&... inputs) {
  BoundCertificate out = BoundCertificate::closed(value);
  ((out.exact = out.exact && inputs.exact), ...);
  ((out.conservative = out.conservative || inputs.conservative), ...);
  ((out.horizon = std::max(out.horizon, inputs.horizon)), ...);
  ((out.samples = std::max(out.samples, inputs.samples)), ...);
  return out;
}

inline BoundCertificate derived_from(double value, std::span<const BoundCertificate> inputs) {
  BoundCertificate out = BoundCertificate::closed(value);
  for (const auto& c : inputs) {
    out.exact = out.exact && c.exact;
    out.conservative = out.conservative || c.conservative;
    out.horizon = std::max(out.horizon, c.horizon);
    out.samples = std::max(out.samples, c.samples);
  }
  return out;
}

inline BoundCertificate loosened(BoundCertificate c) {
  c.conservative = true;
  return c;
}

// ---------------------------------------------------------------------------
// Coefficient expressions
// ---------------------------------------------------------------------------

struct Constant {
  double c = 0.0;
  bool operator==(const Constant&) const = default;
};

/// c + amp * sin(omega * t + phase)
struct Sinusoid {
  double c = 0.0;
  double amp = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  bool operator==(const Sinusoid&) const = default;
};

/// Periodic step function. On [breaks[i], breaks[i+1]) (mod period) the value
/// is values[i]; the last value wraps around to breaks[0] + period.
/// Right-continuous at every breakpoint.
struct PiecewisePeriodic {
  double period = 1.0;
  std::vector<double> breaks;
  std::vector<double> values;
  bool operator==(const PiecewisePeriodic&) const = default;
};

/// c / t, defined for t > 0 only.
struct Reciprocal {
  double c = 0.0;
  bool operator==(const Reciprocal&) const = default;
};

class CoefficientExpr {
 public:
  using Form = std::variant<Constant, Sinusoid, PiecewisePeriodic, Reciprocal>;

  CoefficientExpr() : form_(Constant{0.0}) {}

  static CoefficientExpr constant(double c) {
    require_finite(c, "constant");
    return CoefficientExpr(Constant{c});
  }

  static CoefficientExpr sinusoid(double c, double amp, double omega, double phase = 0.0) {
    require_finite(c, "sinusoid.c");
    require_finite(amp, "sinusoid.amp");
    require_finite(omega, "sinusoid.omega");
    require_finite(phase, "sinusoid.phase");
    if (amp != 0.0 && omega == 0.0) {
      throw std::invalid_argument("sinusoid: omega must be non-zero when amp is non-zero");
    }
    return CoefficientExpr(Sinusoid{c, amp, omega, phase});
  }

  static CoefficientExpr piecewise(double period, std::vector<double> breaks,
                                   std::vector<double> values) {
    if (!(period > 0.0) || !std::isfinite(period)) {
      throw std::invalid_argument("piecewise: period must be positive");
    }
    if (breaks.empty() || breaks.size() != values.size()) {
      throw std::invalid_argument("piecewise: breaks and values must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      require_finite(breaks[i], "piecewise.breaks");
      require_finite(values[i], "piecewise.values");
      if (breaks[i] < 0.0 || breaks[i] >= period) {
        throw std::invalid_argument("piecewise: breakpoints must lie in [0, period)");
      }
      if (i > 0 && !(breaks[i] > breaks[i - 1])) {
        throw std::invalid_argument("piecewise: breakpoints must be strictly increasing");
      }
    }
    return CoefficientExpr(PiecewisePeriodic{period, std::move(breaks), std::move(values)});
  }

  static CoefficientExpr reciprocal(double c) {
    require_finite(c, "reciprocal");
    return CoefficientExpr(Reciprocal{c});
  }

  const Form& form() const { return form_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&form_);
  }

  bool operator==(const CoefficientExpr&) const = default;

 private:
  explicit CoefficientExpr(Form f) : form_(std::move(f)) {}

  static void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + ": value must be finite");
    }
  }

  Form form_;
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct Cell {
  double start;
  double end;
  double value;
};

// Cells of one period [0, period], including the wrap-around piece.
inline std::vector<Cell> cells_of(const PiecewisePeriodic& p) {
  std::vector<Cell> cells;
  const std::size_t n = p.breaks.size();
  if (p.breaks.front() > 0.0) cells.push_back({0.0, p.breaks.front(), p.values.back()});
  for (std::size_t i = 0; i < n; ++i) {
    const double end = (i + 1 < n) ? p.breaks[i + 1] : p.period;
    cells.push_back({p.breaks[i], end, p.values[i]});
  }
  return cells;
}

inline double wrap(double t, double period) {
  double r = std::fmod(t, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

inline double piecewise_value(const PiecewisePeriodic& p, double t) {
  const double r = wrap(t, p.period);
  auto it = std::upper_bound(p.breaks.begin(), p.breaks.end(), r);
  if (it == p.breaks.begin()) return p.values.back();
  return p.values[static_cast<std::size_t>(it - p.breaks.begin()) - 1];
}

// Antiderivative with F(0) = 0.
inline double piecewise_antiderivative(const PiecewisePeriodic& p, double t) {
  const auto cells = cells_of(p);
  double per_period = 0.0;
  for (const auto& c : cells) per_period += c.value * (c.end - c.start);
  const double k = std::floor(t / p.period);
  double r = t - k * p.period;
  if (r < 0.0) r = 0.0;
  double partial = 0.0;
  for (const auto& c : cells) {
    if (r <= c.start) break;
    partial += c.value * (std::min(r, c.end) - c.start);
  }
  return k * per_period + partial;
}

inline double piecewise_mean(const PiecewisePeriodic& p) {
  double s = 0.0;
  for (const auto& c : cells_of(p)) s += c.value * (c.end - c.start);
  return s / p.period;
}

}  // namespace detail

inline double eval(const CoefficientExpr& f, double t) {
  return std::visit(
      detail::overloaded{
          [](const Constant& k) { return k.c; },
          [t](const Sinusoid& s) { return s.c + s.amp * std::sin(s.omega * t + s.phase); },
          [t](const PiecewisePeriodic& p) { return detail::piecewise_value(p, t); },
          [t](const Reciprocal& r) {
            if (!(t > 0.0)) throw std::domain_error("reciprocal coefficient evaluated at t <= 0");
            return r.c / t;
          },
      },
      f.form());
}

/// ess sup_{t >= t0} |f(t)|
inline BoundCertificate sup_norm(const CoefficientExpr& f, double t0) {
  return std::visit(
      detail::overloaded{
          [](const Constant& k) { return BoundCertificate::closed(std::abs(k.c)); },
          [](const Sinusoid& s) { return BoundCertificate::closed(std::abs(s.c) + std::abs(s.amp)); },
          [](const PiecewisePeriodic& p) {
            double m = 0.0;
            for (double v : p.values) m = std::max(m, std::abs(v));
            return BoundCertificate::closed(m);
          },
          [t0](const Reciprocal& r) {
            if (!(t0 > 0.0)) throw std::domain_error("reciprocal coefficient needs t0 > 0");
            return BoundCertificate::closed(std::abs(r.c) / t0);
          },
      },
      f.form());
}

/// ess sup_{t >= t0} f(t) (signed)
inline BoundCertificate sup_value(const CoefficientExpr& f, double t0) {
  return std::visit(
      detail::overloaded{
          [](const Constant& k) { return BoundCertificate::closed(k.c); },
          [](const Sinusoid& s) { return BoundCertificate::closed(s.c + std::abs(s.amp)); },
          [](const PiecewisePeriodic& p) {
            return BoundCertificate::closed(*std::max_element(p.values.begin(), p.values.end()));
          },
          [t0](const Reciprocal& r) {
            if (!(t0 > 0.0)) throw std::domain_error("reciprocal coefficient needs t0 > 0");
            return BoundCertificate::closed(r.c > 0.0 ? r.c / t0 : 0.0);
          },
      },
      f.form());
}

/// ess inf_{t >= t0} f(t)
inline BoundCertificate inf_bound(const CoefficientExpr& f, double t0) {
  return std::visit(
      detail::overloaded{
          [](const Constant& k) { return BoundCertificate::closed(k.c); },
          [](const Sinusoid& s) { return BoundCertificate::closed(s.c - std::abs(s.amp)); },
          [](const PiecewisePeriodic& p) {
            return BoundCertificate::closed(*std::min_element(p.values.begin(), p.values.end()));
          },
          [t0](const Reciprocal& r) {
            if (!(t0 > 0.0)) throw std::domain_error("reciprocal coefficient needs t0 > 0");
            return BoundCertificate::closed(r.c < 0.0 ? r.c / t0 : 0.0);
          },
      },
      f.form());
}

/// ∫_{t_from}^{t_to} f(s) ds from the closed-form antiderivative.
inline double integral(const CoefficientExpr& f, double t_from, double t_to) {
  return std::visit(
      detail::overloaded{
          [&](const Constant& k) { return k.c * (t_to - t_from); },
          [&](const Sinusoid& s) {
            double v = s.c * (t_to - t_from);
            if (s.amp != 0.0) {
              v -= s.amp / s.omega *
                   (std::cos(s.omega * t_to + s.phase) - std::cos(s.omega * t_from + s.phase));
            }
            return v;
          },
          [&](const PiecewisePeriodic& p) {
            return detail::piecewise_antiderivative(p, t_to) -
                   detail::piecewise_antiderivative(p, t_from);
          },
          [&](const Reciprocal& r) {
            if (!(t_from > 0.0) || !(t_to > 0.0)) {
              throw std::domain_error("reciprocal coefficient integrated over t <= 0");
            }
            return r.c * std::log(t_to / t_from);
          },
      },
      f.form());
}

/// Whether ∫_{t0}^∞ f = +∞, decided from the family's long-run mean.
inline bool integral_diverges(const CoefficientExpr& f) {
  return std::visit(detail::overloaded{
                        [](const Constant& k) { return k.c > 0.0; },
                        [](const Sinusoid& s) { return s.c > 0.0; },
                        [](const PiecewisePeriodic& p) { return detail::piecewise_mean(p) > 0.0; },
                        [](const Reciprocal& r) { return r.c > 0.0; },
                    },
                    f.form());
}

/// The value when f is constant on [t0, ∞) (degenerate sinusoids and step
/// functions included).
inline std::optional<double> constant_value(const CoefficientExpr& f) {
  return std::visit(
      detail::overloaded{
          [](const Constant& k) -> std::optional<double> { return k.c; },
          [](const Sinusoid& s) -> std::optional<double> {
            if (s.amp == 0.0) return s.c;
            return std::nullopt;
          },
          [](const PiecewisePeriodic& p) -> std::optional<double> {
            for (double v : p.values) {
              if (v != p.values.front()) return std::nullopt;
            }
            return p.values.front();
          },
          [](const Reciprocal& r) -> std::optional<double> {
            if (r.c == 0.0) return 0.0;
            return std::nullopt;
          },
      },
      f.form());
}

/// True when f is continuous on t > 0.
inline bool is_continuous(const CoefficientExpr& f) {
  if (f.as<PiecewisePeriodic>()) return constant_value(f).has_value();
  return true;
}

inline CoefficientExpr scaled(const CoefficientExpr& f, double k) {
  return std::visit(
      detail::overloaded{
          [k](const Constant& c) { return CoefficientExpr::constant(k * c.c); },
          [k](const Sinusoid& s) {
            return CoefficientExpr::sinusoid(k * s.c, k * s.amp, s.omega, s.phase);
          },
          [k](const PiecewisePeriodic& p) {
            auto v = p.values;
            for (auto& x : v) x *= k;
            return CoefficientExpr::piecewise(p.period, p.breaks, std::move(v));
          },
          [k](const Reciprocal& r) { return CoefficientExpr::reciprocal(k * r.c); },
      },
      f.form());
}

namespace detail {

inline bool same_period(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); }

// Union of breakpoints of two step functions with a common period.
inline std::vector<double> merged_breaks(const PiecewisePeriodic& a, const PiecewisePeriodic& b) {
  std::vector<double> out;
  std::merge(a.breaks.begin(), a.breaks.end(), b.breaks.begin(), b.breaks.end(),
             std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline PiecewisePeriodic refined(const PiecewisePeriodic& p, const std::vector<double>& breaks) {
  PiecewisePeriodic out{p.period, breaks, {}};
  out.values.reserve(breaks.size());
  for (double b : breaks) out.values.push_back(piecewise_value(p, b));
  return out;
}

}  // namespace detail

/// Folds a sum of expressions into a single expression when the families
/// allow it: constants, same-frequency sinusoids (phasor sum), step functions
/// with a common period, and reciprocals. Returns nullopt otherwise.
inline std::optional<CoefficientExpr> fold_sum(std::span<const CoefficientExpr> terms) {
  double constant = 0.0;
  double recip = 0.0;
  bool has_recip = false;
  std::optional<double> omega;
  double sin_part = 0.0;  // coefficient of sin(omega t)
  double cos_part = 0.0;  // coefficient of cos(omega t)
  std::optional<PiecewisePeriodic> steps;

  for (const auto& term : terms) {
    if (auto k = constant_value(term)) {
      constant += *k;
      continue;
    }
    if (const auto* s = term.as<Sinusoid>()) {
      if (omega && *omega != s->omega) return std::nullopt;
      omega = s->omega;
      constant += s->c;
      sin_part += s->amp * std::cos(s->phase);
      cos_part += s->amp * std::sin(s->phase);
      continue;
    }
    if (const auto* r = term.as<Reciprocal>()) {
      recip += r->c;
      has_recip = true;
      continue;
    }
    if (const auto* p = term.as<PiecewisePeriodic>()) {
      if (!steps) {
        steps = *p;
        continue;
      }
      if (!detail::same_period(steps->period, p->period)) return std::nullopt;
      const auto breaks = detail::merged_breaks(*steps, *p);
      auto lhs = detail::refined(*steps, breaks);
      const auto rhs = detail::refined(*p, breaks);
      for (std::size_t i = 0; i < breaks.size(); ++i) lhs.values[i] += rhs.values[i];
      steps = std::move(lhs);
      continue;
    }
  }

  const int families = (omega ? 1 : 0) + (has_recip ? 1 : 0) + (steps ? 1 : 0);
  if (families > 1) return std::nullopt;
  if (has_recip) {
    if (constant != 0.0) return std::nullopt;
    return CoefficientExpr::reciprocal(recip);
  }
  if (omega) {
    const double amp = std::hypot(sin_part, cos_part);
    if (amp == 0.0) return CoefficientExpr::constant(constant);
    return CoefficientExpr::sinusoid(constant, amp, *omega, std::atan2(cos_part, sin_part));
  }
  if (steps) {
    for (auto& v : steps->values) v += constant;
    return CoefficientExpr::piecewise(steps->period, steps->breaks, steps->values);
  }
  return CoefficientExpr::constant(constant);
}

// ---------------------------------------------------------------------------
// Delay expressions
// ---------------------------------------------------------------------------

/// g(t) = t - tau
struct ConstantLag {
  double tau = 0.0;
  bool operator==(const ConstantLag&) const = default;
};

/// g(t) = lambda * t, lambda in (0, 1)
struct Proportional {
  double lambda = 0.5;
  bool operator==(const Proportional&) const = default;
};

/// g(t) = t - (tau + amp * sin(omega * t)), tau >= |amp|
struct SinusoidLag {
  double tau = 0.0;
  double amp = 0.0;
  double omega = 0.0;
  bool operator==(const SinusoidLag&) const = default;
};

class DelayExpr {
 public:
  using Form = std::variant<ConstantLag, Proportional, SinusoidLag>;

  DelayExpr() : form_(ConstantLag{0.0}) {}

  static DelayExpr lag(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
      throw std::invalid_argument("lag: tau must be finite and non-negative");
    }
    return DelayExpr(ConstantLag{tau});
  }

  static DelayExpr proportional(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw std::invalid_argument("proportional: lambda must lie in (0, 1)");
    }
    return DelayExpr(Proportional{lambda});
  }

  static DelayExpr sinlag(double tau, double amp, double omega) {
    if (!std::isfinite(tau) || !std::isfinite(amp) || !std::isfinite(omega)) {
      throw std::invalid_argument("sinlag: parameters must be finite");
    }
    if (tau - std::abs(amp) < 0.0) {
      throw std::invalid_argument("sinlag: tau - |amp| must be non-negative");
    }
    if (amp != 0.0 && omega == 0.0) {
      throw std::invalid_argument("sinlag: omega must be non-zero when amp is non-zero");
    }
    return DelayExpr(SinusoidLag{tau, amp, omega});
  }

  const Form& form() const { return form_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&form_);
  }

  bool operator==(const DelayExpr&) const = default;

 private:
  explicit DelayExpr(Form f) : form_(std::move(f)) {}
  Form form_;
};

/// The delayed argument g(t).
inline double apply(const DelayExpr& h, double t) {
  return std::visit(detail::overloaded{
                        [t](const ConstantLag& d) { return t - d.tau; },
                        [t](const Proportional& d) { return d.lambda * t; },
                        [t](const SinusoidLag& d) { return t - (d.tau + d.amp * std::sin(d.omega * t)); },
                    },
                    h.form());
}

/// t - g(t)
inline double lag(const DelayExpr& h, double t) { return t - apply(h, t); }

inline bool is_bounded(const DelayExpr& h) { return !h.as<Proportional>(); }

/// sup_{t >= t0} (t - g(t)); +inf for proportional delays.
inline double sup_lag(const DelayExpr& h) {
  return std::visit(detail::overloaded{
                        [](const ConstantLag& d) { return d.tau; },
                        [](const Proportional&) { return kInf; },
                        [](const SinusoidLag& d) { return d.tau + std::abs(d.amp); },
                    },
                    h.form());
}

/// inf_{t >= t0} (t - g(t))
inline double inf_lag(const DelayExpr& h, double t0) {
  return std::visit(detail::overloaded{
                        [](const ConstantLag& d) { return d.tau; },
                        [t0](const Proportional& d) { return std::max(0.0, (1.0 - d.lambda) * t0); },
                        [](const SinusoidLag& d) { return d.tau - std::abs(d.amp); },
                    },
                    h.form());
}

inline std::optional<double> constant_lag(const DelayExpr& h) {
  if (const auto* c = h.as<ConstantLag>()) return c->tau;
  if (const auto* s = h.as<SinusoidLag>(); s && s->amp == 0.0) return s->tau;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Window integrals and ratio norms
// ---------------------------------------------------------------------------

struct SamplingOptions {
  double horizon = 0.0;  // 0: 50 * (max lag, or 50 when unbounded)
  std::size_t samples = 100000;
};

struct WindowBounds {
  BoundCertificate sup;
  BoundCertificate inf;
};

/// sup and inf over t in [t0, t0 + horizon] of ∫_{h(t)}^t f, on a uniform grid.
inline WindowBounds sampled_window_integral_bounds(const CoefficientExpr& f, const DelayExpr& h,
                                                   double t0, SamplingOptions opts = {}) {
  double horizon = opts.horizon;
  if (horizon <= 0.0) {
    const double L = sup_lag(h);
    horizon = 50.0 * (std::isfinite(L) && L > 0.0 ? L : 50.0);
  }
  const std::size_t n = std::max<std::size_t>(opts.samples, 2);
  double hi = -kInf;
  double lo = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + horizon * static_cast<double>(i) / static_cast<double>(n - 1);
    const double w = integral(f, apply(h, t), t);
    hi = std::max(hi, w);
    lo = std::min(lo, w);
  }
  return {BoundCertificate::sampled(hi, horizon, n), BoundCertificate::sampled(lo, horizon, n)};
}

namespace detail {

inline WindowBounds exact_window(double lo, double hi) {
  return {BoundCertificate::closed(hi), BoundCertificate::closed(lo)};
}

// W(t) = ∫_{t-tau}^t p is piecewise linear and periodic; its extrema sit on
// t ≡ b or t ≡ b + tau (mod period) for breakpoints b.
inline WindowBounds piecewise_constant_lag(const PiecewisePeriodic& p, double tau, double t0) {
  auto W = [&](double t) {
    return piecewise_antiderivative(p, t) - piecewise_antiderivative(p, t - tau);
  };
  double hi = W(t0);
  double lo = hi;
  auto visit_candidate = [&](double phase) {
    double t = t0 + wrap(phase - t0, p.period);
    const double w = W(t);
    hi = std::max(hi, w);
    lo = std::min(lo, w);
  };
  for (double b : p.breaks) {
    visit_candidate(b);
    visit_candidate(b + tau);
  }
  return exact_window(lo, hi);
}

}  // namespace detail

/// Bounds of ∫_{h(t)}^t f(s) ds over t >= t0. Exact for the closed-form
/// pairs; sampled (exact = false) otherwise.
inline WindowBounds window_integral_bounds(const CoefficientExpr& f, const DelayExpr& h, double t0,
                                           SamplingOptions opts = {}) {
  const auto k = constant_value(f);

  if (const auto* d = h.as<ConstantLag>()) {
    if (k) return detail::exact_window(*k * d->tau, *k * d->tau);
    if (const auto* s = f.as<Sinusoid>()) {
      const double swing = std::abs(2.0 * s->amp * std::sin(0.5 * s->omega * d->tau) / s->omega);
      return detail::exact_window(s->c * d->tau - swing, s->c * d->tau + swing);
    }
    if (const auto* p = f.as<PiecewisePeriodic>()) return detail::piecewise_constant_lag(*p, d->tau, t0);
    if (const auto* r = f.as<Reciprocal>()) {
      if (!(t0 - d->tau > 0.0)) {
        throw std::domain_error("reciprocal coefficient window reaches t <= 0");
      }
      // c ln(t / (t - tau)) decreases monotonically towards 0.
      const double at_t0 = r->c * std::log(t0 / (t0 - d->tau));
      return detail::exact_window(std::min(0.0, at_t0), std::max(0.0, at_t0));
    }
  }

  if (const auto* d = h.as<SinusoidLag>()) {
    if (k) {
      const double a = *k * (d->tau - std::abs(d->amp));
      const double b = *k * (d->tau + std::abs(d->amp));
      return detail::exact_window(std::min(a, b), std::max(a, b));
    }
  }

  if (const auto* d = h.as<Proportional>()) {
    if (const auto* r = f.as<Reciprocal>()) {
      const double v = r->c * std::log(1.0 / d->lambda);
      return detail::exact_window(v, v);
    }
    if (k) {
      // k (1 - lambda) t: unbounded unless k = 0
      const double at_t0 = *k * (1.0 - d->lambda) * t0;
      if (*k > 0.0) return detail::exact_window(at_t0, kInf);
      if (*k < 0.0) return detail::exact_window(-kInf, at_t0);
      return detail::exact_window(0.0, 0.0);
    }
    auto sampled = sampled_window_integral_bounds(f, h, t0, opts);
    if (integral_diverges(f)) sampled.sup = BoundCertificate::closed(kInf);
    return sampled;
  }

  return sampled_window_integral_bounds(f, h, t0, opts);
}

/// sup_{t >= t0} ∫_{h(t)}^t f(s) ds for non-negative f.
inline BoundCertificate sup_window_integral(const CoefficientExpr& f, const DelayExpr& h, double t0,
                                            SamplingOptions opts = {}) {
  if (inf_bound(f, t0).value < 0.0) {
    throw std::invalid_argument("sup_window_integral: coefficient takes negative values");
  }
  return window_integral_bounds(f, h, t0, opts).sup;
}

namespace detail {

// inf_{t >= t0} |f(t)| when f keeps one sign; nullopt when f touches zero.
inline std::optional<BoundCertificate> inf_abs_away_from_zero(const CoefficientExpr& f, double t0) {
  const auto lo = inf_bound(f, t0);
  if (lo.value > 0.0) return lo;
  const auto hi = sup_value(f, t0);
  if (hi.value < 0.0) return BoundCertificate::closed(-hi.value);
  return std::nullopt;
}

}  // namespace detail

/// ess sup_{t >= t0} |num(t) / den(t)|.
///
/// Exact when the ratio has a closed form (constant denominator or numerator,
/// proportional expressions, step functions with a common period); otherwise
/// the conservative bound sup|num| / inf|den|. Throws when den is not bounded
/// away from zero and no closed ratio exists.
inline BoundCertificate ratio_sup_norm(const CoefficientExpr& num, const CoefficientExpr& den,
                                       double t0) {
  const auto* rn = num.as<Reciprocal>();
  const auto* rd = den.as<Reciprocal>();
  if (rn && rd && rd->c != 0.0) return BoundCertificate::closed(std::abs(rn->c / rd->c));
  if (auto kn = constant_value(num); kn && *kn == 0.0) return BoundCertificate::closed(0.0);

  const auto den_floor = detail::inf_abs_away_from_zero(den, t0);
  if (!den_floor) {
    throw std::domain_error("ratio_sup_norm: denominator is not bounded away from zero");
  }

  const auto kn = constant_value(num);
  const auto kd = constant_value(den);
  if (kd) return BoundCertificate::closed(sup_norm(num, t0).value / std::abs(*kd));
  if (kn) return BoundCertificate::closed(std::abs(*kn) / den_floor->value);

  const auto* sn = num.as<Sinusoid>();
  const auto* sd = den.as<Sinusoid>();
  if (sn && sd && sn->omega == sd->omega && sn->phase == sd->phase && sd->amp != 0.0) {
    const double ratio = sn->amp / sd->amp;
    if (std::abs(sn->c - ratio * sd->c) <= 1e-15 * std::max(1.0, std::abs(sn->c))) {
      return BoundCertificate::closed(std::abs(ratio));
    }
  }

  const auto* pn = num.as<PiecewisePeriodic>();
  const auto* pd = den.as<PiecewisePeriodic>();
  if (pn && pd && detail::same_period(pn->period, pd->period)) {
    const auto breaks = detail::merged_breaks(*pn, *pd);
    const auto a = detail::refined(*pn, breaks);
    const auto b = detail::refined(*pd, breaks);
    double m = 0.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) m = std::max(m, std::abs(a.values[i] / b.values[i]));
    return BoundCertificate::closed(m);
  }

  return BoundCertificate::bound(sup_norm(num, t0).value / den_floor->value);
}

}  // namespace ndde
