#pragma once

// Scalar linear neutral equation
//
//   x'(t) - sum a_k(t) x'(g_k(t)) + sum b_k(t) x(h_k(t)) + ∫_{h(t)}^t K(t,s) x(s) ds = f(t)
//
// together with history data and well-posedness diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ndde/funcmodel.hpp"

namespace ndde {

struct NeutralTerm {
  CoefficientExpr a;
  DelayExpr g;
  bool operator==(const NeutralTerm&) const = default;
};

struct DelayTerm {
  CoefficientExpr b;
  DelayExpr h;
  bool operator==(const DelayTerm&) const = default;
};

/// K(t,s) = c * exp(-d (t - s))
struct ExponentialKernel {
  double c = 0.0;
  double d = 0.0;
  bool operator==(const ExponentialKernel&) const = default;
};

/// K(t,s) = c
struct UniformKernel {
  double c = 0.0;
  bool operator==(const UniformKernel&) const = default;
};

struct DistributedKernel {
  std::variant<ExponentialKernel, UniformKernel> form;
  DelayExpr h;  // lower edge of the integration window
  bool operator==(const DistributedKernel&) const = default;

  static DistributedKernel exponential(double c, double d, DelayExpr h) {
    if (!(c >= 0.0) || !(d >= 0.0) || !std::isfinite(c) || !std::isfinite(d)) {
      throw std::invalid_argument("exponential kernel: c and d must be finite and non-negative");
    }
    if (!is_bounded(h)) throw std::invalid_argument("kernel window must have a bounded lag");
    return {ExponentialKernel{c, d}, std::move(h)};
  }

  static DistributedKernel uniform(double c, DelayExpr h) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("uniform kernel: c must be finite and non-negative");
    }
    if (!is_bounded(h)) throw std::invalid_argument("kernel window must have a bounded lag");
    return {UniformKernel{c}, std::move(h)};
  }
};

/// K(t, s) for s in [h(t), t].
inline double kernel_value(const DistributedKernel& k, double t, double s) {
  if (const auto* e = std::get_if<ExponentialKernel>(&k.form)) return e->c * std::exp(-e->d * (t - s));
  return std::get<UniformKernel>(k.form).c;
}

struct NeutralEquation {
  double t0 = 0.0;
  std::vector<NeutralTerm> neutral;
  std::vector<DelayTerm> delay;
  std::optional<DistributedKernel> kernel;
  bool operator==(const NeutralEquation&) const = default;
};

struct HistorySpec {
  CoefficientExpr phi = CoefficientExpr::constant(1.0);
  CoefficientExpr psi = CoefficientExpr::constant(0.0);
  bool operator==(const HistorySpec&) const = default;

  static HistorySpec zero() {
    return {CoefficientExpr::constant(0.0), CoefficientExpr::constant(0.0)};
  }
};

/// Whether psi is the derivative of phi. Informational only.
inline bool history_consistent(const HistorySpec& h) {
  if (auto k = constant_value(h.phi)) {
    auto d = constant_value(h.psi);
    return d && *d == 0.0;
  }
  if (const auto* s = h.phi.as<Sinusoid>()) {
    const auto* ds = h.psi.as<Sinusoid>();
    if (!ds) return false;
    // d/dt (c + A sin(wt + p)) = A w sin(wt + p + pi/2)
    return ds->c == 0.0 && ds->omega == s->omega &&
           std::abs(ds->amp - s->amp * s->omega) <= 1e-14 * std::abs(ds->amp) &&
           std::abs(ds->phase - (s->phase + std::numbers::pi / 2)) <= 1e-14;
  }
  return false;
}

struct ProblemSpec {
  NeutralEquation eq;
  HistorySpec history;
  std::optional<CoefficientExpr> forcing;
  bool operator==(const ProblemSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Induced coefficient of a distributed kernel
// ---------------------------------------------------------------------------

struct InducedCoefficient {
  std::function<double(double)> fn;
  BoundCertificate sup;
  BoundCertificate inf;
  std::optional<CoefficientExpr> expr;  // when b(t) is itself a closed-form coefficient
};

namespace detail {

// ∫_0^L c e^{-d u} du
inline double exp_window(double c, double d, double L) {
  if (d == 0.0) return c * L;
  return -c * std::expm1(-d * L) / d;
}

}  // namespace detail

/// b(t) = ∫_{h(t)}^t K(t,s) ds
inline InducedCoefficient induced_b(const NeutralEquation& eq) {
  if (!eq.kernel) throw std::invalid_argument("induced_b: equation has no kernel");
  const DistributedKernel k = *eq.kernel;
  InducedCoefficient out;
  out.fn = [k](double t) {
    const double L = lag(k.h, t);
    if (const auto* e = std::get_if<ExponentialKernel>(&k.form)) return detail::exp_window(e->c, e->d, L);
    return std::get<UniformKernel>(k.form).c * L;
  };

  const double lo = inf_lag(k.h, eq.t0);
  const double hi = sup_lag(k.h);
  if (const auto* e = std::get_if<ExponentialKernel>(&k.form)) {
    out.sup = BoundCertificate::closed(detail::exp_window(e->c, e->d, hi));
    out.inf = BoundCertificate::closed(detail::exp_window(e->c, e->d, lo));
    if (auto L = constant_lag(k.h)) out.expr = CoefficientExpr::constant(detail::exp_window(e->c, e->d, *L));
    else if (e->d == 0.0) {
      if (const auto* s = k.h.as<SinusoidLag>()) {
        out.expr = CoefficientExpr::sinusoid(e->c * s->tau, e->c * s->amp, s->omega, 0.0);
      }
    }
  } else {
    const double c = std::get<UniformKernel>(k.form).c;
    out.sup = BoundCertificate::closed(c * hi);
    out.inf = BoundCertificate::closed(c * lo);
    if (auto L = constant_lag(k.h)) out.expr = CoefficientExpr::constant(c * *L);
    else if (const auto* s = k.h.as<SinusoidLag>()) {
      out.expr = CoefficientExpr::sinusoid(c * s->tau, c * s->amp, s->omega, 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { Info, Warning, Error };

struct Finding {
  Severity severity = Severity::Info;
  std::string code;
  std::string term;
  std::string message;
  double value = 0.0;
};

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "?";
}

inline double neutral_norm_sum(const NeutralEquation& eq) {
  double s = 0.0;
  for (const auto& n : eq.neutral) s += sup_norm(n.a, eq.t0).value;
  return s;
}

namespace detail {

inline bool needs_positive_time(const CoefficientExpr& f) { return f.as<Reciprocal>() != nullptr; }

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

/// Well-posedness findings. Never throws.
inline std::vector<Finding> validate(const NeutralEquation& eq) {
  std::vector<Finding> out;
  auto add = [&](Severity s, std::string code, std::string term, std::string msg, double v) {
    out.push_back({s, std::move(code), std::move(term), std::move(msg), v});
  };

  if (!std::isfinite(eq.t0)) {
    add(Severity::Error, "t0", "t0", "t0 must be finite", eq.t0);
    return out;
  }

  auto check_time = [&](const CoefficientExpr& f, const std::string& term) {
    if (detail::needs_positive_time(f) && !(eq.t0 > 0.0)) {
      add(Severity::Error, "reciprocal_domain", term, "reciprocal coefficient requires t0 > 0", eq.t0);
      return false;
    }
    return true;
  };

  double a_sum = 0.0;
  bool norms_ok = true;
  for (std::size_t k = 0; k < eq.neutral.size(); ++k) {
    const auto& n = eq.neutral[k];
    const std::string term = "neutral[" + std::to_string(k) + "]";
    if (!check_time(n.a, term)) {
      norms_ok = false;
      continue;
    }
    a_sum += sup_norm(n.a, eq.t0).value;
    const double L = sup_lag(n.g);
    if (std::isfinite(L)) {
      add(Severity::Info, "bounded_delay", term, "neutral lag bounded by " + detail::fmt(L), L);
    } else {
      add(Severity::Warning, "unbounded_delay", term, "proportional neutral delay (unbounded lag)", L);
    }
  }
  if (norms_ok) {
    if (a_sum < 1.0) {
      add(Severity::Info, "neutral_norm", "neutral", "sum of neutral norms " + detail::fmt(a_sum) + " < 1", a_sum);
    } else {
      add(Severity::Error, "neutral_norm", "neutral",
          "sum of neutral norms " + detail::fmt(a_sum) + " >= 1 (ill-posed)", a_sum);
    }
  }

  for (std::size_t k = 0; k < eq.delay.size(); ++k) {
    const auto& d = eq.delay[k];
    const std::string term = "delay[" + std::to_string(k) + "]";
    if (!check_time(d.b, term)) continue;
    const double L = sup_lag(d.h);
    if (std::isfinite(L)) {
      add(Severity::Info, "bounded_delay", term, "lag bounded by " + detail::fmt(L), L);
    } else {
      add(Severity::Warning, "unbounded_delay", term, "proportional delay (unbounded lag)", L);
    }
    const double lo = inf_bound(d.b, eq.t0).value;
    if (lo >= 0.0) {
      add(Severity::Info, "coefficient_sign", term, "coefficient non-negative", lo);
    } else {
      add(Severity::Warning, "coefficient_sign", term, "coefficient takes negative values", lo);
    }
  }

  if (eq.kernel) {
    const double L = sup_lag(eq.kernel->h);
    add(Severity::Info, "kernel_window", "kernel", "kernel window lag bounded by " + detail::fmt(L), L);
  }

  return out;
}

inline bool well_posed(const NeutralEquation& eq) {
  for (const auto& f : validate(eq)) {
    if (f.severity == Severity::Error) return false;
  }
  return true;
}

inline bool has_unbounded_delay(const NeutralEquation& eq) {
  for (const auto& n : eq.neutral) {
    if (!is_bounded(n.g)) return true;
  }
  for (const auto& d : eq.delay) {
    if (!is_bounded(d.h)) return true;
  }
  return false;
}

/// Largest lag among all terms (+inf when some delay is proportional).
inline double max_lag(const NeutralEquation& eq) {
  double m = 0.0;
  for (const auto& n : eq.neutral) m = std::max(m, sup_lag(n.g));
  for (const auto& d : eq.delay) m = std::max(m, sup_lag(d.h));
  if (eq.kernel) m = std::max(m, sup_lag(eq.kernel->h));
  return m;
}

/// Smallest strictly positive constant lag, if any.
inline std::optional<double> min_positive_lag(const NeutralEquation& eq) {
  std::optional<double> best;
  auto visit = [&](const DelayExpr& h) {
    auto L = constant_lag(h);
    if (!L) {
      if (const auto* s = h.as<SinusoidLag>()) L = s->tau - std::abs(s->amp);
    }
    if (L && *L > 0.0 && (!best || *L < *best)) best = *L;
  };
  for (const auto& n : eq.neutral) visit(n.g);
  for (const auto& d : eq.delay) visit(d.h);
  if (eq.kernel) visit(eq.kernel->h);
  return best;
}

// ---------------------------------------------------------------------------
// Canonical text and fingerprint
// ---------------------------------------------------------------------------

namespace detail {

inline void describe(std::ostream& os, const CoefficientExpr& f) {
  std::visit(overloaded{
                 [&](const Constant& k) { os << "const(" << k.c << ")"; },
                 [&](const Sinusoid& s) {
                   os << "sin(" << s.c << "," << s.amp << "," << s.omega << "," << s.phase << ")";
                 },
                 [&](const PiecewisePeriodic& p) {
                   os << "pw(" << p.period;
                   for (std::size_t i = 0; i < p.breaks.size(); ++i) os << "," << p.breaks[i] << ":" << p.values[i];
                   os << ")";
                 },
                 [&](const Reciprocal& r) { os << "recip(" << r.c << ")"; },
             },
             f.form());
}

inline void describe(std::ostream& os, const DelayExpr& h) {
  std::visit(overloaded{
                 [&](const ConstantLag& d) { os << "lag(" << d.tau << ")"; },
                 [&](const Proportional& d) { os << "prop(" << d.lambda << ")"; },
                 [&](const SinusoidLag& d) { os << "sinlag(" << d.tau << "," << d.amp << "," << d.omega << ")"; },
             },
             h.form());
}

}  // namespace detail

inline std::string describe(const NeutralEquation& eq) {
  std::ostringstream os;
  os.precision(17);
  os << "t0=" << eq.t0;
  for (const auto& n : eq.neutral) {
    os << ";N:";
    detail::describe(os, n.a);
    os << "@";
    detail::describe(os, n.g);
  }
  for (const auto& d : eq.delay) {
    os << ";D:";
    detail::describe(os, d.b);
    os << "@";
    detail::describe(os, d.h);
  }
  if (eq.kernel) {
    os << ";K:";
    if (const auto* e = std::get_if<ExponentialKernel>(&eq.kernel->form)) {
      os << "exp(" << e->c << "," << e->d << ")";
    } else {
      os << "unif(" << std::get<UniformKernel>(eq.kernel->form).c << ")";
    }
    os << "@";
    detail::describe(os, eq.kernel->h);
  }
  return os.str();
}

/// FNV-1a hash of the canonical description.
inline std::uint64_t fingerprint(const NeutralEquation& eq) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : describe(eq)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ndde
