#pragma once

// Explicit stability tests for the scalar neutral equation. Every check
// returns a CriterionVerdict with the numeric witnesses of each inequality it
// evaluated, so a verdict can be audited without re-running the arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ndde/equation.hpp"
#include "ndde/funcmodel.hpp"
#include "ndde/sigma.hpp"

namespace ndde {

enum class Verdict { Satisfied, NumericUnknown, Violated, NotApplicable };

// Declared from strongest to weakest.
enum class Claim { ExponentialStability, AsymptoticStability, SolutionsTendToZero, L2Stability };

enum class Relation { Less, LessEqual };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "Satisfied";
    case Verdict::NumericUnknown: return "NumericUnknown";
    case Verdict::Violated: return "Violated";
    case Verdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

inline const char* to_string(Claim c) {
  switch (c) {
    case Claim::ExponentialStability: return "ExponentialStability";
    case Claim::AsymptoticStability: return "AsymptoticStability";
    case Claim::SolutionsTendToZero: return "SolutionsTendToZero";
    case Claim::L2Stability: return "L2Stability";
  }
  return "?";
}

inline const char* to_string(Relation r) { return r == Relation::Less ? "<" : "<="; }

/// One inequality `lhs relation rhs`.
struct Witness {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  Relation relation = Relation::Less;
  bool exact = true;
};

struct CriterionVerdict {
  std::string criterion;
  Verdict verdict = Verdict::NotApplicable;
  Claim claim = Claim::ExponentialStability;
  std::vector<Witness> witnesses;
  std::optional<std::vector<std::size_t>> subset;  // 1-based term indices
  std::optional<double> omega;
  std::string note;
};

inline constexpr double kExactSlack = 1e-12;
inline constexpr double kInexactBand = 1e-6;

enum class Outcome { Pass, Fail, Unknown };

inline Outcome outcome(const Witness& w) {
  if (std::isnan(w.lhs) || std::isnan(w.rhs)) return Outcome::Unknown;
  if (!std::isfinite(w.lhs) || !std::isfinite(w.rhs)) {
    const bool ok = w.relation == Relation::Less ? w.lhs < w.rhs : w.lhs <= w.rhs;
    return ok ? Outcome::Pass : Outcome::Fail;
  }
  const double scale = std::max({1.0, std::abs(w.lhs), std::abs(w.rhs)});
  const double gap = w.rhs - w.lhs;
  if (!w.exact) {
    if (std::abs(gap) <= kInexactBand * scale) return Outcome::Unknown;
    return gap > 0.0 ? Outcome::Pass : Outcome::Fail;
  }
  if (w.relation == Relation::Less) return gap > kExactSlack * scale ? Outcome::Pass : Outcome::Fail;
  return gap >= -kExactSlack * scale ? Outcome::Pass : Outcome::Fail;
}

/// Relative slack (rhs - lhs) / max(|lhs|, |rhs|); positive when the
/// inequality holds.
inline double relative_margin(const Witness& w) {
  const double scale = std::max(std::abs(w.lhs), std::abs(w.rhs));
  if (scale == 0.0) return 0.0;
  if (!std::isfinite(scale)) return w.lhs < w.rhs ? 1.0 : -1.0;
  return (w.rhs - w.lhs) / scale;
}

namespace detail {

struct Branch {
  std::string name;  // empty for single-branch criteria
  std::vector<Witness> witnesses;
};

inline Outcome branch_outcome(const Branch& b) {
  bool unknown = false;
  for (const auto& w : b.witnesses) {
    const auto o = outcome(w);
    if (o == Outcome::Fail) return Outcome::Fail;
    if (o == Outcome::Unknown) unknown = true;
  }
  return unknown ? Outcome::Unknown : Outcome::Pass;
}

inline CriterionVerdict not_applicable(std::string id, Claim claim, std::string why) {
  CriterionVerdict v;
  v.criterion = std::move(id);
  v.claim = claim;
  v.verdict = Verdict::NotApplicable;
  v.note = std::move(why);
  return v;
}

/// Satisfied when some branch passes; NumericUnknown when none fails
/// outright but some are undecided; Violated otherwise.
inline CriterionVerdict decide(std::string id, Claim claim, const std::vector<Branch>& branches,
                               std::string note = {}) {
  CriterionVerdict v;
  v.criterion = std::move(id);
  v.claim = claim;
  bool any_pass = false;
  bool any_unknown = false;
  std::string fired;
  for (const auto& b : branches) {
    const auto o = branch_outcome(b);
    if (o == Outcome::Pass && !any_pass) {
      any_pass = true;
      fired = b.name;
    }
    if (o == Outcome::Unknown) any_unknown = true;
    for (auto w : b.witnesses) {
      if (!b.name.empty()) w.label = "(" + b.name + ") " + w.label;
      v.witnesses.push_back(std::move(w));
    }
  }
  v.verdict = any_pass ? Verdict::Satisfied : any_unknown ? Verdict::NumericUnknown : Verdict::Violated;
  if (any_pass && !fired.empty()) note = "branch " + fired + " holds" + (note.empty() ? "" : "; " + note);
  v.note = std::move(note);
  return v;
}

inline Witness less(std::string label, double lhs, double rhs, bool exact = true) {
  return {std::move(label), lhs, rhs, Relation::Less, exact};
}

inline Witness less_equal(std::string label, double lhs, double rhs, bool exact = true) {
  return {std::move(label), lhs, rhs, Relation::LessEqual, exact};
}

// --- quantities: a coefficient (closed form when available) with its bounds

struct Quantity {
  std::optional<CoefficientExpr> expr;
  BoundCertificate sup_abs;
  BoundCertificate sup;
  BoundCertificate inf;
};

inline Quantity quantity_of(const CoefficientExpr& f, double t0) {
  return {f, sup_norm(f, t0), sup_value(f, t0), inf_bound(f, t0)};
}

inline Quantity quantity_of(const InducedCoefficient& b) {
  const double abs_sup = std::max(std::abs(b.sup.value), std::abs(b.inf.value));
  return {b.expr, derived(abs_sup, b.sup, b.inf), b.sup, b.inf};
}

inline Quantity sum_of(const std::vector<Quantity>& terms, double t0) {
  std::vector<CoefficientExpr> exprs;
  bool all_closed = true;
  for (const auto& q : terms) {
    if (q.expr) exprs.push_back(*q.expr);
    else all_closed = false;
  }
  if (all_closed) {
    if (auto folded = fold_sum(exprs)) return quantity_of(*folded, t0);
  }
  double s_abs = 0.0, s_sup = 0.0, s_inf = 0.0;
  std::vector<BoundCertificate> certs;
  for (const auto& q : terms) {
    s_abs += q.sup_abs.value;
    s_sup += q.sup.value;
    s_inf += q.inf.value;
    certs.push_back(q.sup_abs);
    certs.push_back(q.inf);
  }
  // A single term passes through unchanged.
  if (terms.size() == 1) return terms.front();
  auto loose = [&](double v) { return loosened(derived_from(v, certs)); };
  return {std::nullopt, loose(s_abs), loose(s_sup), loose(s_inf)};
}

/// sup |num / den|; throws std::domain_error when den may vanish.
inline BoundCertificate ratio(const Quantity& num, const Quantity& den, double t0) {
  if (num.expr && den.expr) {
    try {
      return ratio_sup_norm(*num.expr, *den.expr, t0);
    } catch (const std::domain_error&) {
    }
  }
  if (num.sup_abs.value == 0.0) return BoundCertificate::closed(0.0);
  if (den.inf.value > 0.0) return loosened(derived(num.sup_abs.value / den.inf.value, num.sup_abs, den.inf));
  if (den.sup.value < 0.0) return loosened(derived(num.sup_abs.value / -den.sup.value, num.sup_abs, den.sup));
  throw std::domain_error("ratio: denominator is not bounded away from zero");
}

inline BoundCertificate ratio_or_inf(const Quantity& num, const Quantity& den, double t0) {
  try {
    return ratio(num, den, t0);
  } catch (const std::domain_error&) {
    return BoundCertificate::closed(kInf);
  }
}

inline bool all_bounded(const NeutralEquation& eq) {
  for (const auto& n : eq.neutral) {
    if (!is_bounded(n.g)) return false;
  }
  for (const auto& d : eq.delay) {
    if (!is_bounded(d.h)) return false;
  }
  return true;
}

// --- the Theorem 1 / Theorem 2 engine on a single-delay reduction

struct ScalarReduction {
  BoundCertificate norm_a;         // ‖a‖ (or Σ‖a_k‖)
  BoundCertificate norm_a_over_b;  // ‖a/b‖ (or Σ‖a_k/b‖)
  BoundCertificate sup_b;
  BoundCertificate inf_b;
  BoundCertificate window;  // sup ∫_{h(t)}^t b
  double tau = 0.0;         // sup lag of h
};

inline Branch theorem1_branch(const ScalarReduction& r, std::string name = {}) {
  const auto cond = derived(r.norm_a.value + r.sup_b.value * r.norm_a_over_b.value, r.norm_a,
                            r.sup_b, r.norm_a_over_b);
  return {std::move(name),
          {less("0 < inf b", 0.0, r.inf_b.value, r.inf_b.exact),
           less_equal("sup window integral of b <= 1/e", r.window.value, kInvE, r.window.exact),
           less("||a|| + ||b|| ||a/b|| < 1", cond.value, 1.0, cond.exact)}};
}

inline Branch theorem2a_branch(const ScalarReduction& r, std::string name = "a") {
  // b0 = min(b, 1/(tau e)):  ‖a/b0‖ = max(‖a/b‖, ‖a‖ tau e),  ‖(b-b0)/b0‖ = (‖b‖ tau e - 1)^+
  const double a_b0 = std::max(r.norm_a_over_b.value, r.norm_a.value * r.tau * kE);
  const double excess = std::max(0.0, r.sup_b.value * r.tau * kE - 1.0);
  const auto lhs = derived(a_b0 * r.sup_b.value / (1.0 - r.norm_a.value) + excess, r.norm_a,
                           r.norm_a_over_b, r.sup_b);
  return {std::move(name),
          {less("0 < inf b", 0.0, r.inf_b.value, r.inf_b.exact),
           less("||a/b0|| ||b||/(1-||a||) + ||(b-b0)/b0|| < 1", lhs.value, 1.0, lhs.exact)}};
}

inline Branch theorem2b_branch(const ScalarReduction& r, std::string name = "b") {
  const double pos = std::max(0.0, r.tau - 1.0 / (r.sup_b.value * kE));
  const auto lhs = derived(r.sup_b.value * (r.norm_a_over_b.value + pos), r.sup_b, r.norm_a_over_b);
  const auto rhs = derived(1.0 - r.norm_a.value, r.norm_a);
  return {std::move(name),
          {less("0 < inf b", 0.0, r.inf_b.value, r.inf_b.exact),
           less("||b|| (||a/b|| + ||(t-h(t)-1/(||b|| e))^+||) < 1 - ||a||", lhs.value, rhs.value,
                lhs.exact && rhs.exact)}};
}

/// Reduction for x' - Σ a_k x'(g_k) + b x(h) = 0. Returns a reason string on
/// structural failure.
inline std::variant<ScalarReduction, std::string> single_delay_reduction(const NeutralEquation& eq) {
  if (eq.kernel) return std::string("distributed kernel present");
  if (eq.delay.size() != 1) return std::string("requires exactly one delay term");
  if (!all_bounded(eq)) return std::string("requires bounded delays");
  const auto& d = eq.delay.front();
  const double t0 = eq.t0;
  const auto b = quantity_of(d.b, t0);
  if (b.inf.value < 0.0) return std::string("requires b >= 0");

  ScalarReduction r;
  std::vector<BoundCertificate> norms, ratios;
  double na = 0.0, nab = 0.0;
  for (const auto& n : eq.neutral) {
    const auto q = quantity_of(n.a, t0);
    norms.push_back(q.sup_abs);
    na += q.sup_abs.value;
    const auto rr = ratio_or_inf(q, b, t0);
    ratios.push_back(rr);
    nab += rr.value;
  }
  r.norm_a = derived_from(na, norms);
  r.norm_a_over_b = derived_from(nab, ratios);
  r.sup_b = b.sup_abs;
  r.inf_b = b.inf;
  try {
    r.window = window_integral_bounds(d.b, d.h, t0).sup;
  } catch (const std::domain_error& e) {
    return std::string("window integral undefined: ") + e.what();
  }
  r.tau = sup_lag(d.h);
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Theorems 1-3 and Corollaries 1, 2a, 2b
// ---------------------------------------------------------------------------

inline CriterionVerdict check_theorem1(const NeutralEquation& eq) {
  const char* id = "thm1";
  if (eq.neutral.size() > 1) return detail::not_applicable(id, Claim::ExponentialStability, "requires at most one neutral term");
  auto r = detail::single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&r)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  return detail::decide(id, Claim::ExponentialStability, {detail::theorem1_branch(std::get<detail::ScalarReduction>(r))});
}

inline CriterionVerdict check_theorem2(const NeutralEquation& eq) {
  const char* id = "thm2";
  if (eq.neutral.size() > 1) return detail::not_applicable(id, Claim::ExponentialStability, "requires at most one neutral term");
  auto r = detail::single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&r)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& red = std::get<detail::ScalarReduction>(r);
  return detail::decide(id, Claim::ExponentialStability, {detail::theorem2a_branch(red), detail::theorem2b_branch(red)});
}

inline CriterionVerdict check_theorem3(const NeutralEquation& eq) {
  const char* id = "thm3";
  auto r = detail::single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&r)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& red = std::get<detail::ScalarReduction>(r);
  return detail::decide(id, Claim::ExponentialStability,
                        {detail::theorem1_branch(red, "1"), detail::theorem2a_branch(red, "2a"),
                         detail::theorem2b_branch(red, "2b")});
}

namespace detail {

struct ConstantBShape {
  ScalarReduction r;
  double b = 0.0;
  double inf_lag = 0.0;
};

inline std::variant<ConstantBShape, std::string> constant_b_shape(const NeutralEquation& eq) {
  if (eq.neutral.size() > 1) return std::string("requires at most one neutral term");
  auto r = single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&r)) return *why;
  const auto b = constant_value(eq.delay.front().b);
  if (!b || !(*b > 0.0)) return std::string("requires constant b > 0");
  return ConstantBShape{std::get<ScalarReduction>(r), *b, inf_lag(eq.delay.front().h, eq.t0)};
}

}  // namespace detail

inline CriterionVerdict check_corollary1(const NeutralEquation& eq) {
  const char* id = "cor1";
  auto s = detail::constant_b_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& c = std::get<detail::ConstantBShape>(s);
  return detail::decide(id, Claim::ExponentialStability,
                        {{"", {detail::less_equal("b tau <= 1/e", c.b * c.r.tau, kInvE),
                               detail::less("||a|| < 1/2", c.r.norm_a.value, 0.5, c.r.norm_a.exact)}}});
}

inline CriterionVerdict check_corollary2a_a(const NeutralEquation& eq) {
  const char* id = "cor2a_a";
  if (eq.neutral.size() > 1) return detail::not_applicable(id, Claim::ExponentialStability, "requires at most one neutral term");
  auto rv = detail::single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&rv)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& r = std::get<detail::ScalarReduction>(rv);
  const double rhs = 2.0 * kInvE * (1.0 - r.norm_a.value);
  return detail::decide(id, Claim::ExponentialStability,
                        {{"", {detail::less_equal("1/(tau e) <= inf b", 1.0 / (r.tau * kE), r.inf_b.value, r.inf_b.exact),
                               detail::less("tau ||b|| < (2/e)(1 - ||a||)", r.tau * r.sup_b.value, rhs,
                                            r.sup_b.exact && r.norm_a.exact)}}});
}

inline CriterionVerdict check_corollary2a_b(const NeutralEquation& eq) {
  const char* id = "cor2a_b";
  if (eq.neutral.size() > 1) return detail::not_applicable(id, Claim::ExponentialStability, "requires at most one neutral term");
  auto rv = detail::single_delay_reduction(eq);
  if (auto* why = std::get_if<std::string>(&rv)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& r = std::get<detail::ScalarReduction>(rv);
  const double lo_lag = inf_lag(eq.delay.front().h, eq.t0);
  const auto lhs = derived(r.norm_a_over_b.value * r.sup_b.value + r.tau * r.sup_b.value, r.norm_a_over_b, r.sup_b);
  return detail::decide(
      id, Claim::ExponentialStability,
      {{"", {detail::less("0 < inf b", 0.0, r.inf_b.value, r.inf_b.exact),
             detail::less_equal("1/(||b|| e) <= inf (t - h(t))", 1.0 / (r.sup_b.value * kE), lo_lag, r.sup_b.exact),
             detail::less("||a/b|| ||b|| + tau ||b|| < 1 + 1/e - ||a||", lhs.value, 1.0 + kInvE - r.norm_a.value,
                          lhs.exact && r.norm_a.exact)}}});
}

inline CriterionVerdict check_corollary2b_A(const NeutralEquation& eq) {
  const char* id = "cor2b_A";
  auto s = detail::constant_b_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& c = std::get<detail::ConstantBShape>(s);
  const double bt = c.b * c.r.tau;
  return detail::decide(id, Claim::ExponentialStability,
                        {{"", {detail::less_equal("1/e <= b tau", kInvE, bt),
                               detail::less("b tau < (2/e)(1 - ||a||)", bt, 2.0 * kInvE * (1.0 - c.r.norm_a.value),
                                            c.r.norm_a.exact)}}});
}

inline CriterionVerdict check_corollary2b_B(const NeutralEquation& eq) {
  const char* id = "cor2b_B";
  auto s = detail::constant_b_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& c = std::get<detail::ConstantBShape>(s);
  return detail::decide(id, Claim::ExponentialStability,
                        {{"", {detail::less_equal("1/e <= b inf (t - h(t))", kInvE, c.b * c.inf_lag),
                               detail::less("b tau < 1 + 1/e - 2||a||", c.b * c.r.tau, 1.0 + kInvE - 2.0 * c.r.norm_a.value,
                                            c.r.norm_a.exact)}}});
}

// ---------------------------------------------------------------------------
// Unbounded delays: Theorem 2a and the pantograph corollary
// ---------------------------------------------------------------------------

inline CriterionVerdict check_theorem2a(const NeutralEquation& eq) {
  const char* id = "thm2a";
  const auto claim = Claim::AsymptoticStability;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  if (eq.neutral.size() != 1 || eq.delay.size() != 1) {
    return detail::not_applicable(id, claim, "requires one neutral and one delay term");
  }
  if (!has_unbounded_delay(eq)) return detail::not_applicable(id, claim, "all delays bounded; use the bounded-delay tests");
  const double t0 = eq.t0;
  const auto& [a, g] = eq.neutral.front();
  const auto& [b, h] = eq.delay.front();
  if (inf_bound(b, t0).value < 0.0) return detail::not_applicable(id, claim, "requires b >= 0");
  if (auto k = constant_value(b); k && *k == 0.0) return detail::not_applicable(id, claim, "requires b != 0 a.e.");
  if (!integral_diverges(b)) return detail::not_applicable(id, claim, "requires a divergent integral of b");

  WindowBounds wg, wh;
  try {
    wg = window_integral_bounds(b, g, t0);
    wh = window_integral_bounds(b, h, t0);
  } catch (const std::domain_error& e) {
    return detail::not_applicable(id, claim, std::string("window integral undefined: ") + e.what());
  }
  if (!std::isfinite(wg.sup.value)) return detail::not_applicable(id, claim, "window integral of b over g is unbounded");

  // ‖A‖ with A(t) = a(t) b(g(t)) / b(t)
  const auto na = sup_norm(a, t0);
  BoundCertificate normA;
  if (constant_value(b)) {
    normA = na;
  } else if (b.as<Reciprocal>() && g.as<Proportional>()) {
    normA = derived(na.value / g.as<Proportional>()->lambda, na);
  } else if (b.as<Reciprocal>() && is_bounded(g)) {
    const double L = sup_lag(g);
    if (!(t0 - L > 0.0)) return detail::not_applicable(id, claim, "neutral argument reaches t <= 0");
    normA = loosened(derived(na.value * t0 / (t0 - L), na));
  } else {
    const auto lo = inf_bound(b, t0);
    if (!(lo.value > 0.0)) return detail::not_applicable(id, claim, "cannot bound A(t) = a b(g) / b");
    normA = loosened(derived(na.value * sup_value(b, t0).value / lo.value, na, lo));
  }

  std::vector<detail::Branch> branches{
      {"a", {detail::less_equal("sup window integral of b over h <= 1/e", wh.sup.value, kInvE, wh.sup.exact),
             detail::less("||A|| < 1/2", normA.value, 0.5, normA.exact)}},
      {"b", {detail::less("1/e < inf window integral of b over h", kInvE, wh.inf.value, wh.inf.exact),
             detail::less("sup window integral < 1 + 1/e - 2||A||", wh.sup.value, 1.0 + kInvE - 2.0 * normA.value,
                          wh.sup.exact && normA.exact)}}};
  return detail::decide(id, claim, branches);
}

inline CriterionVerdict check_corollary3(const NeutralEquation& eq) {
  const char* id = "cor3";
  const auto claim = Claim::AsymptoticStability;
  if (eq.kernel || eq.neutral.size() != 1 || eq.delay.size() != 1) {
    return detail::not_applicable(id, claim, "requires the pantograph shape a x'(mu t), (b/t) x(lambda t)");
  }
  const auto a = constant_value(eq.neutral.front().a);
  const auto* mu = eq.neutral.front().g.as<Proportional>();
  const auto* b = eq.delay.front().b.as<Reciprocal>();
  const auto* lam = eq.delay.front().h.as<Proportional>();
  if (!a || !mu || !b || !lam) {
    return detail::not_applicable(id, claim, "requires the pantograph shape a x'(mu t), (b/t) x(lambda t)");
  }
  if (eq.t0 < 1.0) return detail::not_applicable(id, claim, "requires t0 >= 1");
  if (!(b->c > 0.0)) return detail::not_applicable(id, claim, "requires b > 0");
  const double L = b->c * std::log(1.0 / lam->lambda);
  const double abs_a = std::abs(*a);
  return detail::decide(id, claim,
                        {{"a", {detail::less_equal("b ln(1/lambda) <= 1/e", L, kInvE),
                                detail::less("|a| < 1/2", abs_a, 0.5)}},
                         {"b", {detail::less("1/e < b ln(1/lambda)", kInvE, L),
                                detail::less("b ln(1/lambda) < 1 + 1/e - 2|a|", L, 1.0 + kInvE - 2.0 * abs_a)}}});
}

// ---------------------------------------------------------------------------
// Several delay terms: Theorems 4-6 and Corollaries 4-8
// ---------------------------------------------------------------------------

inline CriterionVerdict check_theorem4(const NeutralEquation& eq) {
  const char* id = "thm4";
  const auto claim = Claim::ExponentialStability;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  if (eq.neutral.size() > 1) return detail::not_applicable(id, claim, "requires at most one neutral term");
  if (eq.delay.empty()) return detail::not_applicable(id, claim, "requires at least one delay term");
  if (!detail::all_bounded(eq)) return detail::not_applicable(id, claim, "requires bounded delays");
  const double t0 = eq.t0;

  std::vector<detail::Quantity> bs;
  double tau_bar = 0.0;
  for (const auto& d : eq.delay) {
    bs.push_back(detail::quantity_of(d.b, t0));
    if (bs.back().inf.value < 0.0) return detail::not_applicable(id, claim, "requires every b_k >= 0");
    tau_bar = std::max(tau_bar, sup_lag(d.h));
  }
  const auto b_bar = detail::sum_of(bs, t0);

  // the worst delay h̄ = min_k h_k
  std::optional<DelayExpr> h_bar;
  const bool identical = std::all_of(eq.delay.begin(), eq.delay.end(),
                                     [&](const DelayTerm& d) { return d.h == eq.delay.front().h; });
  if (identical) {
    h_bar = eq.delay.front().h;
  } else if (std::all_of(eq.delay.begin(), eq.delay.end(),
                         [](const DelayTerm& d) { return constant_lag(d.h).has_value(); })) {
    h_bar = DelayExpr::lag(tau_bar);
  }

  detail::ScalarReduction r;
  r.tau = tau_bar;
  r.sup_b = b_bar.sup_abs;
  r.inf_b = b_bar.inf;
  std::string note;
  if (b_bar.expr && h_bar) {
    try {
      r.window = window_integral_bounds(*b_bar.expr, *h_bar, t0).sup;
    } catch (const std::domain_error& e) {
      return detail::not_applicable(id, claim, std::string("window integral undefined: ") + e.what());
    }
  } else {
    r.window = loosened(derived(b_bar.sup_abs.value * tau_bar, b_bar.sup_abs));
    note = "window integral bounded by sup b * tau";
  }
  if (eq.neutral.empty()) {
    r.norm_a = BoundCertificate::closed(0.0);
    r.norm_a_over_b = BoundCertificate::closed(0.0);
  } else {
    const auto a = detail::quantity_of(eq.neutral.front().a, t0);
    r.norm_a = a.sup_abs;
    r.norm_a_over_b = detail::ratio_or_inf(a, b_bar, t0);
  }
  return detail::decide(id, claim,
                        {detail::theorem1_branch(r, "1"), detail::theorem2a_branch(r, "2a"),
                         detail::theorem2b_branch(r, "2b")},
                        note);
}

namespace detail {

struct MultiTerm {
  Quantity b;
  double sup_lag = 0.0;
  double inf_lag = 0.0;
};

struct MultiShape {
  std::vector<MultiTerm> terms;
  Quantity a;
  BoundCertificate norm_a;
  BoundCertificate total;  // Σ‖b_k‖
  bool has_kernel = false;
};

inline std::variant<MultiShape, std::string> multi_delay_shape(const NeutralEquation& eq) {
  if (eq.neutral.size() > 1) return std::string("requires at most one neutral term");
  if (eq.delay.empty()) return std::string("requires at least one delay term");
  if (!all_bounded(eq)) return std::string("requires bounded delays");
  const double t0 = eq.t0;
  MultiShape s;
  for (const auto& d : eq.delay) {
    auto q = quantity_of(d.b, t0);
    if (q.inf.value < 0.0) return std::string("requires every b_k >= 0");
    s.terms.push_back({q, sup_lag(d.h), inf_lag(d.h, t0)});
  }
  if (eq.kernel) {
    // The kernel term acts as b(t) x(h0(t)) with h(t) <= h0(t) <= t.
    s.terms.push_back({quantity_of(induced_b(eq)), sup_lag(eq.kernel->h), 0.0});
    s.has_kernel = true;
  }
  if (s.terms.size() > 16) return std::string("more than 16 delay terms; use the corollaries directly");
  if (eq.neutral.empty()) {
    s.a = quantity_of(CoefficientExpr::constant(0.0), t0);
  } else {
    s.a = quantity_of(eq.neutral.front().a, t0);
  }
  s.norm_a = s.a.sup_abs;
  std::vector<BoundCertificate> certs;
  double total = 0.0;
  for (const auto& t : s.terms) {
    total += t.b.sup_abs.value;
    certs.push_back(t.b.sup_abs);
  }
  s.total = derived_from(total, certs);
  return s;
}

enum class SubsetRule { Integral, Shifted };

struct SubsetResult {
  Branch branch;
  double lhs = kInf;
  Outcome outcome = Outcome::Fail;
};

inline SubsetResult evaluate_subset(const MultiShape& s, unsigned mask, SubsetRule rule, double t0) {
  std::vector<Quantity> in_j;
  double B = 0.0;
  for (std::size_t k = 0; k < s.terms.size(); ++k) {
    if (mask & (1u << k)) {
      in_j.push_back(s.terms[k].b);
      B += s.terms[k].b.sup_abs.value;
    }
  }
  const auto bj = sum_of(in_j, t0);
  std::vector<BoundCertificate> certs{s.norm_a, s.total};
  const auto a_b = ratio_or_inf(s.a, bj, t0);
  certs.push_back(a_b);
  const double shift = 1.0 / (B * kE);
  double inner = a_b.value;
  double outside = 0.0;
  for (std::size_t k = 0; k < s.terms.size(); ++k) {
    const auto rk = ratio_or_inf(s.terms[k].b, bj, t0);
    certs.push_back(rk);
    if (mask & (1u << k)) {
      const double dev = rule == SubsetRule::Integral
                             ? s.terms[k].sup_lag
                             : std::max(std::abs(s.terms[k].sup_lag - shift), std::abs(s.terms[k].inf_lag - shift));
      inner += rk.value * dev;
    } else {
      outside += rk.value;
    }
  }
  const auto lhs = derived_from(inner * s.total.value / (1.0 - s.norm_a.value) + outside, certs);
  SubsetResult out;
  out.lhs = lhs.value;
  const char* label = rule == SubsetRule::Integral
                          ? "(||a/b|| + sum_J tau_k ||b_k/b||) sum ||b_k||/(1-||a||) + sum_notJ ||b_k/b|| < 1"
                          : "(||a/b|| + sum_J ||b_k/b|| ||t-h_k-1/(Be)||) sum ||b_k||/(1-||a||) + sum_notJ ||b_k/b|| < 1";
  out.branch = {"", {less("0 < inf b_J", 0.0, bj.inf.value, bj.inf.exact), less(label, lhs.value, 1.0, lhs.exact)}};
  out.outcome = branch_outcome(out.branch);
  return out;
}

inline std::vector<std::size_t> subset_indices(unsigned mask, std::size_t m) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < m; ++k) {
    if (mask & (1u << k)) out.push_back(k + 1);
  }
  return out;
}

// Best subset among `masks`: a passing one with the smallest lhs, else an
// undecided one, else the failing one with the smallest lhs.
inline CriterionVerdict best_subset(std::string id, const MultiShape& s, const std::vector<unsigned>& masks,
                                    SubsetRule rule, double t0) {
  std::optional<std::pair<unsigned, SubsetResult>> best;
  auto rank = [](Outcome o) { return o == Outcome::Pass ? 0 : o == Outcome::Unknown ? 1 : 2; };
  for (unsigned mask : masks) {
    auto r = evaluate_subset(s, mask, rule, t0);
    if (!best || rank(r.outcome) < rank(best->second.outcome) ||
        (rank(r.outcome) == rank(best->second.outcome) && r.lhs < best->second.lhs)) {
      best = std::make_pair(mask, std::move(r));
    }
  }
  auto v = decide(std::move(id), Claim::ExponentialStability, {best->second.branch},
                  s.has_kernel ? "last term is the distributed kernel with lag range [0, tau]" : "");
  v.subset = subset_indices(best->first, s.terms.size());
  return v;
}

inline std::vector<unsigned> all_masks(std::size_t m) {
  std::vector<unsigned> out;
  for (unsigned mask = 1; mask < (1u << m); ++mask) out.push_back(mask);
  return out;
}

inline std::vector<unsigned> singleton_masks(std::size_t m) {
  std::vector<unsigned> out;
  for (std::size_t k = 0; k < m; ++k) out.push_back(1u << k);
  return out;
}

inline unsigned full_mask(std::size_t m) { return (1u << m) - 1u; }

inline std::optional<unsigned> mask_of(const std::vector<std::size_t>& J, std::size_t m) {
  unsigned mask = 0;
  for (std::size_t k : J) {
    if (k < 1 || k > m) return std::nullopt;
    mask |= 1u << (k - 1);
  }
  if (mask == 0) return std::nullopt;
  return mask;
}

}  // namespace detail

inline CriterionVerdict check_theorem5(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("thm5", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("thm5", shape, detail::all_masks(shape.terms.size()), detail::SubsetRule::Integral, eq.t0);
}

inline CriterionVerdict check_theorem6(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("thm6", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("thm6", shape, detail::all_masks(shape.terms.size()), detail::SubsetRule::Shifted, eq.t0);
}

/// Theorem 5 for a fixed index set J (1-based).
inline CriterionVerdict check_theorem5_subset(const NeutralEquation& eq, const std::vector<std::size_t>& J) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("thm5", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  const auto mask = detail::mask_of(J, shape.terms.size());
  if (!mask) throw std::invalid_argument("check_theorem5_subset: invalid index set");
  return detail::best_subset("thm5", shape, {*mask}, detail::SubsetRule::Integral, eq.t0);
}

inline CriterionVerdict check_theorem6_subset(const NeutralEquation& eq, const std::vector<std::size_t>& J) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("thm6", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  const auto mask = detail::mask_of(J, shape.terms.size());
  if (!mask) throw std::invalid_argument("check_theorem6_subset: invalid index set");
  return detail::best_subset("thm6", shape, {*mask}, detail::SubsetRule::Shifted, eq.t0);
}

inline CriterionVerdict check_corollary4(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("cor4", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("cor4", shape, {detail::full_mask(shape.terms.size())}, detail::SubsetRule::Integral, eq.t0);
}

inline CriterionVerdict check_corollary5(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("cor5", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("cor5", shape, detail::singleton_masks(shape.terms.size()), detail::SubsetRule::Integral, eq.t0);
}

inline CriterionVerdict check_corollary6(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("cor6", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("cor6", shape, {detail::full_mask(shape.terms.size())}, detail::SubsetRule::Shifted, eq.t0);
}

inline CriterionVerdict check_corollary7(const NeutralEquation& eq) {
  auto s = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("cor7", Claim::ExponentialStability, *why);
  const auto& shape = std::get<detail::MultiShape>(s);
  return detail::best_subset("cor7", shape, detail::singleton_masks(shape.terms.size()), detail::SubsetRule::Shifted, eq.t0);
}

inline CriterionVerdict check_corollary8(const NeutralEquation& eq) {
  const char* id = "cor8";
  auto sv = detail::multi_delay_shape(eq);
  if (auto* why = std::get_if<std::string>(&sv)) return detail::not_applicable(id, Claim::ExponentialStability, *why);
  const auto& s = std::get<detail::MultiShape>(sv);
  const double t0 = eq.t0;
  std::vector<detail::Quantity> all;
  for (const auto& t : s.terms) all.push_back(t.b);
  const auto b = detail::sum_of(all, t0);
  const double shift = 1.0 / (s.total.value * kE);

  std::vector<Witness> w{detail::less("0 < inf b", 0.0, b.inf.value, b.inf.exact)};
  std::vector<BoundCertificate> certs{s.norm_a, s.total};
  const auto a_b = detail::ratio_or_inf(s.a, b, t0);
  certs.push_back(a_b);
  double weighted = a_b.value;
  double ratios = 0.0;
  for (std::size_t k = 0; k < s.terms.size(); ++k) {
    w.push_back(detail::less_equal("1/(sum ||b_j|| e) <= inf (t - h_" + std::to_string(k + 1) + "(t))", shift,
                                   s.terms[k].inf_lag, s.total.exact));
    const auto rk = detail::ratio_or_inf(s.terms[k].b, b, t0);
    certs.push_back(rk);
    weighted += s.terms[k].sup_lag * rk.value;
    ratios += rk.value;
  }
  const auto lhs = derived_from(weighted * s.total.value, certs);
  const auto rhs = derived_from(1.0 + kInvE * ratios - s.norm_a.value, certs);
  w.push_back(detail::less("(||a/b|| + sum tau_k ||b_k/b||) sum ||b_j|| < 1 + (1/e) sum ||b_k/b|| - ||a||", lhs.value,
                           rhs.value, lhs.exact && rhs.exact));
  auto v = detail::decide(id, Claim::ExponentialStability, {{"", std::move(w)}});
  v.subset = detail::subset_indices(detail::full_mask(s.terms.size()), s.terms.size());
  return v;
}

// ---------------------------------------------------------------------------
// Distributed kernel: Theorems 7 and 8
// ---------------------------------------------------------------------------

inline CriterionVerdict check_theorem7(const NeutralEquation& eq) {
  const char* id = "thm7";
  const auto claim = Claim::ExponentialStability;
  if (!eq.kernel) return detail::not_applicable(id, claim, "requires a distributed kernel");
  if (!eq.delay.empty()) return detail::not_applicable(id, claim, "mixed equation; handled by the several-delay tests");
  if (!detail::all_bounded(eq)) return detail::not_applicable(id, claim, "requires bounded delays");
  const double t0 = eq.t0;
  const auto b = detail::quantity_of(induced_b(eq));
  const DelayExpr& h = eq.kernel->h;

  detail::ScalarReduction r;
  std::vector<BoundCertificate> norms, ratios;
  double na = 0.0, nab = 0.0;
  for (const auto& n : eq.neutral) {
    const auto q = detail::quantity_of(n.a, t0);
    norms.push_back(q.sup_abs);
    na += q.sup_abs.value;
    const auto rr = detail::ratio_or_inf(q, b, t0);
    ratios.push_back(rr);
    nab += rr.value;
  }
  r.norm_a = derived_from(na, norms);
  r.norm_a_over_b = derived_from(nab, ratios);
  r.sup_b = b.sup_abs;
  r.inf_b = b.inf;
  r.tau = sup_lag(h);
  std::string note = "delay bound taken from the kernel window edge h(t)";
  if (b.expr) {
    r.window = window_integral_bounds(*b.expr, h, t0).sup;
  } else {
    r.window = loosened(derived(b.sup_abs.value * r.tau, b.sup_abs));
    note += "; window integral bounded by sup b * tau";
  }
  return detail::decide(id, claim,
                        {detail::theorem1_branch(r, "1"), detail::theorem2a_branch(r, "2a"),
                         detail::theorem2b_branch(r, "2b")},
                        note);
}

// ---------------------------------------------------------------------------
// Literature tests
// ---------------------------------------------------------------------------

namespace detail {

// Terms of a constant-coefficient equation with constant lags.
struct ConstantTerm {
  double coef = 0.0;
  double lag = 0.0;
};

struct ConstantForm {
  std::vector<ConstantTerm> neutral;
  std::vector<ConstantTerm> delay;
};

inline std::optional<ConstantForm> constant_form(const NeutralEquation& eq) {
  if (eq.kernel) return std::nullopt;
  ConstantForm f;
  for (const auto& n : eq.neutral) {
    auto c = constant_value(n.a);
    auto L = constant_lag(n.g);
    if (!c || !L) return std::nullopt;
    f.neutral.push_back({*c, *L});
  }
  for (const auto& d : eq.delay) {
    auto c = constant_value(d.b);
    auto L = constant_lag(d.h);
    if (!c || !L) return std::nullopt;
    f.delay.push_back({*c, *L});
  }
  return f;
}

// One neutral term (or none) and one delay term, both with constant data:
// x' - q x'(t - delta) + p x(t - tau) = 0.
struct AutonomousPair {
  double q = 0.0;
  double delta = 0.0;
  double p = 0.0;
  double tau = 0.0;
};

inline std::optional<AutonomousPair> autonomous_pair(const NeutralEquation& eq) {
  auto f = constant_form(eq);
  if (!f || f->neutral.size() > 1 || f->delay.size() != 1) return std::nullopt;
  AutonomousPair p;
  if (!f->neutral.empty()) {
    p.q = f->neutral.front().coef;
    p.delta = f->neutral.front().lag;
  }
  p.p = f->delay.front().coef;
  p.tau = f->delay.front().lag;
  return p;
}

}  // namespace detail

/// (x + c x(t - tau))' + p x(t) + q x(t - sigma) = 0, c, p, q >= 0, sigma >= tau.
inline CriterionVerdict check_p1(const NeutralEquation& eq) {
  const char* id = "P1";
  const auto claim = Claim::SolutionsTendToZero;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  if (eq.neutral.size() != 1) return detail::not_applicable(id, claim, "requires one neutral term");
  const auto a = constant_value(eq.neutral.front().a);
  const auto tn = constant_lag(eq.neutral.front().g);
  if (!a || !tn) return detail::not_applicable(id, claim, "requires a constant neutral coefficient and lag");
  if (*a > 0.0) return detail::not_applicable(id, claim, "neutral coefficient c = -a must be non-negative");
  const double c1 = -*a;
  const double t0 = eq.t0;

  const CoefficientExpr* p = nullptr;
  const CoefficientExpr* q = nullptr;
  double sigma = 0.0;
  for (const auto& d : eq.delay) {
    const auto L = constant_lag(d.h);
    if (!L) return detail::not_applicable(id, claim, "requires constant lags");
    if (!is_continuous(d.b)) return detail::not_applicable(id, claim, "requires continuous coefficients");
    if (inf_bound(d.b, t0).value < 0.0) return detail::not_applicable(id, claim, "requires p, q >= 0");
    if (*L == 0.0) {
      if (p) return detail::not_applicable(id, claim, "more than one undelayed term");
      p = &d.b;
    } else {
      if (q) return detail::not_applicable(id, claim, "more than one delayed term");
      q = &d.b;
      sigma = *L;
    }
  }
  if (!p && !q) return detail::not_applicable(id, claim, "requires a delay term");
  if (q && sigma < *tn) return detail::not_applicable(id, claim, "requires sigma >= tau");
  const double p1 = p ? inf_bound(*p, t0).value : 0.0;
  const double p2 = p ? sup_value(*p, t0).value : 0.0;
  const double q1 = q ? inf_bound(*q, t0).value : 0.0;
  const double q2 = q ? sup_value(*q, t0).value : 0.0;
  return detail::decide(id, claim,
                        {{"a", {detail::less("(p2+q2)(c1+q2 sigma) < p1+q1", (p2 + q2) * (c1 + q2 * sigma), p1 + q1)}},
                         {"b", {detail::less("q2 + c1(p2+q2) < p1", q2 + c1 * (p2 + q2), p1)}}});
}

namespace detail {

struct YuShape {
  double p = 0.0;  // |P|
  BoundCertificate window;
};

// (x - P x(t - tau))' + Q x(t - sigma) = 0 with constant P, Q >= 0, tau, sigma > 0.
inline std::variant<YuShape, std::string> yu_shape(const NeutralEquation& eq) {
  if (eq.kernel) return std::string("distributed kernel present");
  if (eq.neutral.size() != 1 || eq.delay.size() != 1) return std::string("requires one neutral and one delay term");
  const auto P = constant_value(eq.neutral.front().a);
  const auto tn = constant_lag(eq.neutral.front().g);
  if (!P || !tn) return std::string("requires a constant neutral coefficient and lag");
  if (!(*tn > 0.0)) return std::string("requires a positive neutral lag");
  const auto& d = eq.delay.front();
  const auto sigma = constant_lag(d.h);
  if (!sigma || !(*sigma > 0.0)) return std::string("requires a positive constant lag");
  if (!is_continuous(d.b)) return std::string("requires a continuous coefficient");
  if (inf_bound(d.b, eq.t0).value < 0.0) return std::string("requires Q >= 0");
  if (!integral_diverges(d.b)) return std::string("requires a divergent integral of Q");
  try {
    return YuShape{std::abs(*P), window_integral_bounds(d.b, d.h, eq.t0).sup};
  } catch (const std::domain_error& e) {
    return std::string("window integral undefined: ") + e.what();
  }
}

}  // namespace detail

inline CriterionVerdict check_p2(const NeutralEquation& eq) {
  auto s = detail::yu_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("P2", Claim::AsymptoticStability, *why);
  const auto& y = std::get<detail::YuShape>(s);
  return detail::decide("P2", Claim::AsymptoticStability,
                        {{"", {detail::less("window integral of Q < 3/2 - 2p(2-p)", y.window.value,
                                            1.5 - 2.0 * y.p * (2.0 - y.p), y.window.exact)}}});
}

inline CriterionVerdict check_p2a(const NeutralEquation& eq) {
  auto s = detail::yu_shape(eq);
  if (auto* why = std::get_if<std::string>(&s)) return detail::not_applicable("P2a", Claim::AsymptoticStability, *why);
  const auto& y = std::get<detail::YuShape>(s);
  return detail::decide(
      "P2a", Claim::AsymptoticStability,
      {{"a", {detail::less("p < 1/4", y.p, 0.25),
              detail::less("window integral of Q < 3/2 - 2p", y.window.value, 1.5 - 2.0 * y.p, y.window.exact)}},
       {"b", {detail::less_equal("1/4 <= p", 0.25, y.p), detail::less("p < 1/2", y.p, 0.5),
              detail::less("window integral of Q < sqrt(2(1-2p))", y.window.value,
                           std::sqrt(std::max(0.0, 2.0 * (1.0 - 2.0 * y.p))), y.window.exact)}}});
}

/// Autonomous x' + Σ b_j x'(t - sigma_j) + a0 x + Σ a_j x(t - tau_j) = 0.
inline CriterionVerdict check_p3(const NeutralEquation& eq) {
  const char* id = "P3";
  const auto claim = Claim::SolutionsTendToZero;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  auto f = detail::constant_form(eq);
  if (!f) return detail::not_applicable(id, claim, "requires constant coefficients and lags");
  double a0 = 0.0;
  double all = 0.0;
  double weighted = 0.0;
  for (const auto& t : f->delay) {
    all += t.coef;
    if (t.lag == 0.0) a0 += t.coef;
    else weighted += std::abs(t.coef) * t.lag;
  }
  if (!(a0 > 0.0)) return detail::not_applicable(id, claim, "requires an undelayed term with a0 > 0");
  double neutral = 0.0;
  for (const auto& t : f->neutral) {
    if (t.coef != 0.0 && t.lag == 0.0) return detail::not_applicable(id, claim, "requires positive neutral lags");
    neutral += std::abs(t.coef);
  }
  return detail::decide(id, claim,
                        {{"", {detail::less("0 < sum a_i", 0.0, all),
                               detail::less("sum |b_j| + sum |a_i| tau_i < 1", neutral + weighted, 1.0)}}});
}

/// x' + A x(t - tau) + B x'(t - sigma) = 0 with constant A, B.
inline CriterionVerdict check_p4(const NeutralEquation& eq) {
  const char* id = "P4";
  const auto claim = Claim::SolutionsTendToZero;
  auto pair = detail::autonomous_pair(eq);
  if (!pair) return detail::not_applicable(id, claim, "constant coefficients with one neutral and one delay term only");
  const double A = pair->p;
  const double B = std::abs(pair->q);
  const double tau = pair->tau;
  if (!(A > 0.0)) return detail::not_applicable(id, claim, "requires liminf A > 0");
  return detail::decide(id, claim,
                        {{"", {detail::less("2 A tau + |B|/A + |B| tau + 4|B| A < 2",
                                            2.0 * A * tau + B / A + B * tau + 4.0 * B * A, 2.0),
                               detail::less("4 B^2 + A tau < 1", 4.0 * B * B + A * tau, 1.0)}}});
}

/// x' = -A(t) x + B(t) x(t - tau) + c(t) x'(t - sigma).
inline CriterionVerdict check_p5(const NeutralEquation& eq) {
  const char* id = "P5";
  const auto claim = Claim::AsymptoticStability;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  if (eq.neutral.size() > 1) return detail::not_applicable(id, claim, "requires at most one neutral term");
  const double t0 = eq.t0;
  BoundCertificate c0 = BoundCertificate::closed(0.0);
  if (!eq.neutral.empty()) {
    const auto& n = eq.neutral.front();
    if (!(n.a.as<Constant>() || n.a.as<Sinusoid>())) {
      return detail::not_applicable(id, claim, "requires a continuously differentiable neutral coefficient");
    }
    if (!constant_lag(n.g)) return detail::not_applicable(id, claim, "requires a constant neutral lag");
    c0 = sup_norm(n.a, t0);
  }
  const CoefficientExpr* A = nullptr;
  const CoefficientExpr* B = nullptr;
  for (const auto& d : eq.delay) {
    const auto L = constant_lag(d.h);
    if (!L) return detail::not_applicable(id, claim, "requires constant lags");
    if (!is_continuous(d.b)) return detail::not_applicable(id, claim, "requires continuous coefficients");
    if (*L == 0.0) {
      if (A) return detail::not_applicable(id, claim, "more than one undelayed term");
      A = &d.b;
    } else {
      if (B) return detail::not_applicable(id, claim, "more than one delayed term");
      B = &d.b;
    }
  }
  if (!A) return detail::not_applicable(id, claim, "requires an undelayed term");
  const auto a0 = inf_bound(*A, t0);
  const auto sup_B = B ? sup_norm(*B, t0) : BoundCertificate::closed(0.0);
  return detail::decide(id, claim,
                        {{"", {detail::less("0 < inf A", 0.0, a0.value),
                               detail::less("sup |B| < inf A", sup_B.value, a0.value),
                               detail::less("||c|| < 1", c0.value, 1.0)}}});
}

/// x' = -A x - B x(t - tau) + C x'(t - tau) with constant data.
inline CriterionVerdict check_p6(const NeutralEquation& eq) {
  const char* id = "P6";
  const auto claim = Claim::SolutionsTendToZero;
  auto f = detail::constant_form(eq);
  if (!f) return detail::not_applicable(id, claim, "requires constant coefficients and lags");
  if (f->neutral.size() > 1) return detail::not_applicable(id, claim, "requires at most one neutral term");
  double A = 0.0, B = 0.0;
  bool has_A = false, has_B = false;
  double tau = -1.0;
  for (const auto& t : f->delay) {
    if (t.lag == 0.0) {
      if (has_A) return detail::not_applicable(id, claim, "more than one undelayed term");
      A = t.coef;
      has_A = true;
    } else {
      if (has_B) return detail::not_applicable(id, claim, "more than one delayed term");
      B = t.coef;
      tau = t.lag;
      has_B = true;
    }
  }
  if (!has_A || !(A > 0.0)) return detail::not_applicable(id, claim, "requires an undelayed term with A > 0");
  double C = 0.0;
  if (!f->neutral.empty()) {
    C = f->neutral.front().coef;
    if (C != 0.0 && has_B && f->neutral.front().lag != tau) {
      return detail::not_applicable(id, claim, "neutral and delay terms must share the lag");
    }
    if (C != 0.0 && f->neutral.front().lag == 0.0) return detail::not_applicable(id, claim, "requires a positive lag");
  }
  return detail::decide(id, claim, {{"", {detail::less("|C| + |B + A C|/A < 1", std::abs(C) + std::abs(B + A * C) / A, 1.0)}}});
}

/// y' - a y'(t - sigma) + b y(t - tau) = 0 with a, b > 0: L2 stability when
/// lambda = a lambda e^{sigma lambda} + b e^{tau lambda} has a positive root.
inline CriterionVerdict check_p7(const NeutralEquation& eq) {
  const char* id = "P7";
  const auto claim = Claim::L2Stability;
  auto pair = detail::autonomous_pair(eq);
  if (!pair || eq.neutral.size() != 1) return detail::not_applicable(id, claim, "requires constant a, b with constant lags");
  if (!(pair->q > 0.0) || !(pair->p > 0.0)) return detail::not_applicable(id, claim, "requires a > 0 and b > 0");
  const auto scan = char_root_positive(pair->q, pair->p, pair->delta, pair->tau);
  auto v = detail::decide(id, claim, {{"", {detail::less("0 < max F on the scan grid", 0.0, scan.max_value)}}},
                          "linear case (q = 0)");
  if (scan.found) v.note += "; root " + detail::fmt(scan.root);
  return v;
}

/// x' - Σ q_i x'(g_i) + Σ p_k x(h_k) = 0.
inline CriterionVerdict check_p8(const NeutralEquation& eq) {
  const char* id = "P8";
  const auto claim = Claim::ExponentialStability;
  if (eq.kernel) return detail::not_applicable(id, claim, "distributed kernel present");
  if (eq.delay.empty()) return detail::not_applicable(id, claim, "requires a delay term");
  if (!detail::all_bounded(eq)) return detail::not_applicable(id, claim, "requires bounded delays");
  const double t0 = eq.t0;
  std::vector<detail::Quantity> ps, qs;
  double tau = 0.0;
  bool p_nonneg = true;
  for (const auto& d : eq.delay) {
    ps.push_back(detail::quantity_of(d.b, t0));
    p_nonneg = p_nonneg && ps.back().inf.value >= 0.0;
    tau = std::max(tau, sup_lag(d.h));
  }
  for (const auto& n : eq.neutral) qs.push_back(detail::quantity_of(n.a, t0));
  const auto p = detail::sum_of(ps, t0);
  const auto q = qs.empty() ? detail::quantity_of(CoefficientExpr::constant(0.0), t0) : detail::sum_of(qs, t0);
  if (q.inf.value < 0.0) return detail::not_applicable(id, claim, "requires sum q_i >= 0");

  BoundCertificate abs_ratio = BoundCertificate::closed(1.0);
  if (!p_nonneg) {
    double s = 0.0;
    std::vector<BoundCertificate> certs{p.inf};
    for (const auto& x : ps) {
      s += x.sup_abs.value;
      certs.push_back(x.sup_abs);
    }
    abs_ratio = p.inf.value > 0.0 ? loosened(derived_from(s / p.inf.value, certs)) : BoundCertificate::closed(kInf);
  }
  return detail::decide(id, claim,
                        {{"", {detail::less("0 < inf sum p_k", 0.0, p.inf.value, p.inf.exact),
                               detail::less_equal("sup sum p_k <= 1/(tau e)", p.sup.value, 1.0 / (tau * kE), p.sup.exact),
                               detail::less_equal("sup sum q_i <= (1 + sup sum|p_k|/sum p_k)^-1", q.sup.value,
                                                  1.0 / (1.0 + abs_ratio.value), q.sup.exact && abs_ratio.exact)}}});
}

namespace detail {

struct OmegaPick {
  double omega = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool exact = false;
};

template <typename Lhs>
OmegaPick scan_omega(Lhs&& lhs_of, double numerator) {
  OmegaPick best;
  double best_slack = -kInf;
  for (const auto& [w, s] : sigma_table()) {
    const double lhs = lhs_of(w);
    const double rhs = numerator / s;
    if (rhs - lhs > best_slack) {
      best_slack = rhs - lhs;
      best = {w, lhs, rhs, w <= kInvE};
    }
  }
  return best;
}

}  // namespace detail

inline CriterionVerdict check_p9(const NeutralEquation& eq) {
  const char* id = "P9";
  const auto claim = Claim::ExponentialStability;
  auto f = detail::constant_form(eq);
  if (!f) return detail::not_applicable(id, claim, "requires constant coefficients and lags");
  if (f->delay.empty()) return detail::not_applicable(id, claim, "requires a delay term");
  double p = 0.0, q = 0.0, S = 0.0, P_abs = 0.0;
  for (const auto& t : f->delay) {
    p += t.coef;
    P_abs += std::abs(t.coef);
  }
  for (const auto& t : f->neutral) {
    q += t.coef;
    S += std::abs(t.coef);
  }
  if (q == 1.0) return detail::not_applicable(id, claim, "requires q != 1");
  const double r = p / (1.0 - q);
  std::vector<Witness> w{detail::less("0 < p/(1-q)", 0.0, r), detail::less("sum |q_j| < 1", S, 1.0)};
  std::optional<double> omega;
  if (r > 0.0 && S < 1.0) {
    auto lhs_of = [&](double om) {
      double delayed = 0.0;
      for (const auto& t : f->delay) delayed += std::abs(t.coef) * std::abs(r * t.lag - om);
      double neutral = 0.0;
      for (const auto& t : f->neutral) neutral += std::abs(t.coef) * r * t.lag;
      return P_abs / (1.0 - S) / r * (delayed / r + neutral);
    };
    const auto pick = detail::scan_omega(lhs_of, 1.0 - S);
    w.push_back(detail::less("sum||p_k|| (1-sum||q_j||)^-1 ||1/r|| (...) < (1 - sum||q_j||)/sigma(omega)", pick.lhs,
                             pick.rhs, pick.exact));
    omega = pick.omega;
  }
  auto v = detail::decide(id, claim, {{"", std::move(w)}}, "constant-coefficient instance");
  v.omega = omega;
  return v;
}

inline CriterionVerdict check_c01(const NeutralEquation& eq) {
  const char* id = "C01";
  const auto claim = Claim::ExponentialStability;
  auto pr = detail::autonomous_pair(eq);
  if (!pr) return detail::not_applicable(id, claim, "requires x' - q x'(t-delta) + p x(t-tau) = 0 with constants");
  if (!(pr->p > 0.0)) return detail::not_applicable(id, claim, "requires p > 0");
  const double q = pr->q, aq = std::abs(q), p = pr->p;
  auto lhs_of = [&](double om) {
    return (1.0 - q) * std::abs(p * pr->tau + q * om - om) + p * aq * pr->delta + aq * (1.0 - aq);
  };
  const auto pick = detail::scan_omega(lhs_of, (1.0 - aq) * (1.0 - aq));
  auto v = detail::decide(id, claim,
                          {{"", {detail::less("(1-q)|p tau + q omega - omega| + p|q| delta + |q|(1-|q|) < (1-|q|)^2/sigma(omega)",
                                              pick.lhs, pick.rhs, pick.exact)}}});
  v.omega = pick.omega;
  return v;
}

inline CriterionVerdict check_c01star(const NeutralEquation& eq) {
  const char* id = "C01star";
  const auto claim = Claim::ExponentialStability;
  auto pr = detail::autonomous_pair(eq);
  if (!pr) return detail::not_applicable(id, claim, "requires x' - q x'(t-delta) + p x(t-tau) = 0 with constants");
  if (!(pr->p > 0.0)) return detail::not_applicable(id, claim, "requires p > 0");
  const double q = pr->q, aq = std::abs(q), p = pr->p;
  const double lhs = (1.0 - q) / (1.0 - aq) * std::abs(p * pr->tau - (1.0 - q) * kInvE);
  const double rhs = 1.0 - 2.0 * aq - p * aq * pr->delta / (1.0 - aq);
  auto v = detail::decide(id, claim, {{"", {detail::less("(1-q)/(1-|q|) |p tau - (1-q)/e| < 1 - 2|q| - p|q| delta/(1-|q|)", lhs, rhs)}}});
  v.omega = kInvE;
  return v;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

struct CriterionEntry {
  const char* id;
  Claim claim;
  CriterionVerdict (*check)(const NeutralEquation&);
};

inline const std::vector<CriterionEntry>& criterion_registry() {
  static const std::vector<CriterionEntry> registry{
      {"thm1", Claim::ExponentialStability, check_theorem1},
      {"thm2", Claim::ExponentialStability, check_theorem2},
      {"thm3", Claim::ExponentialStability, check_theorem3},
      {"thm4", Claim::ExponentialStability, check_theorem4},
      {"thm5", Claim::ExponentialStability, check_theorem5},
      {"thm6", Claim::ExponentialStability, check_theorem6},
      {"thm7", Claim::ExponentialStability, check_theorem7},
      {"cor1", Claim::ExponentialStability, check_corollary1},
      {"cor2a_a", Claim::ExponentialStability, check_corollary2a_a},
      {"cor2a_b", Claim::ExponentialStability, check_corollary2a_b},
      {"cor2b_A", Claim::ExponentialStability, check_corollary2b_A},
      {"cor2b_B", Claim::ExponentialStability, check_corollary2b_B},
      {"cor4", Claim::ExponentialStability, check_corollary4},
      {"cor5", Claim::ExponentialStability, check_corollary5},
      {"cor6", Claim::ExponentialStability, check_corollary6},
      {"cor7", Claim::ExponentialStability, check_corollary7},
      {"cor8", Claim::ExponentialStability, check_corollary8},
      {"thm2a", Claim::AsymptoticStability, check_theorem2a},
      {"cor3", Claim::AsymptoticStability, check_corollary3},
      {"P1", Claim::SolutionsTendToZero, check_p1},
      {"P2", Claim::AsymptoticStability, check_p2},
      {"P2a", Claim::AsymptoticStability, check_p2a},
      {"P3", Claim::SolutionsTendToZero, check_p3},
      {"P4", Claim::SolutionsTendToZero, check_p4},
      {"P5", Claim::AsymptoticStability, check_p5},
      {"P6", Claim::SolutionsTendToZero, check_p6},
      {"P7", Claim::L2Stability, check_p7},
      {"P8", Claim::ExponentialStability, check_p8},
      {"P9", Claim::ExponentialStability, check_p9},
      {"C01", Claim::ExponentialStability, check_c01},
      {"C01star", Claim::ExponentialStability, check_c01star},
  };
  return registry;
}

inline const CriterionEntry* find_criterion(const std::string& id) {
  for (const auto& e : criterion_registry()) {
    if (id == e.id) return &e;
  }
  return nullptr;
}

/// Runs one criterion by id. Ill-posed equations yield NotApplicable.
inline CriterionVerdict check_criterion(const NeutralEquation& eq, const std::string& id) {
  const auto* entry = find_criterion(id);
  if (!entry) throw std::invalid_argument("unknown criterion: " + id);
  if (!well_posed(eq)) return detail::not_applicable(entry->id, entry->claim, "ill-posed equation");
  try {
    auto v = entry->check(eq);
    v.criterion = entry->id;
    return v;
  } catch (const std::domain_error& e) {
    return detail::not_applicable(entry->id, entry->claim, e.what());
  }
}

inline int verdict_rank(Verdict v) { return static_cast<int>(v); }

/// Every registered criterion, ordered by claim strength, then verdict
/// (Satisfied first), then registry order.
inline std::vector<CriterionVerdict> evaluate_all(const NeutralEquation& eq,
                                                  const std::vector<std::string>& filter = {}) {
  std::vector<CriterionVerdict> out;
  for (const auto& e : criterion_registry()) {
    if (!filter.empty() && std::find(filter.begin(), filter.end(), e.id) == filter.end()) continue;
    out.push_back(check_criterion(eq, e.id));
  }
  std::stable_sort(out.begin(), out.end(), [](const CriterionVerdict& x, const CriterionVerdict& y) {
    if (x.claim != y.claim) return x.claim < y.claim;
    return verdict_rank(x.verdict) < verdict_rank(y.verdict);
  });
  return out;
}

inline bool satisfied(const CriterionVerdict& v) { return v.verdict == Verdict::Satisfied; }

}  // namespace ndde
