#pragma once

// Command implementations behind the ndde CLI. Each cmd_* returns the
// process exit code and writes only to the streams it is given.
//
// Exit codes: 0 success (for check: some criterion proves exponential
// stability), 2 when none does, 1 bad input.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ndde/criteria.hpp"
#include "ndde/equation.hpp"
#include "ndde/io.hpp"
#include "ndde/parallel.hpp"
#include "ndde/simulator.hpp"

namespace ndde {

struct GridAxis {
  std::string param;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 1;
};

struct RunConfig {
  std::string command;
  std::string eq_path;
  std::optional<double> t_end;  // default: 200 max(1, max lag)
  std::optional<double> dt;     // default: min(1e-3, min lag / 100), lag-aligned
  double tol = 1e-2;
  std::string param;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<GridAxis> grid;
  std::vector<std::string> criteria;  // empty: all
  std::string oracle;                 // "simulate", a criterion id, or ids joined by '+'
  std::string out;
  std::string format;  // json | csv
  std::string which;   // reproduce target
};

inline constexpr std::size_t kMaxSweepPoints = 10000;

// ---------------------------------------------------------------------------
// Defaults and argument parsing helpers
// ---------------------------------------------------------------------------

inline double default_t_end(const NeutralEquation& eq) {
  const double L = max_lag(eq);
  return eq.t0 + 200.0 * (std::isfinite(L) ? std::max(1.0, L) : 1.0);
}

/// min(1e-3, min lag / 100), shrunk so the smallest lag is a whole number
/// of steps.
inline double default_dt(const NeutralEquation& eq) {
  const auto L = min_positive_lag(eq);
  if (!L) return 1e-3;
  const double cap = std::min(1e-3, *L / 100.0);
  return *L / std::ceil(*L / cap - 1e-9);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(what + ": not a number: '" + s + "'");
  return v;
}

/// "lo:hi"
inline std::pair<double, double> parse_range(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw std::invalid_argument("range must look like lo:hi");
  const double lo = parse_number(parts[0], "range");
  const double hi = parse_number(parts[1], "range");
  if (!(lo < hi)) throw std::invalid_argument("range needs lo < hi");
  return {lo, hi};
}

/// "tau=0.1:3:30,sigma=0:3:30"
inline std::vector<GridAxis> parse_grid(const std::string& s) {
  std::vector<GridAxis> axes;
  for (const auto& item : split(s, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("grid axis must look like param=lo:hi:n");
    const auto parts = split(item.substr(eq + 1), ':');
    if (parts.size() != 3) throw std::invalid_argument("grid axis must look like param=lo:hi:n");
    GridAxis a{item.substr(0, eq), parse_number(parts[0], "grid"), parse_number(parts[1], "grid"), 0};
    const double n = parse_number(parts[2], "grid");
    if (!(n >= 1.0) || n != std::floor(n) || n > 1e6) throw std::invalid_argument("grid count must be a positive integer");
    a.n = static_cast<std::size_t>(n);
    if (a.hi < a.lo) throw std::invalid_argument("grid needs lo <= hi");
    axes.push_back(a);
  }
  if (axes.empty() || axes.size() > 2) throw std::invalid_argument("sweep takes one or two grid axes");
  return axes;
}

inline double axis_value(const GridAxis& a, std::size_t i) {
  if (a.n == 1) return a.lo;
  return a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.n - 1);
}

/// JSON pointer targeted by a parameter name. Short names address the first
/// terms; anything starting with '/' is taken as a pointer.
inline std::string param_pointer(const std::string& name) {
  if (!name.empty() && name.front() == '/') return name;
  if (name == "tau") return "/delay/0/h/tau";
  if (name == "sigma") return "/neutral/0/g/tau";
  if (name == "a") return "/neutral/0/a/c";
  if (name == "b") return "/delay/0/b/c";
  if (name == "lambda") return "/delay/0/h/lambda";
  if (name == "mu") return "/neutral/0/g/lambda";
  if (name == "t0") return "/t0";
  throw std::invalid_argument("unknown parameter '" + name + "' (use tau, sigma, a, b, lambda, mu, t0 or a JSON pointer)");
}

using SpecFamily = std::function<ProblemSpec(const std::vector<double>&)>;

/// Specs obtained by overwriting the given numeric fields of a base document.
inline SpecFamily spec_family(const json& base, const std::vector<std::string>& params) {
  std::vector<json::json_pointer> ptrs;
  for (const auto& p : params) {
    const auto text = param_pointer(p);
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(text);
    } catch (const json::exception&) {
      throw SpecError(text, "invalid parameter pointer");
    }
    if (!base.contains(ptr) || !base.at(ptr).is_number()) {
      throw SpecError(text, "parameter '" + p + "' does not address a number in the spec");
    }
    ptrs.push_back(ptr);
  }
  spec_from_json(base);
  return [base, ptrs](const std::vector<double>& values) {
    json doc = base;
    for (std::size_t i = 0; i < ptrs.size(); ++i) doc[ptrs[i]] = values[i];
    return spec_from_json(doc);
  };
}

inline void require_known_criteria(const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (!find_criterion(id)) throw std::invalid_argument("unknown criterion '" + id + "'");
  }
}

/// Satisfied for at least one of the '+'-joined ids.
inline std::function<bool(const NeutralEquation&)> criterion_union(const std::string& oracle) {
  auto ids = split(oracle, '+');
  if (ids.empty()) throw std::invalid_argument("empty oracle");
  require_known_criteria(ids);
  return [ids](const NeutralEquation& eq) {
    for (const auto& id : ids) {
      if (satisfied(check_criterion(eq, id))) return true;
    }
    return false;
  };
}

struct SimulationDefaults {
  std::optional<double> t_end;
  std::optional<double> dt;
};

inline Trajectory simulate_spec(const ProblemSpec& spec, SimulationDefaults d) {
  const double t_end = d.t_end.value_or(default_t_end(spec.eq));
  const double dt = d.dt.value_or(default_dt(spec.eq));
  return integrate(spec.eq, spec.history, t_end, dt, spec.forcing);
}

inline bool simulated_decaying(const ProblemSpec& spec, SimulationDefaults d) {
  return estimate_decay(simulate_spec(spec, d)).classification == DecayClass::Decaying;
}

inline std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Closed forms for the one-neutral one-delay constant family
//   x'(t) - a x'(t - sigma) + b x(t - tau) = 0
// ---------------------------------------------------------------------------

struct ThresholdRow {
  std::string label;
  std::string oracle;     // criterion id or '+'-joined ids
  double closed_form = 0.0;
  double bisected = 0.0;
};

/// Supremal tau for each criterion, solved from its inequalities by hand.
/// Valid for 0 < a < 1/2, b > 0; values are sigma-free.
inline std::vector<ThresholdRow> closed_form_thresholds(double a, double b) {
  const double p2 = (1.5 - 2.0 * a * (2.0 - a)) / b;
  const double p2a = a < 0.25 ? (1.5 - 2.0 * a) / b : std::sqrt(2.0 * (1.0 - 2.0 * a)) / b;
  const double p4 = std::min((2.0 - a / b - 4.0 * a * b) / (2.0 * b + a), (1.0 - 4.0 * a * a) / b);
  const double p8 = 1.0 / (b * kE);
  const double cor = (1.0 + kInvE - 2.0 * a) / b;
  return {{"P2", "P2", p2, 0.0},
          {"P2a", "P2a", p2a, 0.0},
          {"P4", "P4", p4, 0.0},
          {"P8", "P8", p8, 0.0},
          {"Cor1+Cor2b(B)", "cor1+cor2b_B", cor, 0.0}};
}

/// The tau-interval of the starred corollary for x' - q x'(t - delta) + p x(t - tau) = 0
/// (it fixes omega = 1/e). Empty when lo >= hi.
inline std::pair<double, double> c01star_interval(double p, double q, double delta) {
  const double aq = std::abs(q);
  const double center = (1.0 - q) * kInvE / p;
  const double half = (1.0 - 2.0 * aq - p * aq * delta / (1.0 - aq)) * (1.0 - aq) / ((1.0 - q) * p);
  return {center - half, center + half};
}

/// An open interval whose ends agree to rounding is empty.
inline bool interval_empty(double lo, double hi) { return hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)); }

inline NeutralEquation example1_equation(double tau, double sigma, double a = 1.0 / 3.0, double b = 1.0 / 3.0) {
  NeutralEquation eq;
  eq.neutral.push_back({CoefficientExpr::constant(a), DelayExpr::lag(sigma)});
  eq.delay.push_back({CoefficientExpr::constant(b), DelayExpr::lag(tau)});
  return eq;
}

/// Criterion thresholds in tau for the Example-1 family, by bisection on
/// each criterion oracle over [lo, hi].
inline std::vector<ThresholdRow> example1_thresholds(double sigma = 1.0, double tol = 1e-8, double lo = 1e-3,
                                                     double hi = 4.0) {
  auto rows = closed_form_thresholds(1.0 / 3.0, 1.0 / 3.0);
  parallel_for(rows.size(), [&](std::size_t i) {
    auto ok = criterion_union(rows[i].oracle);
    rows[i].bisected = bisect_threshold([&](double tau) { return ok(example1_equation(tau, sigma)); }, lo, hi, tol);
  });
  return rows;
}

/// Decaying/not-Decaying transition of the simulated Example-1 family.
inline double example1_simulated_threshold(double sigma, double tol = 1e-3, double lo = 0.5, double hi = 4.5,
                                           double t_end = 400.0, double dt = 5e-3) {
  return bisect_threshold(
      [&](double tau) {
        const auto tr = integrate(example1_equation(tau, sigma), HistorySpec{}, t_end, dt);
        return estimate_decay(tr).classification == DecayClass::Decaying;
      },
      lo, hi, tol);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const ThresholdError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

inline void print_findings(const NeutralEquation& eq, std::ostream& err) {
  for (const auto& f : validate(eq)) {
    if (f.severity != Severity::Info) err << to_string(f.severity) << ": " << f.message << "\n";
  }
}

inline std::string verdicts_csv(const std::vector<CriterionVerdict>& vs) {
  std::ostringstream os;
  os << "criterion,verdict,claim\n";
  for (const auto& v : vs) os << v.criterion << "," << to_string(v.verdict) << "," << to_string(v.claim) << "\n";
  return os.str();
}

}  // namespace detail

inline int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    require_known_criteria(cfg.criteria);
    const auto spec = load_spec(cfg.eq_path);
    detail::print_findings(spec.eq, err);
    const auto verdicts = evaluate_all(spec.eq, cfg.criteria);
    bool proven = false;
    for (const auto& v : verdicts) {
      proven = proven || (satisfied(v) && v.claim == Claim::ExponentialStability);
      out << std::left << std::setw(10) << v.criterion << std::setw(16) << to_string(v.verdict) << std::setw(22)
          << to_string(v.claim) << v.note << "\n";
    }
    if (!cfg.out.empty()) {
      const bool csv = cfg.format == "csv";
      detail::write_text(cfg.out, csv ? detail::verdicts_csv(verdicts) : to_json(verdicts).dump(2) + "\n");
    }
    return proven ? 0 : 2;
  });
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto spec = load_spec(cfg.eq_path);
    detail::print_findings(spec.eq, err);
    const auto tr = simulate_spec(spec, {cfg.t_end, cfg.dt});
    const auto decay = estimate_decay(tr);
    json summary = to_json(decay);
    summary["t_end"] = tr.t.back();
    summary["dt"] = tr.meta.dt;
    summary["points"] = tr.t.size();
    summary["x_end"] = tr.x.back();
    out << summary.dump(2) << "\n";
    if (!cfg.out.empty()) write_trajectory(cfg.out, tr, decay);
    return 0;
  });
}

inline int cmd_threshold(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (cfg.param.empty()) throw std::invalid_argument("threshold needs --param");
    const auto base = parse_json_text(read_file(cfg.eq_path));
    const auto family = spec_family(base, {cfg.param});
    std::function<bool(double)> oracle;
    if (cfg.oracle == "simulate") {
      SimulationDefaults d{cfg.t_end, cfg.dt};
      oracle = [&, d](double p) { return simulated_decaying(family({p}), d); };
    } else {
      auto ok = criterion_union(cfg.oracle);
      oracle = [&, ok](double p) { return ok(family({p}).eq); };
    }
    const double th = bisect_threshold(oracle, cfg.lo, cfg.hi, cfg.tol);
    json result{{"param", cfg.param}, {"oracle", cfg.oracle}, {"threshold", th}, {"tol", cfg.tol}};
    if (cfg.oracle == "simulate") result["note"] = "empirical: Decaying/not-Decaying transition of the decay estimator";
    out << result.dump(2) << "\n";
    return 0;
  });
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (cfg.grid.empty() || cfg.grid.size() > 2) throw std::invalid_argument("sweep takes one or two grid axes");
    std::size_t total = 1;
    for (const auto& a : cfg.grid) {
      if (a.n > kMaxSweepPoints) throw std::invalid_argument("grid too large");
      total *= a.n;
    }
    if (total > kMaxSweepPoints) throw std::invalid_argument("grid too large: " + std::to_string(total) + " points");

    std::vector<std::string> ids;
    bool simulate = false;
    for (const auto& item : split(cfg.oracle, ',')) {
      if (item == "simulate") simulate = true;
      else ids.push_back(item);
    }
    for (const auto& id : cfg.criteria) ids.push_back(id);
    require_known_criteria(ids);
    if (ids.empty() && !simulate) {
      for (const auto& e : criterion_registry()) ids.push_back(e.id);
    }

    const auto base = parse_json_text(read_file(cfg.eq_path));
    std::vector<std::string> names;
    for (const auto& a : cfg.grid) names.push_back(a.param);
    const auto family = spec_family(base, names);

    struct Row {
      std::vector<double> at;
      std::vector<std::string> cells;
    };
    std::vector<Row> rows(total);
    const std::size_t inner = cfg.grid.size() == 2 ? cfg.grid[1].n : 1;
    parallel_for(total, [&](std::size_t k) {
      Row& r = rows[k];
      r.at.push_back(axis_value(cfg.grid[0], k / inner));
      if (cfg.grid.size() == 2) r.at.push_back(axis_value(cfg.grid[1], k % inner));
      ProblemSpec spec;
      try {
        spec = family(r.at);
      } catch (const SpecError& e) {
        for (std::size_t i = 0; i < ids.size() + (simulate ? 1 : 0); ++i) r.cells.push_back("invalid");
        return;
      }
      for (const auto& id : ids) r.cells.push_back(to_string(check_criterion(spec.eq, id).verdict));
      if (simulate) {
        r.cells.push_back(well_posed(spec.eq) ? to_string(estimate_decay(simulate_spec(spec, {cfg.t_end, cfg.dt})).classification)
                                              : "refused");
      }
    });

    std::ostringstream os;
    if (cfg.format == "json") {
      json arr = json::array();
      for (const auto& r : rows) {
        json j;
        for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = r.at[i];
        for (std::size_t i = 0; i < ids.size(); ++i) j[ids[i]] = r.cells[i];
        if (simulate) j["simulated"] = r.cells.back();
        arr.push_back(j);
      }
      os << arr.dump(2) << "\n";
    } else {
      for (const auto& n : names) os << n << ",";
      for (const auto& id : ids) os << id << ",";
      if (simulate) os << "simulated,";
      std::string header = os.str();
      header.back() = '\n';
      os.str("");
      os << header;
      for (const auto& r : rows) {
        std::string line;
        for (double v : r.at) line += fmt_g(v, 9) + ",";
        for (const auto& c : r.cells) line += c + ",";
        line.back() = '\n';
        os << line;
      }
    }
    if (cfg.out.empty()) out << os.str();
    else detail::write_text(cfg.out, os.str());
    return 0;
  });
}

inline int reproduce_example1(std::ostream& out) {
  const auto rows = example1_thresholds();
  out << "Example 1: x'(t) - (1/3) x'(t - sigma) + (1/3) x(t - tau) = 0\n";
  out << "criterion, bisection, closed form\n";
  for (const auto& r : rows) {
    out << r.label << ", " << fmt_g(r.bisected, 5) << ", " << fmt_g(r.closed_form, 10) << "\n";
  }
  const std::vector<double> sigmas{0.0, 1.0, 2.0};
  std::vector<std::string> sim(sigmas.size());
  parallel_for(sigmas.size(), [&](std::size_t i) {
    try {
      sim[i] = fmt_g(example1_simulated_threshold(sigmas[i]), 4);
    } catch (const ThresholdError&) {
      sim[i] = "no transition in [0.5, 4.5]";
    }
  });
  out << "simulated threshold (empirical: Decaying/not-Decaying transition, t_end 400, dt 0.005)\n";
  out << "sigma, tau\n";
  for (std::size_t i = 0; i < sigmas.size(); ++i) out << fmt_g(sigmas[i], 3) << ", " << sim[i] << "\n";
  return 0;
}

inline int reproduce_example2(std::ostream& out) {
  const double cor = 1.0 + 3.0 * kInvE;
  out << "Example 2: C01star interval vs Cor1+Cor2b(B) bound tau < 1 + 3/e = " << fmt_g(cor, 10) << "\n";
  out << "sigma, lower, upper, empty, upper < 1 + 3/e\n";
  bool ordered = true;
  for (double sigma : {0.0, 0.5, 1.0, 2.0}) {
    const auto [lo, hi] = c01star_interval(1.0 / 3.0, 1.0 / 3.0, sigma);
    const bool better = hi < cor;
    ordered = ordered && better;
    out << fmt_g(sigma, 3) << ", " << fmt_g(lo, 10) << ", " << fmt_g(hi, 10) << ", " << (interval_empty(lo, hi) ? "yes" : "no")
        << ", " << (better ? "yes" : "no") << "\n";
  }
  out << "ordering holds: " << (ordered ? "yes" : "no") << "\n";
  return ordered ? 0 : 2;
}

inline int cmd_reproduce(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (cfg.which == "example1") return reproduce_example1(out);
    if (cfg.which == "example2") return reproduce_example2(out);
    throw std::invalid_argument("reproduce takes example1 or example2");
  });
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.command == "check") return cmd_check(cfg, out, err);
  if (cfg.command == "simulate") return cmd_simulate(cfg, out, err);
  if (cfg.command == "threshold") return cmd_threshold(cfg, out, err);
  if (cfg.command == "sweep") return cmd_sweep(cfg, out, err);
  if (cfg.command == "reproduce") return cmd_reproduce(cfg, out, err);
  err << "error: unknown command '" << cfg.command << "'\n";
  return 1;
}

}  // namespace ndde
