#pragma once

// JSON equation specs, verdict serialization and trajectory CSV export.
//
// Spec schema (unknown keys are rejected everywhere):
//   {"t0": 0,
//    "neutral": [{"a": <coef>, "g": <delay>}, ...],
//    "delay":   [{"b": <coef>, "h": <delay>}, ...],
//    "kernel":  {"kind": "exponential", "c": 1, "d": 1, "h": <delay>}
//             | {"kind": "uniform", "c": 0.5, "h": <delay>},      optional
//    "history": {"phi": <coef>, "psi": <coef>},                   optional
//    "forcing": <coef>}                                           optional
//   <coef>  = {"kind": "constant", "c"} | {"kind": "sinusoid", "c", "amp", "omega", "phase"?}
//           | {"kind": "piecewise", "period", "breaks", "values"} | {"kind": "reciprocal", "c"}
//   <delay> = {"kind": "lag", "tau"} | {"kind": "proportional", "lambda"}
//           | {"kind": "sinlag", "tau", "amp", "omega"}

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ndde/criteria.hpp"
#include "ndde/equation.hpp"
#include "ndde/funcmodel.hpp"
#include "ndde/simulator.hpp"

namespace ndde {

using json = nlohmann::json;

/// Malformed input. path is a JSON pointer, or "line L, column C" for
/// syntax errors.
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string path, const std::string& message)
      : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SpecError(path, "expected an object");
  return j;
}

inline void only_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw SpecError(child(path, key), "unknown key");
  }
}

inline double number(const json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) throw SpecError(child(path, key), "missing number");
  if (!it->is_number()) throw SpecError(child(path, key), "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw SpecError(child(path, key), "expected a finite number");
  return v;
}

inline double number_or(const json& j, const std::string& path, std::string_view key, double fallback) {
  return j.contains(std::string(key)) ? number(j, path, key) : fallback;
}

inline std::vector<double> numbers(const json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(std::string(key));
  const auto p = child(path, key);
  if (it == j.end()) throw SpecError(p, "missing array");
  if (!it->is_array()) throw SpecError(p, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& v = (*it)[i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) throw SpecError(child(p, i), "expected a finite number");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::string kind_of(const json& j, const std::string& path) {
  require_object(j, path);
  const auto it = j.find("kind");
  if (it == j.end() || !it->is_string()) throw SpecError(child(path, "kind"), "missing string");
  return it->get<std::string>();
}

// Factory preconditions surface as SpecError at the offending node.
template <typename Fn>
auto at_node(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw SpecError(path, e.what());
  }
}

}  // namespace detail

inline CoefficientExpr coefficient_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const auto kind = kind_of(j, path);
  if (kind == "constant") {
    only_keys(j, path, {"kind", "c"});
    return at_node(path, [&] { return CoefficientExpr::constant(number(j, path, "c")); });
  }
  if (kind == "sinusoid") {
    only_keys(j, path, {"kind", "c", "amp", "omega", "phase"});
    return at_node(path, [&] {
      return CoefficientExpr::sinusoid(number(j, path, "c"), number(j, path, "amp"), number(j, path, "omega"),
                                       number_or(j, path, "phase", 0.0));
    });
  }
  if (kind == "piecewise") {
    only_keys(j, path, {"kind", "period", "breaks", "values"});
    return at_node(path, [&] {
      return CoefficientExpr::piecewise(number(j, path, "period"), numbers(j, path, "breaks"),
                                        numbers(j, path, "values"));
    });
  }
  if (kind == "reciprocal") {
    only_keys(j, path, {"kind", "c"});
    return at_node(path, [&] { return CoefficientExpr::reciprocal(number(j, path, "c")); });
  }
  throw SpecError(child(path, "kind"), "unknown coefficient kind '" + kind + "'");
}

inline DelayExpr delay_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const auto kind = kind_of(j, path);
  if (kind == "lag") {
    only_keys(j, path, {"kind", "tau"});
    return at_node(path, [&] { return DelayExpr::lag(number(j, path, "tau")); });
  }
  if (kind == "proportional") {
    only_keys(j, path, {"kind", "lambda"});
    return at_node(path, [&] { return DelayExpr::proportional(number(j, path, "lambda")); });
  }
  if (kind == "sinlag") {
    only_keys(j, path, {"kind", "tau", "amp", "omega"});
    return at_node(path, [&] {
      return DelayExpr::sinlag(number(j, path, "tau"), number(j, path, "amp"), number(j, path, "omega"));
    });
  }
  throw SpecError(child(path, "kind"), "unknown delay kind '" + kind + "'");
}

inline DistributedKernel kernel_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const auto kind = kind_of(j, path);
  if (!j.contains("h")) throw SpecError(child(path, "h"), "missing delay");
  if (kind == "exponential") {
    only_keys(j, path, {"kind", "c", "d", "h"});
    auto h = delay_from_json(j["h"], child(path, "h"));
    return at_node(path, [&] { return DistributedKernel::exponential(number(j, path, "c"), number(j, path, "d"), h); });
  }
  if (kind == "uniform") {
    only_keys(j, path, {"kind", "c", "h"});
    auto h = delay_from_json(j["h"], child(path, "h"));
    return at_node(path, [&] { return DistributedKernel::uniform(number(j, path, "c"), h); });
  }
  throw SpecError(child(path, "kind"), "unknown kernel kind '" + kind + "'");
}

inline ProblemSpec spec_from_json(const json& j) {
  using namespace detail;
  const std::string root;
  require_object(j, root);
  only_keys(j, root, {"t0", "neutral", "delay", "kernel", "history", "forcing"});
  ProblemSpec spec;
  spec.eq.t0 = number_or(j, root, "t0", 0.0);

  auto terms = [&](std::string_view key, auto&& each) {
    const auto it = j.find(std::string(key));
    if (it == j.end()) return;
    const auto p = child(root, key);
    if (!it->is_array()) throw SpecError(p, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) each((*it)[i], child(p, i));
  };
  terms("neutral", [&](const json& t, const std::string& p) {
    require_object(t, p);
    only_keys(t, p, {"a", "g"});
    if (!t.contains("a")) throw SpecError(child(p, "a"), "missing coefficient");
    if (!t.contains("g")) throw SpecError(child(p, "g"), "missing delay");
    spec.eq.neutral.push_back({coefficient_from_json(t["a"], child(p, "a")), delay_from_json(t["g"], child(p, "g"))});
  });
  terms("delay", [&](const json& t, const std::string& p) {
    require_object(t, p);
    only_keys(t, p, {"b", "h"});
    if (!t.contains("b")) throw SpecError(child(p, "b"), "missing coefficient");
    if (!t.contains("h")) throw SpecError(child(p, "h"), "missing delay");
    spec.eq.delay.push_back({coefficient_from_json(t["b"], child(p, "b")), delay_from_json(t["h"], child(p, "h"))});
  });
  if (j.contains("kernel")) spec.eq.kernel = kernel_from_json(j["kernel"], "/kernel");
  if (j.contains("history")) {
    const auto& h = require_object(j["history"], "/history");
    only_keys(h, "/history", {"phi", "psi"});
    if (h.contains("phi")) spec.history.phi = coefficient_from_json(h["phi"], "/history/phi");
    if (h.contains("psi")) spec.history.psi = coefficient_from_json(h["psi"], "/history/psi");
  }
  if (j.contains("forcing")) spec.forcing = coefficient_from_json(j["forcing"], "/forcing");
  return spec;
}

/// Parses spec text; syntax errors report line and column.
inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SpecError("line " + std::to_string(line) + ", column " + std::to_string(col), "JSON syntax error");
  }
}

inline ProblemSpec parse_spec(const std::string& text) { return spec_from_json(parse_json_text(text)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProblemSpec load_spec(const std::string& path) { return parse_spec(read_file(path)); }

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

inline json to_json(const CoefficientExpr& f) {
  return std::visit(detail::overloaded{
                        [](const Constant& c) { return json{{"kind", "constant"}, {"c", c.c}}; },
                        [](const Sinusoid& s) {
                          return json{{"kind", "sinusoid"}, {"c", s.c}, {"amp", s.amp}, {"omega", s.omega},
                                      {"phase", s.phase}};
                        },
                        [](const PiecewisePeriodic& p) {
                          return json{{"kind", "piecewise"}, {"period", p.period}, {"breaks", p.breaks},
                                      {"values", p.values}};
                        },
                        [](const Reciprocal& r) { return json{{"kind", "reciprocal"}, {"c", r.c}}; },
                    },
                    f.form());
}

inline json to_json(const DelayExpr& h) {
  return std::visit(detail::overloaded{
                        [](const ConstantLag& l) { return json{{"kind", "lag"}, {"tau", l.tau}}; },
                        [](const Proportional& p) { return json{{"kind", "proportional"}, {"lambda", p.lambda}}; },
                        [](const SinusoidLag& s) {
                          return json{{"kind", "sinlag"}, {"tau", s.tau}, {"amp", s.amp}, {"omega", s.omega}};
                        },
                    },
                    h.form());
}

inline json to_json(const DistributedKernel& k) {
  json j = std::visit(detail::overloaded{
                          [](const ExponentialKernel& e) { return json{{"kind", "exponential"}, {"c", e.c}, {"d", e.d}}; },
                          [](const UniformKernel& u) { return json{{"kind", "uniform"}, {"c", u.c}}; },
                      },
                      k.form);
  j["h"] = to_json(k.h);
  return j;
}

/// Every field written explicitly, defaults included.
inline json to_json(const ProblemSpec& spec) {
  json j;
  j["t0"] = spec.eq.t0;
  j["neutral"] = json::array();
  for (const auto& n : spec.eq.neutral) j["neutral"].push_back({{"a", to_json(n.a)}, {"g", to_json(n.g)}});
  j["delay"] = json::array();
  for (const auto& d : spec.eq.delay) j["delay"].push_back({{"b", to_json(d.b)}, {"h", to_json(d.h)}});
  if (spec.eq.kernel) j["kernel"] = to_json(*spec.eq.kernel);
  j["history"] = {{"phi", to_json(spec.history.phi)}, {"psi", to_json(spec.history.psi)}};
  if (spec.forcing) j["forcing"] = to_json(*spec.forcing);
  return j;
}

inline std::string serialize(const ProblemSpec& spec) { return to_json(spec).dump(2) + "\n"; }

// Non-finite witness values are written as strings ("inf", "-inf", "nan").
inline json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline json to_json(const CriterionVerdict& v) {
  json j{{"criterion", v.criterion}, {"verdict", to_string(v.verdict)}, {"claim", to_string(v.claim)}};
  j["witnesses"] = json::array();
  for (const auto& w : v.witnesses) {
    j["witnesses"].push_back({{"label", w.label}, {"lhs", number_json(w.lhs)}, {"rhs", number_json(w.rhs)},
                              {"relation", to_string(w.relation)}, {"exact", w.exact}});
  }
  if (v.subset) j["subset"] = *v.subset;
  if (v.omega) j["omega"] = *v.omega;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

inline json to_json(const std::vector<CriterionVerdict>& vs) {
  json j = json::array();
  for (const auto& v : vs) j.push_back(to_json(v));
  return j;
}

inline json to_json(const DecayEstimate& d) {
  return {{"gamma_hat", number_json(d.gamma_hat)},
          {"M_hat", number_json(d.M_hat)},
          {"r2", d.r2},
          {"classification", to_string(d.classification)},
          {"windows_used", d.windows_used}};
}

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x,xdot\n";
  char buf[96];
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", tr.t[i], tr.x[i], tr.xdot[i]);
    os << buf;
  }
}

/// Writes the CSV to path and the decay estimate to path + ".decay.json".
inline void write_trajectory(const std::string& path, const Trajectory& tr, const DecayEstimate& decay) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot write " + path);
  write_csv(csv, tr);
  std::ofstream side(path + ".decay.json");
  if (!side) throw std::runtime_error("cannot write " + path + ".decay.json");
  json meta = to_json(decay);
  meta["method"] = tr.meta.method;
  meta["dt"] = tr.meta.dt;
  meta["eta"] = tr.meta.eta;
  meta["fingerprint"] = tr.meta.fingerprint;
  side << meta.dump(2) << "\n";
}

}  // namespace ndde
