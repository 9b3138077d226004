#pragma once

// Spec files, reports and curve emitters behind the substspec command line
// tool. Needs nlohmann/json (vendor/json.hpp) on the include path.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "substspec.hpp"

namespace substspec::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kOk = 0, kInvariantFailure = 1, kResourceCap = 2, kParseFailure = 3 };

/// 12 significant digits, as used in every CSV column.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// ---------------------------------------------------------------- spec files

namespace detail {

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

}  // namespace detail

/// Parses a JSON spec of the form
///   {"alphabet": ["a","b"], "rules": {"a": [{"word": "ab", "prob": 0.5}, ...], ...},
///    "label": "optional"}
/// and validates it. Malformed documents raise ParseError, well-formed ones
/// that describe an invalid substitution raise ValidationError.
inline RandomSubstitution parse_spec_text(const std::string& text,
                                          const std::string& source = "<spec>") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + detail::line_context(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
  const json& alphabet = detail::field(doc, "alphabet", source);
  const json& rules = detail::field(doc, "rules", source);
  if (!alphabet.is_array()) throw ParseError(source + ": alphabet: expected an array");
  if (!rules.is_object()) throw ParseError(source + ": rules: expected an object");

  RandomSubstitution s;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    const auto& name = alphabet[i];
    if (!name.is_string() || name.get<std::string>().size() != 1)
      throw ParseError(source + ": alphabet[" + std::to_string(i) +
                       "]: expected a one-character string");
    s.names.push_back(name.get<std::string>()[0]);
  }
  if (doc.contains("label")) {
    if (!doc["label"].is_string()) throw ParseError(source + ": label: expected a string");
    s.label = doc["label"].get<std::string>();
  }
  for (auto it = rules.begin(); it != rules.end(); ++it)
    if (it.key().size() != 1 || s.letter_index(it.key()[0]) < 0)
      throw ValidationError(source + ": rules." + it.key() + ": not a letter of the alphabet");

  for (char name : s.names) {
    const std::string key(1, name);
    const std::string where = source + ": rules." + key;
    if (!rules.contains(key)) throw ValidationError(where + ": missing rule");
    const json& list = rules.at(key);
    if (!list.is_array()) throw ParseError(where + ": expected an array");
    std::vector<Realisation> rs;
    for (std::size_t j = 0; j < list.size(); ++j) {
      const std::string at = where + "[" + std::to_string(j) + "]";
      const json& word = detail::field(list[j], "word", at);
      const json& prob = detail::field(list[j], "prob", at);
      if (!word.is_string()) throw ParseError(at + ".word: expected a string");
      if (!prob.is_number()) throw ParseError(at + ".prob: expected a number");
      Word w;
      try {
        w = s.encode(word.get<std::string>());
      } catch (const ValidationError& e) {
        throw ValidationError(at + ".word: " + e.what());
      }
      rs.push_back({std::move(w), prob.get<double>()});
    }
    s.rules.push_back(std::move(rs));
  }
  const auto rep = validate(s);
  if (!rep.ok()) throw ValidationError(source + ": " + rep.violations.front());
  return s;
}

inline RandomSubstitution parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str(), path.string());
}

inline json spec_to_json(const RandomSubstitution& s) {
  json doc;
  json alphabet = json::array();
  for (char c : s.names) alphabet.push_back(std::string(1, c));
  doc["alphabet"] = alphabet;
  json rules = json::object();
  for (std::size_t a = 0; a < s.size(); ++a) {
    json list = json::array();
    for (const auto& r : s.rules[a]) list.push_back({{"word", s.decode(r.word)}, {"prob", r.prob}});
    rules[std::string(1, s.names[a])] = list;
  }
  doc["rules"] = rules;
  if (!s.label.empty()) doc["label"] = s.label;
  return doc;
}

/// Doubles are printed in shortest round-trip form, so parsing the output
/// gives back identical probabilities.
inline std::string emit_spec(const RandomSubstitution& s) { return spec_to_json(s).dump(2) + "\n"; }

/// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

// ------------------------------------------------------------------- analyze

struct AnalyzeOptions {
  int depth = 3;
  int recog_max = 12;
  std::size_t cap = kDefaultCap;
};

inline bool is_deterministic(const RandomSubstitution& s) {
  for (const auto& rule : s.rules)
    if (rule.size() != 1) return false;
  return true;
}

namespace detail {

inline json verdict_json(const std::optional<Verdict>& v, const RandomSubstitution& s) {
  if (!v) return nullptr;
  json j;
  j["verdict"] = v->verified() ? "verified" : "refuted";
  j["depth"] = v->depth;
  if (!v->verified()) {
    if (v->letter >= 0) j["letter"] = std::string(1, s.names.at(static_cast<std::size_t>(v->letter)));
    j["u"] = s.decode(v->u);
    j["v"] = s.decode(v->v);
    if (!v->witness.empty()) j["witness"] = s.decode(v->witness);
  }
  if (!v->note.empty()) j["note"] = v->note;
  return j;
}

}  // namespace detail

/// Runs every structural check and collects the results in one document.
inline json analysis_report(const RandomSubstitution& s, const AnalyzeOptions& opt = {}) {
  json r;
  r["schema_version"] = kSchemaVersion;
  r["spec"] = spec_to_json(s);
  const auto val = validate(s);
  r["validation"] = {{"ok", val.ok()}, {"violations", val.violations}, {"sum_tolerance", 1e-12}};
  if (!val.ok()) return r;

  const Matrix m = substitution_matrix(s);
  const bool primitive = is_primitive(m);
  r["primitivity"] = {{"primitive", primitive}};
  if (!primitive) return r;
  const PerronData pd = perron_eigen(m);
  r["perron"] = {{"lambda", pd.lambda}, {"right", pd.right}, {"tolerance", 1e-13}};

  const ConditionReport rep = assess_conditions(s, opt.depth, opt.recog_max, opt.cap);
  json c;
  c["compatible"] = rep.compatible;
  c["constant_lengths"] = has_constant_lengths(s);
  c["depth"] = rep.depth;
  c["dsc"] = detail::verdict_json(rep.dsc, s);
  c["isc"] = detail::verdict_json(rep.isc, s);
  c["ipp"] = detail::verdict_json(rep.ipp, s);
  json rec;
  rec["status"] = rep.recognisable() ? "found" : "unverified";
  rec["tried_up_to"] = rep.recognisability.tried_up_to;
  rec["max_radius"] = rep.recog_max;
  if (rep.recognisability.table) rec["radius"] = rep.recognisability.table->radius;
  c["recognisability"] = rec;
  r["conditions"] = c;

  const Regime regime = strongest_regime(rep);
  r["regime"] = regime_name(regime);
  if (is_deterministic(s))
    r["note"] = "deterministic substitution: entropy 0 and the closed-form spectrum is identically 0";

  InflationSpectrum spec(s, pd, opt.cap);
  json ent;
  if (regime != Regime::BoundsOnly) {
    const ClosedFormSpectrum cf(s, pd, regime_factor(regime, pd.lambda));
    ent["source"] = "closed-form";
    ent["factor"] = cf.factor();
    ent["topological"] = -cf.tau(0.0);
    ent["measure"] = cf.dtau(1.0);
    ent["tolerance"] = 1e-12;
  } else if (rep.compatible) {
    const auto top = topological_entropy(spec, 1);
    const auto mea = measure_entropy(spec, 1);
    ent["source"] = "level-1 bracket";
    ent["topological"] = {{"lower", top.raw.back()}, {"upper", top.normalised.back()}};
    ent["measure"] = {{"lower", mea.raw.back()}, {"upper", mea.normalised.back()}};
    ent["k"] = 1;
  }
  r["entropy"] = ent;

  if (regime == Regime::Recognisable) {
    const auto ar = alpha_range(spec, rep);
    r["alpha_range"] = {{"alpha_min", ar.alpha_min},   {"alpha_max", ar.alpha_max},
                        {"f_alpha_min", ar.f_min},     {"f_alpha_max", ar.f_max},
                        {"unscaled_min", ar.unscaled_min}, {"unscaled_max", ar.unscaled_max}};
  } else {
    r["alpha_range"] = nullptr;
  }
  return r;
}

// ------------------------------------------------------------------ spectrum

struct SpectrumOptions {
  double q_min = -6.0;
  double q_max = 6.0;
  double q_step = 0.05;
  std::vector<int> ks{3, 5, 7};
  AnalyzeOptions analyze;
};

struct CsvOutput {
  std::string text;
  std::vector<std::string> notes;  // per-column problems, also written as # lines
};

/// Columns q, lower_k*, upper_k* and closed_form when a regime applies.
/// A level that exceeds the cap leaves its columns empty.
inline CsvOutput spectrum_csv(const RandomSubstitution& s, const SpectrumOptions& opt) {
  const PerronData pd = perron_eigen(substitution_matrix(s));
  InflationSpectrum spec(s, pd, opt.analyze.cap);
  const auto rep = assess_conditions(s, opt.analyze.depth, opt.analyze.recog_max, opt.analyze.cap);
  const Regime regime = strongest_regime(rep);
  const auto qs = grid(opt.q_min, opt.q_max, opt.q_step);
  CsvOutput out;

  std::vector<std::vector<std::optional<TauBracket>>> cols;
  for (int k : opt.ks) {
    std::vector<std::optional<TauBracket>> col(qs.size());
    try {
      for (std::size_t i = 0; i < qs.size(); ++i) col[i] = tau_bounds(spec, k, qs[i]);
    } catch (const CapExceeded& e) {
      col.assign(qs.size(), std::nullopt);
      out.notes.push_back("k=" + std::to_string(k) + ": " + e.what());
    }
    cols.push_back(std::move(col));
  }
  std::optional<ClosedFormSpectrum> cf;
  if (regime != Regime::BoundsOnly) cf.emplace(s, pd, regime_factor(regime, pd.lambda));

  std::string& t = out.text;
  t += "q";
  for (int k : opt.ks) t += ",lower_k" + std::to_string(k) + ",upper_k" + std::to_string(k);
  if (cf) t += ",closed_form";
  t += "\n";
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const double q = std::abs(qs[i]) < 1e-12 ? 0.0 : qs[i];
    t += fmt(q);
    for (const auto& col : cols) {
      t += ",";
      if (col[i]) t += fmt(col[i]->lower);
      t += ",";
      if (col[i] && col[i]->upper) t += fmt(*col[i]->upper);
    }
    if (cf) {
      t += ",";
      if (q >= 0.0 || regime == Regime::Recognisable) t += fmt(cf->tau(q));
    }
    t += "\n";
  }
  for (const auto& n : out.notes) t += "# " + n + "\n";
  return out;
}

// ----------------------------------------------------------------- conjugate

struct ConjugateOptions {
  std::optional<double> alpha_min, alpha_max;  // default: the support of f
  double alpha_step = 0.0;                     // default: 200 intervals
  AnalyzeOptions analyze;
};

/// (alpha, f) rows for a recognisable substitution; rows where f = -inf are
/// dropped and counted in a trailing comment.
inline CsvOutput conjugate_csv(const RandomSubstitution& s, const ConjugateOptions& opt) {
  const PerronData pd = perron_eigen(substitution_matrix(s));
  InflationSpectrum spec(s, pd, opt.analyze.cap);
  const auto rep = assess_conditions(s, opt.analyze.depth, opt.analyze.recog_max, opt.analyze.cap);
  const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::Recognisable, true);
  const double lo = std::max(opt.alpha_min.value_or(cf.alpha_min()), cf.alpha_min());
  const double hi = std::min(opt.alpha_max.value_or(cf.alpha_max()), cf.alpha_max());
  std::vector<double> alphas;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    alphas.push_back(lo);
  } else {
    const double step = opt.alpha_step > 0.0 ? opt.alpha_step : (hi - lo) / 200.0;
    alphas = grid(lo, hi, step);
    alphas.back() = std::min(alphas.back(), hi);
  }
  CsvOutput out;
  out.text = "alpha,f\n";
  std::size_t omitted = 0;
  for (double a : alphas) {
    const double f = cf.conjugate(a);
    if (f == kNegInf) {
      ++omitted;
      continue;
    }
    out.text += fmt(a) + "," + fmt(f) + "\n";
  }
  out.text += "# omitted " + std::to_string(omitted) + " rows with f = -inf\n";
  return out;
}

// -------------------------------------------------------------------- oracle

struct OracleOptions {
  std::size_t n = 8;
  std::vector<double> qs{0.0, 0.5, 2.0};
  int bound_k = 4;
  std::size_t samples = 0;  // Monte Carlo comparison when > 0
  int mc_k = 12;
  std::uint64_t seed = 1;
  std::optional<double> min_bound;
  AnalyzeOptions analyze;
};

struct OracleOutput {
  std::string comparison;  // q, empirical_tau, lower, upper, closed_form
  std::string table;       // word, mu[, mc_freq, mc_se]
  json summary;
  bool invariants_ok = true;
};

inline OracleOutput run_oracle(const RandomSubstitution& s, const OracleOptions& opt) {
  const PerronData pd = perron_eigen(substitution_matrix(s));
  const FrequencyTable t = frequency_table(s, pd, opt.n);
  std::optional<FrequencyTable> shorter;
  if (opt.n > 1) shorter = marginal_prefix(t);
  const auto violations = table_violations(t, pd, shorter ? &*shorter : nullptr, 1e-8);

  OracleOutput out;
  out.invariants_ok = violations.empty();
  json& sm = out.summary;
  sm["schema_version"] = kSchemaVersion;
  sm["n"] = t.n;
  sm["words"] = t.words.size();
  sm["iterations"] = t.iterations;
  sm["residual"] = t.residual;
  sm["working_length"] = t.working_length;
  sm["violations"] = violations;
  sm["invariant_tolerance"] = 1e-8;
  if (!t.mu.empty()) {
    const auto mc = min_cylinder_check(t, opt.min_bound.value_or(0.0));
    sm["min_mu"] = mc.min_value;
    sm["argmin"] = s.decode(mc.argmin);
    if (opt.min_bound) {
      sm["min_bound"] = *opt.min_bound;
      sm["min_bound_holds"] = mc.holds;
      if (!mc.holds) out.invariants_ok = false;
    }
  }

  // Bounds and closed form need compatibility; the table only constant lengths.
  const bool compatible = check_compatibility(s).compatible;
  std::optional<InflationSpectrum> spec;
  std::optional<ClosedFormSpectrum> cf;
  Regime regime = Regime::BoundsOnly;
  if (compatible) {
    spec.emplace(s, pd, opt.analyze.cap);
    const auto rep = assess_conditions(s, opt.analyze.depth, opt.analyze.recog_max, opt.analyze.cap);
    regime = strongest_regime(rep);
    if (regime != Regime::BoundsOnly) cf.emplace(s, pd, regime_factor(regime, pd.lambda));
  }
  sm["regime"] = regime_name(regime);
  out.comparison = "q,empirical_tau,lower_k" + std::to_string(opt.bound_k) + ",upper_k" +
                   std::to_string(opt.bound_k) + ",closed_form\n";
  for (double q : opt.qs) {
    out.comparison += fmt(q) + "," + fmt(empirical_tau(t, q)) + ",";
    if (spec) {
      const auto b = tau_bounds(*spec, opt.bound_k, q);
      out.comparison += fmt(b.lower) + ",";
      if (b.upper) out.comparison += fmt(*b.upper);
    } else {
      out.comparison += ",";
    }
    out.comparison += ",";
    if (cf && (q >= 0.0 || regime == Regime::Recognisable)) out.comparison += fmt(cf->tau(q));
    out.comparison += "\n";
  }

  std::optional<MonteCarloResult> mc;
  if (opt.samples > 0) {
    mc = monte_carlo_frequencies(s, pd, std::nullopt, opt.mc_k, opt.n, opt.samples, opt.seed);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.words.size(); ++i) {
      const auto* e = mc->find(t.words[i]);
      if (!e) continue;
      if (e->se > 0.0) worst = std::max(worst, std::abs(e->freq - t.mu[i]) / e->se);
    }
    sm["monte_carlo"] = {{"samples", opt.samples}, {"k", opt.mc_k}, {"seed", opt.seed},
                         {"block_level", mc->block_level}, {"worst_z", worst}};
  }
  out.table = mc ? "word,mu,mc_freq,mc_se\n" : "word,mu\n";
  for (std::size_t i = 0; i < t.words.size(); ++i) {
    out.table += s.decode(t.words[i]) + "," + fmt(t.mu[i]);
    if (mc) {
      const auto* e = mc->find(t.words[i]);
      out.table += "," + fmt(e ? e->freq : 0.0) + "," + fmt(e ? e->se : 0.0);
    }
    out.table += "\n";
  }
  return out;
}

// ------------------------------------------------------------------- entropy

inline json entropy_sequence_json(const EntropySequence& e) {
  return {{"raw", e.raw},
          {"normalised", e.normalised},
          {"estimate", e.estimate},
          {"monotone", e.monotone},
          {"worst_drop", e.worst_drop},
          {"monotone_tolerance", 1e-12}};
}

inline json entropy_report(const RandomSubstitution& s, int k_max, const AnalyzeOptions& opt = {}) {
  const PerronData pd = perron_eigen(substitution_matrix(s));
  InflationSpectrum spec(s, pd, opt.cap);
  json r;
  r["schema_version"] = kSchemaVersion;
  r["lambda"] = pd.lambda;
  r["k_max"] = k_max;
  r["topological"] = entropy_sequence_json(topological_entropy(spec, k_max));
  r["measure"] = entropy_sequence_json(measure_entropy(spec, k_max));
  if (check_compatibility(s).compatible) {
    const auto rep = assess_conditions(s, opt.depth, opt.recog_max, opt.cap);
    const Regime regime = strongest_regime(rep);
    r["regime"] = regime_name(regime);
    if (regime != Regime::BoundsOnly) {
      const ClosedFormSpectrum cf(s, pd, regime_factor(regime, pd.lambda));
      r["closed_form"] = {{"topological", -cf.tau(0.0)}, {"measure", cf.dtau(1.0)}};
    }
  }
  return r;
}

// ------------------------------------------------------------------- errors

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kParseFailure;
  if (dynamic_cast<const CapExceeded*>(&e)) return kResourceCap;
  return kInvariantFailure;
}

inline const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const CapExceeded*>(&e)) return "CapExceeded";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const NotPrimitive*>(&e)) return "NotPrimitive";
  if (dynamic_cast<const NonExpanding*>(&e)) return "NonExpanding";
  if (dynamic_cast<const NotCompatible*>(&e)) return "NotCompatible";
  if (dynamic_cast<const NegativeQWithoutRecognisability*>(&e)) return "NegativeQWithoutRecognisability";
  if (dynamic_cast<const ConditionNotEstablished*>(&e)) return "ConditionNotEstablished";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const WindowMissing*>(&e)) return "WindowMissing";
  return "Error";
}

inline json error_json(const std::exception& e) {
  return {{"schema_version", kSchemaVersion},
          {"error", {{"type", error_kind(e)}, {"message", e.what()}, {"exit_code", exit_code_for(e)}}}};
}

}  // namespace substspec::cli
