#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conditions.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "spectral.hpp"
#include "substitution.hpp"

namespace substspec {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Caches the exact level-k distributions of a substitution and evaluates
/// phi_k and rho_k from them.
class InflationSpectrum {
 public:
  InflationSpectrum(RandomSubstitution s, std::size_t cap = kDefaultCap)
      : subst_(std::move(s)), perron_(perron_eigen(substitution_matrix(subst_))), cap_(cap) {}

  InflationSpectrum(RandomSubstitution s, PerronData pd, std::size_t cap = kDefaultCap)
      : subst_(std::move(s)), perron_(std::move(pd)), cap_(cap) {}

  const RandomSubstitution& substitution() const noexcept { return subst_; }
  const PerronData& perron() const noexcept { return perron_; }
  double lambda() const noexcept { return perron_.lambda; }

  const std::vector<WordDistribution>& level(int k) {
    if (k < 1) throw ValidationError("level must be positive");
    if (static_cast<int>(levels_.size()) < k) check_predicted_support(subst_, perron_, k, cap_);
    if (levels_.empty()) levels_.push_back(rule_distributions(subst_));
    while (static_cast<int>(levels_.size()) < k)
      levels_.push_back(next_level(subst_, levels_.back(), cap_));
    return levels_[k - 1];
  }

  /// -sum_a R_a log sum_{s in theta^k(a)} P[theta^k(a) = s]^q
  double phi(int k, double q) {
    const auto& lv = level(k);
    double out = 0.0;
    for (std::size_t a = 0; a < lv.size(); ++a) out -= perron_.right[a] * lv[a].log_sum_pow(q);
    return out;
  }

  /// -sum_a R_a sum_s P log P at level k.
  double rho(int k) {
    const auto& lv = level(k);
    double out = 0.0;
    for (std::size_t a = 0; a < lv.size(); ++a) out += perron_.right[a] * lv[a].entropy();
    return out;
  }

  /// lambda^{-k} phi_k(q)
  double normalised_phi(int k, double q) { return phi(k, q) / std::pow(lambda(), k); }

 private:
  RandomSubstitution subst_;
  PerronData perron_;
  std::size_t cap_;
  std::vector<std::vector<WordDistribution>> levels_;
};

inline double phi_k(InflationSpectrum& spec, int k, double q) { return spec.phi(k, q); }

struct TauBracket {
  double lower = 0.0;
  std::optional<double> upper;
};

/// Brackets tau(q) from phi_k(q) by the three regimes 0<=q<=1, q>=1, q<0.
inline TauBracket bracket_from_phi(double phi, double lambda, int k, double q) {
  const double lk = std::pow(lambda, k);
  const double a = phi / (lk - 1.0), b = phi / lk;
  TauBracket t;
  if (q < 0.0) {
    t.lower = a;
  } else if (q <= 1.0) {
    t.lower = a;
    t.upper = b;
  } else {
    t.lower = b;
    t.upper = a;
  }
  return t;
}

inline TauBracket tau_bounds(InflationSpectrum& spec, int k, double q) {
  if (!check_compatibility(spec.substitution()).compatible)
    throw NotCompatible("bounds need a compatible substitution");
  return bracket_from_phi(spec.phi(k, q), spec.lambda(), k, q);
}

enum class Regime { DSC, ISC_IPP, Recognisable, BoundsOnly };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::DSC: return "dsc";
    case Regime::ISC_IPP: return "isc-ipp";
    case Regime::Recognisable: return "recognisable";
    case Regime::BoundsOnly: return "bounds-only";
  }
  return "?";
}

/// Strongest closed-form regime supported by the report.
inline Regime strongest_regime(const ConditionReport& rep) {
  if (!rep.primitive || !rep.compatible) return Regime::BoundsOnly;
  if (rep.recognisable()) return Regime::Recognisable;
  if (rep.dsc_verified()) return Regime::DSC;
  if (rep.isc_ipp_verified()) return Regime::ISC_IPP;
  return Regime::BoundsOnly;
}

inline void require_regime(const ConditionReport& rep, Regime regime, double q) {
  switch (regime) {
    case Regime::DSC:
      if (!rep.dsc_verified()) throw ConditionNotEstablished("disjoint set condition not verified");
      break;
    case Regime::ISC_IPP:
      if (!rep.isc_ipp_verified())
        throw ConditionNotEstablished("identical set condition with identical probabilities not verified");
      break;
    case Regime::Recognisable:
      if (!rep.recognisable()) throw ConditionNotEstablished("recognisability not established");
      return;
    case Regime::BoundsOnly:
      throw ConditionNotEstablished("no closed form without a structural condition");
  }
  if (q < 0.0) throw NegativeQWithoutRecognisability("closed form for q < 0 needs recognisability");
}

/// 1/(lambda-1) for DSC and recognisable substitutions, 1/lambda under ISC+IPP.
inline double regime_factor(Regime regime, double lambda) {
  return regime == Regime::ISC_IPP ? 1.0 / lambda : 1.0 / (lambda - 1.0);
}

inline double closed_form_tau(InflationSpectrum& spec, const ConditionReport& rep, Regime regime,
                              double q) {
  require_regime(rep, regime, q);
  return spec.phi(1, q) * regime_factor(regime, spec.lambda());
}

struct EntropySequence {
  std::vector<double> raw;         // divided by lambda^k
  std::vector<double> normalised;  // divided by lambda^k - 1
  double estimate = 0.0;           // normalised.back()
  bool monotone = true;            // raw sequence nondecreasing within 1e-12
  double worst_drop = 0.0;
};

namespace detail {

inline EntropySequence make_entropy_sequence(const std::vector<double>& values, double lambda) {
  EntropySequence e;
  for (std::size_t k = 1; k <= values.size(); ++k) {
    const double lk = std::pow(lambda, static_cast<double>(k));
    e.raw.push_back(values[k - 1] / lk);
    e.normalised.push_back(values[k - 1] / (lk - 1.0));
  }
  for (std::size_t i = 1; i < e.raw.size(); ++i) {
    const double drop = e.raw[i - 1] - e.raw[i];
    e.worst_drop = std::max(e.worst_drop, drop);
    if (drop > 1e-12) e.monotone = false;
  }
  if (!e.normalised.empty()) e.estimate = e.normalised.back();
  return e;
}

}  // namespace detail

/// Approximants of htop from -phi_k(0) = sum_a R_a log #theta^k(a).
inline EntropySequence topological_entropy(InflationSpectrum& spec, int k_max) {
  std::vector<double> v;
  for (int k = 1; k <= k_max; ++k) v.push_back(-spec.phi(k, 0.0));
  return detail::make_entropy_sequence(v, spec.lambda());
}

inline EntropySequence measure_entropy(InflationSpectrum& spec, int k_max) {
  std::vector<double> v;
  for (int k = 1; k <= k_max; ++k) v.push_back(spec.rho(k));
  return detail::make_entropy_sequence(v, spec.lambda());
}

/// tau(q) = -c sum_a R_a log sum_s p_s^q, with its derivative and conjugate.
class ClosedFormSpectrum {
 public:
  ClosedFormSpectrum(const RandomSubstitution& s, const PerronData& pd, double factor)
      : weights_(pd.right), factor_(factor) {
    for (const auto& rule : s.rules) {
      std::vector<double> lp;
      for (const auto& r : rule) lp.push_back(std::log(r.prob));
      logp_.push_back(std::move(lp));
    }
  }

  static ClosedFormSpectrum from_regime(InflationSpectrum& spec, const ConditionReport& rep,
                                        Regime regime, bool allow_negative_q = false) {
    require_regime(rep, regime, allow_negative_q ? -1.0 : 0.0);
    return ClosedFormSpectrum(spec.substitution(), spec.perron(),
                              regime_factor(regime, spec.lambda()));
  }

  double factor() const noexcept { return factor_; }

  double tau(double q) const {
    double out = 0.0;
    for (std::size_t a = 0; a < logp_.size(); ++a) out -= weights_[a] * log_sum_pow(a, q);
    return factor_ * out;
  }

  /// tau'(q) = c sum_a R_a sum_s Q_s (-log p_s) with Q the tilted weights.
  double dtau(double q) const {
    double out = 0.0;
    for (std::size_t a = 0; a < logp_.size(); ++a) {
      const double t = log_sum_pow(a, q);
      double inner = 0.0;
      for (double lp : logp_[a]) inner -= std::exp(q * lp - t) * lp;
      out += weights_[a] * inner;
    }
    return factor_ * out;
  }

  /// Parametric spectrum point (alpha(q), q alpha(q) - tau(q)).
  std::pair<double, double> parametric(double q) const {
    const double al = dtau(q);
    return {al, q * al - tau(q)};
  }

  double alpha_min() const { return extreme_slope(true); }
  double alpha_max() const { return extreme_slope(false); }

  double f_at_alpha_min() const { return endpoint_value(true); }
  double f_at_alpha_max() const { return endpoint_value(false); }

  /// f(alpha) = inf_q {q alpha - tau(q)}; -inf outside [alpha_min, alpha_max].
  double conjugate(double alpha) const {
    const double lo = alpha_min(), hi = alpha_max();
    const double tol = 1e-12 * std::max(1.0, std::abs(hi));
    if (alpha < lo - tol || alpha > hi + tol) return kNegInf;
    if (hi - lo <= tol) return f_at_alpha_min();
    if (std::abs(alpha - lo) <= tol) return f_at_alpha_min();
    if (std::abs(alpha - hi) <= tol) return f_at_alpha_max();
    // alpha(q) is nonincreasing; bracket the root of dtau(q) = alpha.
    double a = -1.0, b = 1.0;
    while (dtau(a) < alpha && a > -1e6) a *= 2.0;
    while (dtau(b) > alpha && b < 1e6) b *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      if (dtau(m) > alpha)
        a = m;
      else
        b = m;
      if (b - a < 1e-14 * std::max(1.0, std::abs(m))) break;
    }
    const double q = 0.5 * (a + b);
    return q * alpha - tau(q);
  }

 private:
  double log_sum_pow(std::size_t a, double q) const {
    std::vector<double> xs;
    for (double lp : logp_[a]) xs.push_back(q * lp);
    return log_sum_exp(xs);
  }

  double extreme_slope(bool use_max) const {
    double out = 0.0;
    for (std::size_t a = 0; a < logp_.size(); ++a) {
      const auto& lp = logp_[a];
      const double e = use_max ? *std::max_element(lp.begin(), lp.end())
                               : *std::min_element(lp.begin(), lp.end());
      out -= weights_[a] * e;
    }
    return factor_ * out;
  }

  double endpoint_value(bool use_max) const {
    double out = 0.0;
    for (std::size_t a = 0; a < logp_.size(); ++a) {
      const auto& lp = logp_[a];
      const double e = use_max ? *std::max_element(lp.begin(), lp.end())
                               : *std::min_element(lp.begin(), lp.end());
      const auto count = std::count_if(lp.begin(), lp.end(),
                                       [e](double x) { return std::abs(x - e) <= 1e-14; });
      out += weights_[a] * std::log(static_cast<double>(count));
    }
    return factor_ * out;
  }

  std::vector<double> weights_;
  std::vector<std::vector<double>> logp_;
  double factor_;
};

struct AlphaRange {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  // Same slopes without the regime factor.
  double unscaled_min = 0.0;
  double unscaled_max = 0.0;
  double f_min = 0.0;  // f(alpha_min)
  double f_max = 0.0;  // f(alpha_max)
};

inline AlphaRange alpha_range(InflationSpectrum& spec, const ConditionReport& rep) {
  const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::Recognisable, true);
  AlphaRange r;
  r.alpha_min = cf.alpha_min();
  r.alpha_max = cf.alpha_max();
  r.unscaled_min = r.alpha_min / cf.factor();
  r.unscaled_max = r.alpha_max / cf.factor();
  r.f_min = cf.f_at_alpha_min();
  r.f_max = cf.f_at_alpha_max();
  return r;
}

enum class CurveKind { LowerBound, UpperBound, ClosedForm, Conjugate, Empirical };

inline const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::LowerBound: return "lower-bound";
    case CurveKind::UpperBound: return "upper-bound";
    case CurveKind::ClosedForm: return "closed-form";
    case CurveKind::Conjugate: return "conjugate";
    case CurveKind::Empirical: return "empirical";
  }
  return "?";
}

struct SpectrumCurve {
  CurveKind kind = CurveKind::ClosedForm;
  std::vector<std::pair<double, double>> samples;  // sorted by abscissa
  std::map<std::string, double> metadata;

  /// Discrete second differences (non-uniform grid aware) are <= tol.
  bool is_concave(double tol = 1e-9) const {
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
      const auto [x0, y0] = samples[i - 1];
      const auto [x1, y1] = samples[i];
      const auto [x2, y2] = samples[i + 1];
      const double s1 = (y1 - y0) / (x1 - x0), s2 = (y2 - y1) / (x2 - x1);
      if ((s2 - s1) * 0.5 * (x2 - x0) > tol) return false;
    }
    return true;
  }

  bool is_nondecreasing(double tol = 1e-12) const {
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].second < samples[i - 1].second - tol) return false;
    return true;
  }
};

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const long n = std::lround((hi - lo) / step);
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

/// inf over the q-grid of q*alpha - g(q), refined by golden-section search
/// around the grid minimiser. Returns -inf when the minimiser sits on the
/// boundary of the grid.
inline double concave_conjugate(const std::function<double(double)>& g, double alpha,
                                double q_lo = -60.0, double q_hi = 60.0, double step = 0.01) {
  const long n = std::lround((q_hi - q_lo) / step);
  auto h = [&](double q) { return q * alpha - g(q); };
  long best = 0;
  double best_val = h(q_lo);
  for (long i = 1; i <= n; ++i) {
    const double v = h(q_lo + static_cast<double>(i) * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == n) return kNegInf;
  double a = q_lo + static_cast<double>(best - 1) * step;
  double b = q_lo + static_cast<double>(best + 1) * step;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double hc = h(c), hd = h(d);
  for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
    if (hc < hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - invphi * (b - a);
      hc = h(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + invphi * (b - a);
      hd = h(d);
    }
  }
  return std::min({best_val, hc, hd});
}

/// Conjugate of a sampled concave curve: the minimum over its samples.
inline double concave_conjugate(const SpectrumCurve& curve, double alpha) {
  if (curve.samples.size() < 3) return kNegInf;
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    const auto [q, t] = curve.samples[i];
    const double v = q * alpha - t;
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best + 1 == curve.samples.size()) return kNegInf;
  return best_val;
}

inline SpectrumCurve tau_curve(const ClosedFormSpectrum& cf, const std::vector<double>& qs) {
  SpectrumCurve c;
  c.kind = CurveKind::ClosedForm;
  for (double q : qs) c.samples.emplace_back(q, cf.tau(q));
  return c;
}

/// f on an alpha grid, clipped to [alpha_min, alpha_max]. Points where f is
/// -inf are dropped.
inline SpectrumCurve multifractal_spectrum(InflationSpectrum& spec, const ConditionReport& rep,
                                           const std::vector<double>& alphas) {
  const auto cf = ClosedFormSpectrum::from_regime(spec, rep, Regime::Recognisable, true);
  SpectrumCurve c;
  c.kind = CurveKind::Conjugate;
  c.metadata["alpha_min"] = cf.alpha_min();
  c.metadata["alpha_max"] = cf.alpha_max();
  c.metadata["lambda"] = spec.lambda();
  for (double a : alphas) {
    const double f = cf.conjugate(a);
    if (f != kNegInf) c.samples.emplace_back(a, f);
  }
  return c;
}

/// Q_s = p_s^q exp(T_a(q)), T_a(q) = -log sum_s p_s^q.
inline RandomSubstitution tilted_probabilities(const RandomSubstitution& s, double q) {
  RandomSubstitution out = s;
  for (auto& rule : out.rules) {
    std::vector<double> xs;
    for (const auto& r : rule) xs.push_back(q * std::log(r.prob));
    const double t = log_sum_exp(xs);
    for (std::size_t j = 0; j < rule.size(); ++j) rule[j].prob = std::exp(xs[j] - t);
  }
  return out;
}

struct RelEntropyVector {
  int m = 0;
  std::vector<double> h;  // per letter
};

/// H^{m,a} = sum_{v in theta^m(a)} -Q^m(v) log P^m(v).
inline RelEntropyVector relative_entropy_vector(InflationSpectrum& p_spec,
                                                InflationSpectrum& q_spec, int m) {
  const auto& lp = p_spec.level(m);
  const auto& lq = q_spec.level(m);
  RelEntropyVector out;
  out.m = m;
  for (std::size_t a = 0; a < lp.size(); ++a) {
    double h = 0.0;
    const auto& ep = lp[a].entries();
    const auto& eq = lq[a].entries();
    if (ep.size() != eq.size())
      throw ValidationError("P and Q level distributions have different supports");
    for (std::size_t i = 0; i < ep.size(); ++i) {
      if (ep[i].first != eq[i].first)
        throw ValidationError("P and Q level distributions have different supports");
      h -= std::exp(eq[i].second) * ep[i].second;
    }
    out.h.push_back(h);
  }
  return out;
}

/// lambda^{-m} H^m . R for m = 1..m_max.
inline std::vector<double> relative_entropy_sequence(InflationSpectrum& p_spec,
                                                     InflationSpectrum& q_spec, int m_max) {
  std::vector<double> out;
  const auto& r = p_spec.perron().right;
  for (int m = 1; m <= m_max; ++m) {
    const auto v = relative_entropy_vector(p_spec, q_spec, m);
    double s = 0.0;
    for (std::size_t a = 0; a < r.size(); ++a) s += v.h[a] * r[a];
    out.push_back(s / std::pow(p_spec.lambda(), m));
  }
  return out;
}

}  // namespace substspec
