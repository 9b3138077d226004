#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "spectral.hpp"
#include "substitution.hpp"
#include "word.hpp"

namespace substspec {

inline constexpr std::size_t kDefaultCap = std::size_t{1} << 23;

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Finite distribution on words, stored as (word, log-probability) pairs
/// sorted by word with no repeated words.
class WordDistribution {
 public:
  using Entry = std::pair<Word, double>;

  WordDistribution() = default;

  /// Sorts and merges duplicate words by adding their probabilities.
  static WordDistribution aggregate(std::vector<Entry> raw) {
    std::sort(raw.begin(), raw.end(),
              [](const Entry& x, const Entry& y) { return x.first < y.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (out > 0 && raw[out - 1].first == raw[i].first) {
        raw[out - 1].second = log_add_exp(raw[out - 1].second, raw[i].second);
        Word().swap(raw[i].first);
      } else {
        if (out != i) raw[out] = std::move(raw[i]);
        ++out;
      }
    }
    raw.resize(out);
    raw.shrink_to_fit();
    WordDistribution d;
    d.entries_ = std::move(raw);
    return d;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// log P[w], or -inf when w is outside the support.
  double log_prob(const Word& w) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), w,
                               [](const Entry& e, const Word& key) { return e.first < key; });
    if (it == entries_.end() || it->first != w) return -std::numeric_limits<double>::infinity();
    return it->second;
  }

  bool contains(const Word& w) const { return std::isfinite(log_prob(w)); }

  /// log sum_w P[w]^q.
  double log_sum_pow(double q) const {
    std::vector<double> xs;
    xs.reserve(entries_.size());
    for (const auto& e : entries_) xs.push_back(q * e.second);
    return log_sum_exp(xs);
  }

  double log_total() const { return log_sum_pow(1.0); }

  /// Shannon entropy -sum P log P.
  double entropy() const {
    double h = 0.0;
    for (const auto& e : entries_) h -= std::exp(e.second) * e.second;
    return h;
  }

 private:
  std::vector<Entry> entries_;
};

namespace detail {

/// Cartesian concatenation of independent factors, scaled by exp(log_weight).
inline void append_product(const std::vector<const WordDistribution*>& factors, double log_weight,
                           std::vector<WordDistribution::Entry>& out) {
  const std::size_t n = factors.size();
  std::vector<std::size_t> idx(n, 0);
  for (const auto* f : factors)
    if (f->size() == 0) return;
  while (true) {
    Word w;
    double lp = log_weight;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = factors[i]->entries()[idx[i]];
      w += e.first;
      lp += e.second;
    }
    out.emplace_back(std::move(w), lp);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++idx[i] < factors[i]->size()) break;
      idx[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

inline double product_size(const std::vector<const WordDistribution*>& factors) {
  double s = 1.0;
  for (const auto* f : factors) s *= static_cast<double>(f->size());
  return s;
}

}  // namespace detail

/// One-step rule distributions, indexed by letter.
inline std::vector<WordDistribution> rule_distributions(const RandomSubstitution& s) {
  std::vector<WordDistribution> out;
  for (const auto& rule : s.rules) {
    std::vector<WordDistribution::Entry> raw;
    for (const auto& r : rule) raw.emplace_back(r.word, std::log(r.prob));
    out.push_back(WordDistribution::aggregate(std::move(raw)));
  }
  return out;
}

/// Distribution of the image of u when each letter is replaced independently
/// according to `per_letter`.
inline WordDistribution push_forward(const std::vector<WordDistribution>& per_letter,
                                     const Word& u, std::size_t cap = kDefaultCap) {
  std::vector<const WordDistribution*> factors;
  for (char c : u) factors.push_back(&per_letter.at(static_cast<Letter>(c)));
  if (detail::product_size(factors) > static_cast<double>(cap))
    throw CapExceeded("image distribution support exceeds cap");
  std::vector<WordDistribution::Entry> raw;
  detail::append_product(factors, 0.0, raw);
  return WordDistribution::aggregate(std::move(raw));
}

inline WordDistribution apply_distribution(const RandomSubstitution& s, const Word& u,
                                           std::size_t cap = kDefaultCap) {
  return push_forward(rule_distributions(s), u, cap);
}

/// Level-1 entropy approximant lambda^{-1} sum_a R_a log #theta(a).
inline double level_one_entropy(const RandomSubstitution& s, const PerronData& pd) {
  double h = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a)
    h += pd.right[a] * std::log(static_cast<double>(s.rules[a].size()));
  return h / pd.lambda;
}

/// Builds level k from level k-1 via D_k(a) = sum_s p_s * prod_i D_{k-1}(s_i).
inline std::vector<WordDistribution> next_level(const RandomSubstitution& s,
                                                const std::vector<WordDistribution>& prev,
                                                std::size_t cap = kDefaultCap) {
  std::vector<WordDistribution> out;
  out.reserve(s.size());
  for (std::size_t a = 0; a < s.size(); ++a) {
    double total = 0.0;
    for (const auto& r : s.rules[a]) {
      std::vector<const WordDistribution*> factors;
      for (char c : r.word) factors.push_back(&prev[static_cast<Letter>(c)]);
      total += detail::product_size(factors);
    }
    if (total > static_cast<double>(cap))
      throw CapExceeded("support of level distribution exceeds cap (" +
                        std::to_string(static_cast<long long>(total)) + " > " +
                        std::to_string(cap) + ")");
    std::vector<WordDistribution::Entry> raw;
    raw.reserve(static_cast<std::size_t>(total));
    for (const auto& r : s.rules[a]) {
      std::vector<const WordDistribution*> factors;
      for (char c : r.word) factors.push_back(&prev[static_cast<Letter>(c)]);
      detail::append_product(factors, std::log(r.prob), raw);
    }
    out.push_back(WordDistribution::aggregate(std::move(raw)));
  }
  return out;
}

/// Rejects level k up front when exp(h1 * lambda^k) already exceeds the cap.
inline void check_predicted_support(const RandomSubstitution& s, const PerronData& pd, int k,
                                    std::size_t cap) {
  const double log_pred = level_one_entropy(s, pd) * std::pow(pd.lambda, k);
  if (log_pred > std::log(static_cast<double>(cap)))
    throw CapExceeded("predicted support exp(" + std::to_string(log_pred) + ") at level " +
                      std::to_string(k) + " exceeds cap");
}

/// Levels 1..k of the exact distributions, letter-indexed (result[j-1][a]).
inline std::vector<std::vector<WordDistribution>> inflation_levels(const RandomSubstitution& s,
                                                                   const PerronData& pd, int k,
                                                                   std::size_t cap = kDefaultCap) {
  check_predicted_support(s, pd, k, cap);
  std::vector<std::vector<WordDistribution>> levels;
  levels.push_back(rule_distributions(s));
  for (int j = 2; j <= k; ++j) levels.push_back(next_level(s, levels.back(), cap));
  return levels;
}

inline WordDistribution iterate_distribution(const RandomSubstitution& s, Letter a, int k,
                                             std::size_t cap = kDefaultCap) {
  if (k < 1) throw ValidationError("level must be positive");
  const PerronData pd = perron_eigen(substitution_matrix(s));
  return inflation_levels(s, pd, k, cap).back().at(a);
}

/// Per-letter cumulative tables for drawing realisations.
class RealisationSampler {
 public:
  explicit RealisationSampler(const RandomSubstitution& s) : subst_(&s) {
    for (const auto& rule : s.rules) {
      std::vector<double> cum;
      double acc = 0.0;
      for (const auto& r : rule) cum.push_back(acc += r.prob);
      cum.back() = std::numeric_limits<double>::infinity();
      cumulative_.push_back(std::move(cum));
    }
  }

  template <class Rng>
  std::size_t pick(Letter a, Rng& rng) const {
    const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto& cum = cumulative_[a];
    std::size_t j = 0;
    while (x >= cum[j]) ++j;
    return j;
  }

  const Word& rule_word(Letter a, std::size_t j) const { return subst_->rules[a][j].word; }

  template <class Rng>
  Word apply(const Word& u, Rng& rng) const {
    Word out;
    for (char c : u) {
      const Letter a = static_cast<Letter>(c);
      out += subst_->rules[a][pick(a, rng)].word;
    }
    return out;
  }

 private:
  const RandomSubstitution* subst_;
  std::vector<std::vector<double>> cumulative_;
};

inline Word sample_realisation(const RandomSubstitution& s, const Word& u, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return RealisationSampler(s).apply(u, rng);
}

}  // namespace substspec
