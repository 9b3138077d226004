#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "conditions.hpp"
#include "distribution.hpp"
#include "errors.hpp"
#include "language.hpp"
#include "lq.hpp"
#include "spectral.hpp"
#include "substitution.hpp"

namespace substspec {

struct FrequencyTable {
  std::size_t n = 0;
  std::vector<Word> words;  // sorted, equals L^n
  std::vector<double> mu;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
  std::size_t working_length = 0;  // length the fixed point was solved at
  std::size_t source_length = 0;   // k in the renormalisation identity

  double at(const Word& u) const {
    auto it = std::lower_bound(words.begin(), words.end(), u);
    if (it == words.end() || *it != u) return 0.0;
    return mu[static_cast<std::size_t>(it - words.begin())];
  }
};

struct FrequencyOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  int restarts = 3;
  double agreement = 1e-9;
  std::uint64_t seed = 12345;
};

/// Table of length n-1 obtained by summing over the last letter.
inline FrequencyTable marginal_prefix(const FrequencyTable& t) {
  FrequencyTable out;
  out.n = t.n - 1;
  out.residual = t.residual;
  out.iterations = t.iterations;
  out.working_length = t.working_length;
  out.source_length = t.source_length;
  std::map<Word, double> acc;
  for (std::size_t i = 0; i < t.words.size(); ++i) acc[t.words[i].substr(0, out.n)] += t.mu[i];
  for (auto& [w, v] : acc) {
    out.words.push_back(w);
    out.mu.push_back(v);
  }
  return out;
}

/// Table of length n-1 obtained by summing over the first letter.
inline FrequencyTable marginal_suffix(const FrequencyTable& t) {
  FrequencyTable out;
  out.n = t.n - 1;
  std::map<Word, double> acc;
  for (std::size_t i = 0; i < t.words.size(); ++i) acc[t.words[i].substr(1)] += t.mu[i];
  for (auto& [w, v] : acc) {
    out.words.push_back(w);
    out.mu.push_back(v);
  }
  return out;
}

namespace detail {

struct Renormalisation {
  std::size_t n = 0, k = 0;
  std::vector<Word> words;                  // L^n
  std::vector<std::size_t> source_of;       // index of the k-prefix of words[i]
  std::size_t source_count = 0;
  // For each source word t: (target index, coefficient) pairs.
  std::vector<std::vector<std::pair<std::size_t, double>>> coeff;
  double lambda = 0.0;

  std::vector<double> apply(const std::vector<double>& mu) const {
    std::vector<double> src(source_count, 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) src[source_of[i]] += mu[i];
    std::vector<double> out(mu.size(), 0.0);
    for (std::size_t t = 0; t < source_count; ++t)
      for (const auto& [u, c] : coeff[t]) out[u] += src[t] * c;
    double s = 0.0;
    for (double& x : out) s += (x /= lambda);
    for (double& x : out) x /= s;
    return out;
  }
};

inline std::vector<std::size_t> tile_lengths(const RandomSubstitution& s) {
  std::vector<std::size_t> len;
  for (const auto& rule : s.rules) len.push_back(rule.front().word.size());
  return len;
}

/// Smallest k <= n with |theta(t)| >= n + |theta(t_1)| for every t in L^k.
inline std::optional<std::size_t> source_length(const std::vector<LegalLanguage>& lang,
                                                const std::vector<std::size_t>& len,
                                                std::size_t n) {
  for (std::size_t k = 1; k <= n; ++k) {
    bool ok = true;
    for (const auto& t : lang[k - 1].words) {
      std::size_t total = 0;
      for (std::size_t i = 1; i < t.size(); ++i) total += len[static_cast<Letter>(t[i])];
      if (total < n) { ok = false; break; }
    }
    if (ok) return k;
  }
  return std::nullopt;
}

inline Renormalisation build_renormalisation(const RandomSubstitution& s, const PerronData& pd,
                                             const std::vector<LegalLanguage>& lang,
                                             std::size_t n, std::size_t k) {
  Renormalisation op;
  op.n = n;
  op.k = k;
  op.lambda = pd.lambda;
  op.words = lang[n - 1].words;
  const auto& sources = lang[k - 1];
  op.source_count = sources.size();
  for (const auto& u : op.words) {
    const long idx = sources.index_of(u.substr(0, k));
    if (idx < 0) throw ValidationError("prefix of a legal word is missing from the language");
    op.source_of.push_back(static_cast<std::size_t>(idx));
  }
  const auto len = tile_lengths(s);
  const auto rules = rule_distributions(s);
  op.coeff.resize(sources.size());
  for (std::size_t ti = 0; ti < sources.size(); ++ti) {
    const Word& t = sources.words[ti];
    const std::size_t first = len[static_cast<Letter>(t[0])];
    const std::size_t need = first + n - 1;
    Word head;
    std::size_t have = 0;
    for (char c : t) {
      if (have >= need) break;
      head.push_back(c);
      have += len[static_cast<Letter>(c)];
    }
    const auto img = push_forward(rules, head);
    std::map<std::size_t, double> acc;
    for (const auto& [w, lp] : img.entries()) {
      const double p = std::exp(lp);
      for (std::size_t j = 0; j < first; ++j) {
        const long ui = lang[n - 1].index_of(w.substr(j, n));
        if (ui < 0) throw ValidationError("image window missing from the legal language");
        acc[static_cast<std::size_t>(ui)] += p;
      }
    }
    op.coeff[ti].assign(acc.begin(), acc.end());
  }
  return op;
}

struct FixedPoint {
  std::vector<double> mu;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

inline FixedPoint iterate_fixed_point(const Renormalisation& op, std::vector<double> mu,
                                      double tol, int max_iter) {
  FixedPoint fp;
  double s = 0.0;
  for (double x : mu) s += x;
  for (double& x : mu) x /= s;
  for (int it = 1; it <= max_iter; ++it) {
    auto next = op.apply(mu);
    double r = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) r = std::max(r, std::abs(next[i] - mu[i]));
    mu = std::move(next);
    fp.history.push_back(r);
    fp.iterations = it;
    fp.residual = r;
    if (r < tol) break;
  }
  fp.mu = std::move(mu);
  return fp;
}

}  // namespace detail

/// Frequencies of the legal words of length n, as the fixed point of the
/// renormalisation identity
///   mu(u) = lambda^{-1} sum_{t in L^k} mu(t) sum_{j<|theta(t_1)|} P[theta(t)[j, j+n) = u].
inline FrequencyTable frequency_table(const RandomSubstitution& s, const PerronData& pd,
                                      std::size_t n, const FrequencyOptions& opt = {}) {
  if (n == 0) throw ValidationError("word length must be positive");
  if (!has_constant_lengths(s))
    throw NotCompatible("frequency table needs constant tile lengths per letter");
  const auto len = detail::tile_lengths(s);
  std::size_t big = n;
  auto lang = legal_language_upto(s, big);
  std::optional<std::size_t> k;
  while (!(k = detail::source_length(lang, len, big))) {
    ++big;
    lang = legal_language_upto(s, big);
  }
  const auto op = detail::build_renormalisation(s, pd, lang, big, *k);
  const std::size_t m = op.words.size();
  auto fp = detail::iterate_fixed_point(op, std::vector<double>(m, 1.0), opt.tol, opt.max_iter);
  if (fp.residual >= opt.tol)
    throw NoConvergence("renormalisation iteration did not converge", fp.residual);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<double> start(m);
    for (double& x : start) x = unif(rng);
    auto other = detail::iterate_fixed_point(op, std::move(start), opt.tol, opt.max_iter);
    double diff = 0.0;
    for (std::size_t i = 0; i < m; ++i) diff = std::max(diff, std::abs(other.mu[i] - fp.mu[i]));
    if (diff > opt.agreement)
      throw NoConvergence("fixed point depends on the starting vector", diff);
  }
  FrequencyTable t;
  t.n = big;
  t.words = op.words;
  t.mu = std::move(fp.mu);
  t.residual = fp.residual;
  t.iterations = fp.iterations;
  t.residual_history = std::move(fp.history);
  t.working_length = big;
  t.source_length = *k;
  while (t.n > n) {
    auto hist = std::move(t.residual_history);
    t = marginal_prefix(t);
    t.residual_history = std::move(hist);
  }
  return t;
}

inline FrequencyTable frequency_table(const RandomSubstitution& s, std::size_t n,
                                      const FrequencyOptions& opt = {}) {
  return frequency_table(s, perron_eigen(substitution_matrix(s)), n, opt);
}

/// Invariant violations of a table; `shorter` is the table for n-1 (if any).
inline std::vector<std::string> table_violations(const FrequencyTable& t, const PerronData& pd,
                                                 const FrequencyTable* shorter = nullptr,
                                                 double tol = 1e-8) {
  std::vector<std::string> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < t.mu.size(); ++i) {
    sum += t.mu[i];
    if (!(t.mu[i] > 0.0)) out.push_back("nonpositive value at a legal word");
  }
  if (std::abs(sum - 1.0) > std::max(tol, 1e-10)) out.push_back("mass differs from one");
  if (t.n == 1)
    for (std::size_t i = 0; i < t.words.size(); ++i)
      if (std::abs(t.mu[i] - pd.right[static_cast<Letter>(t.words[i][0])]) > tol)
        out.push_back("letter frequencies differ from the Perron vector");
  if (shorter && t.n >= 2) {
    for (const auto& marg : {marginal_prefix(t), marginal_suffix(t)}) {
      if (marg.words != shorter->words) {
        out.push_back("marginal support differs from the shorter table");
        continue;
      }
      for (std::size_t i = 0; i < marg.mu.size(); ++i)
        if (std::abs(marg.mu[i] - shorter->mu[i]) > std::max(tol, 1e-9)) {
          out.push_back("marginal inconsistent with the shorter table");
          break;
        }
    }
  }
  return out;
}

/// -(1/n) log sum_u mu(u)^q.
inline double empirical_tau(const FrequencyTable& t, double q) {
  std::vector<double> xs;
  xs.reserve(t.mu.size());
  for (double m : t.mu) xs.push_back(q * std::log(m));
  return -log_sum_exp(xs) / static_cast<double>(t.n);
}

struct MinCylinder {
  bool holds = false;
  Word argmin;
  double min_value = 0.0;
};

inline MinCylinder min_cylinder_check(const FrequencyTable& t, double bound) {
  MinCylinder m;
  auto it = std::min_element(t.mu.begin(), t.mu.end());
  if (it == t.mu.end()) return m;
  m.min_value = *it;
  m.argmin = t.words[static_cast<std::size_t>(it - t.mu.begin())];
  m.holds = m.min_value >= bound;
  return m;
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("SUBST_SPECTRA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

struct MonteCarloEntry {
  Word word;
  double freq = 0.0;
  double se = 0.0;
  long double count = 0.0L;
};

struct MonteCarloResult {
  std::size_t n = 0;
  std::vector<MonteCarloEntry> entries;  // sorted by word
  long double windows = 0.0L;
  int block_level = 0;

  const MonteCarloEntry* find(const Word& w) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), w,
                               [](const MonteCarloEntry& e, const Word& key) { return e.word < key; });
    if (it == entries.end() || it->word != w) return nullptr;
    return &*it;
  }
};

namespace detail {

inline constexpr std::uint64_t kChunkStride = 0x9E3779B97F4A7C15ULL;
inline constexpr std::size_t kChunkSize = 1024;
inline constexpr std::size_t kMaxBlockSupport = 65536;

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Letter draw_letter(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  const double x = unit_uniform(rng);
  Letter a = 0;
  while (x >= cumulative[a]) ++a;
  return a;
}

inline std::vector<double> cumulative_of(const std::vector<double>& w) {
  std::vector<double> c;
  double acc = 0.0;
  for (double x : w) c.push_back(acc += x);
  c.back() = std::numeric_limits<double>::infinity();
  return c;
}

inline std::size_t word_code(const Word& w, std::size_t pos, std::size_t len, std::size_t d) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < len; ++i) c = c * d + static_cast<Letter>(w[pos + i]);
  return c;
}

inline Word code_word(std::size_t code, std::size_t len, std::size_t d) {
  Word w(len, '\0');
  for (std::size_t i = len; i > 0; --i) {
    w[i - 1] = static_cast<char>(code % d);
    code /= d;
  }
  return w;
}

// Empirical distribution of adjacent letter pairs, read off long simulated
// realisations started from the Perron vector.
class PairPool {
 public:
  PairPool(const RandomSubstitution& s, const PerronData& pd, std::uint64_t seed,
           std::size_t min_length = 4096, std::size_t realisations = 256)
      : d_(s.size()) {
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    RealisationSampler sampler(s);
    const auto rcum = cumulative_of(pd.right);
    std::vector<double> counts(d_ * d_, 0.0);
    for (std::size_t r = 0; r < realisations; ++r) {
      Word w = single(draw_letter(rcum, rng));
      while (w.size() < min_length) w = sampler.apply(w, rng);
      for (std::size_t i = 0; i + 1 < w.size(); ++i)
        counts[static_cast<Letter>(w[i]) * d_ + static_cast<Letter>(w[i + 1])] += 1.0;
    }
    double total = 0.0;
    for (double c : counts) total += c;
    for (double& c : counts) c /= total;
    cumulative_ = cumulative_of(counts);
  }

  std::pair<Letter, Letter> draw(std::mt19937_64& rng) const {
    const double x = unit_uniform(rng);
    std::size_t i = 0;
    while (x >= cumulative_[i]) ++i;
    return {static_cast<Letter>(i / d_), static_cast<Letter>(i % d_)};
  }

 private:
  std::size_t d_;
  std::vector<double> cumulative_;
};

struct Tally {
  std::vector<long double> counts;  // indexed by window code
  long double windows = 0.0L;
};

// Realisations of theta^k(x) are assembled from a sampled level-(k-B)
// skeleton whose letters are replaced by exact level-B blocks. Windows inside
// a block are tallied per block type; windows across a junction per
// (suffix, prefix) pair. Every block has at least n-1 letters.
//
// With a fixed start letter the windows of theta^k(a) are counted. Otherwise
// a pair t1 t2 is drawn from the pool and the windows starting inside
// theta^k(t1) are counted, continuing into theta^k(t2).
class BlockSampler {
 public:
  BlockSampler(const RandomSubstitution& s, const PerronData& pd, int k, std::size_t n, int b)
      : k_(k), n_(n), b_(b), d_(s.size()), sampler_(s), rcum_(cumulative_of(pd.right)) {
    for (std::size_t i = 0; i < n; ++i) windows_ *= d_;
    for (std::size_t i = 0; i + 1 < n; ++i) affix_ *= d_;
    for (const auto& rule : s.rules) {
      std::vector<double> p;
      for (const auto& r : rule) p.push_back(r.prob);
      rule_cum_.push_back(cumulative_of(p));
      std::vector<Letter> firsts;
      for (const auto& r : rule) firsts.push_back(static_cast<Letter>(r.word[0]));
      first_letters_.push_back(std::move(firsts));
    }
    std::vector<WordDistribution> lv;
    if (b_ > 0) {
      lv = rule_distributions(s);
      for (int j = 2; j <= b_; ++j) lv = next_level(s, lv);
    } else {
      for (std::size_t a = 0; a < d_; ++a)
        lv.push_back(WordDistribution::aggregate({{single(static_cast<Letter>(a)), 0.0}}));
    }
    for (std::size_t a = 0; a < d_; ++a) {
      BlockChoice choice;
      std::vector<double> p;
      for (const auto& [w, lp] : lv[a].entries()) {
        p.push_back(std::exp(lp));
        choice.type.push_back(add_block(w));
      }
      choice.cumulative = cumulative_of(p);
      letters_.push_back(std::move(choice));
    }
    junction_.resize(affix_ * affix_);
    for (std::size_t x = 0; x < affix_; ++x)
      for (std::size_t y = 0; y < affix_; ++y) {
        const Word w = code_word(x, n_ - 1, d_) + code_word(y, n_ - 1, d_);
        for (std::size_t i = 0; i + n_ <= w.size(); ++i)
          junction_[x * affix_ + y].push_back(word_code(w, i, n_, d_));
      }
  }

  std::size_t window_space() const noexcept { return windows_; }

  Tally run_chunk(std::uint64_t seed, std::size_t samples, std::optional<Letter> start,
                  const PairPool* pool) const {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> type_count(blocks_.size(), 0);
    std::vector<std::uint64_t> junction_count(affix_ * affix_, 0);
    Word skeleton, next;
    for (std::size_t i = 0; i < samples; ++i) {
      Letter first;
      std::optional<Letter> follower;
      if (start) {
        first = *start;
      } else {
        const auto [t1, t2] = pool->draw(rng);
        first = t1;
        follower = t2;
      }
      skeleton.assign(1, static_cast<char>(first));
      for (int j = 0; j < k_ - b_; ++j) {
        next.clear();
        for (char c : skeleton) {
          const Letter a = static_cast<Letter>(c);
          next += sampler_.rule_word(a, pick(rule_cum_[a], rng));
        }
        skeleton.swap(next);
      }
      std::size_t prev = 0;
      bool have_prev = false;
      for (char c : skeleton) {
        const std::size_t t = draw_block(static_cast<Letter>(c), rng);
        ++type_count[t];
        if (have_prev && n_ > 1) ++junction_count[blocks_[prev].suffix * affix_ + blocks_[t].prefix];
        prev = t;
        have_prev = true;
      }
      if (follower && n_ > 1) {
        Letter x = *follower;
        for (int j = 0; j < k_ - b_; ++j) x = first_letters_[x][pick(rule_cum_[x], rng)];
        const std::size_t t = draw_block(x, rng);
        ++junction_count[blocks_[prev].suffix * affix_ + blocks_[t].prefix];
      }
    }
    Tally tally;
    tally.counts.assign(windows_, 0.0L);
    for (std::size_t t = 0; t < blocks_.size(); ++t) {
      if (!type_count[t]) continue;
      for (const auto& [code, c] : blocks_[t].inner)
        tally.counts[code] += static_cast<long double>(type_count[t]) * c;
    }
    for (std::size_t j = 0; j < junction_count.size(); ++j) {
      if (!junction_count[j]) continue;
      for (std::size_t code : junction_[j]) tally.counts[code] += junction_count[j];
    }
    for (long double c : tally.counts) tally.windows += c;
    return tally;
  }

 private:
  struct Block {
    std::vector<std::pair<std::size_t, std::uint64_t>> inner;
    std::size_t prefix = 0, suffix = 0;
  };
  struct BlockChoice {
    std::vector<double> cumulative;
    std::vector<std::size_t> type;
  };

  static std::size_t pick(const std::vector<double>& cum, std::mt19937_64& rng) {
    if (cum.size() == 1) return 0;
    const double x = unit_uniform(rng);
    std::size_t j = 0;
    while (x >= cum[j]) ++j;
    return j;
  }

  std::size_t draw_block(Letter a, std::mt19937_64& rng) const {
    const auto& L = letters_[a];
    if (L.cumulative.size() == 1) return L.type[0];
    const double x = unit_uniform(rng);
    const auto e = std::upper_bound(L.cumulative.begin(), L.cumulative.end(), x) - L.cumulative.begin();
    return L.type[static_cast<std::size_t>(e)];
  }

  std::size_t add_block(const Word& w) {
    Block b;
    std::map<std::size_t, std::uint64_t> inner;
    for (std::size_t i = 0; i + n_ <= w.size(); ++i) ++inner[word_code(w, i, n_, d_)];
    b.inner.assign(inner.begin(), inner.end());
    b.prefix = word_code(w, 0, n_ - 1, d_);
    b.suffix = word_code(w, w.size() - (n_ - 1), n_ - 1, d_);
    blocks_.push_back(std::move(b));
    return blocks_.size() - 1;
  }

  int k_;
  std::size_t n_;
  int b_;
  std::size_t d_;
  RealisationSampler sampler_;
  std::vector<double> rcum_;
  std::vector<std::vector<double>> rule_cum_;
  std::vector<std::vector<Letter>> first_letters_;
  std::size_t windows_ = 1, affix_ = 1;
  std::vector<Block> blocks_;
  std::vector<BlockChoice> letters_;
  std::vector<std::vector<std::size_t>> junction_;
};

/// Largest B <= k with level-B supports <= kMaxBlockSupport and every level-B
/// word at least n-1 letters long. 0 when only single letters qualify.
inline int choose_block_level(const RandomSubstitution& s, int k, std::size_t n) {
  int best = 0;
  std::vector<WordDistribution> lv = rule_distributions(s);
  for (int b = 1; b <= k; ++b) {
    if (b > 1) {
      double total = 0.0;
      for (std::size_t a = 0; a < s.size(); ++a)
        for (const auto& r : s.rules[a]) {
          double p = 1.0;
          for (char c : r.word) p *= static_cast<double>(lv[static_cast<Letter>(c)].size());
          total += p;
        }
      if (total > 4.0 * kMaxBlockSupport) break;
      lv = next_level(s, lv);
    }
    bool long_enough = true;
    for (const auto& d : lv) {
      if (d.size() > kMaxBlockSupport) return best;
      for (const auto& e : d.entries())
        if (e.first.size() + 1 < n) long_enough = false;
    }
    if (long_enough) best = b;
  }
  return best;
}

}  // namespace detail

/// Monte Carlo window counts for all lengths up to n, kept per chunk of 1024
/// samples so that standard errors can be formed for any length <= n.
class MonteCarloRun {
 public:
  MonteCarloRun(const RandomSubstitution& s, const PerronData& pd, std::optional<Letter> start,
                int k, std::size_t n, std::size_t samples, std::uint64_t seed,
                unsigned threads = 0)
      : n_(n), d_(s.size()), fixed_start_(start.has_value()) {
    if (n == 0 || k < 0 || samples == 0) throw ValidationError("bad Monte Carlo parameters");
    std::size_t space = 1;
    for (std::size_t i = 0; i < n; ++i) {
      space *= d_;
      if (space > (std::size_t{1} << 24)) throw CapExceeded("window space too large");
    }
    block_level_ = detail::choose_block_level(s, k, n);
    if (block_level_ == 0 && n > 2) throw CapExceeded("no block level with blocks of length >= n-1");
    std::optional<detail::PairPool> pool;
    if (!start) pool.emplace(s, pd, seed);
    const detail::BlockSampler sampler(s, pd, k, n, block_level_);
    const std::size_t chunks = (samples + detail::kChunkSize - 1) / detail::kChunkSize;
    tallies_.resize(chunks);
    if (threads == 0) threads = worker_count();
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
    auto work = [&](unsigned w) {
      for (std::size_t c = w; c < chunks; c += threads) {
        const std::size_t m = std::min(detail::kChunkSize, samples - c * detail::kChunkSize);
        tallies_[c] = sampler.run_chunk(seed + c * detail::kChunkStride, m, start,
                                        pool ? &*pool : nullptr);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool_threads;
      for (unsigned w = 0; w < threads; ++w) pool_threads.emplace_back(work, w);
      for (auto& t : pool_threads) t.join();
    }
  }

  int block_level() const noexcept { return block_level_; }

  /// Frequencies of words of length m <= n. With a fixed start letter only
  /// m == n is available.
  MonteCarloResult frequencies(std::size_t m) const {
    if (m == 0 || m > n_ || (fixed_start_ && m != n_))
      throw ValidationError("length not available from this run");
    std::size_t shrink = 1;
    for (std::size_t i = m; i < n_; ++i) shrink *= d_;
    std::size_t space = 1;
    for (std::size_t i = 0; i < m; ++i) space *= d_;
    std::vector<std::vector<long double>> chunk(tallies_.size(), std::vector<long double>(space, 0.0L));
    std::vector<long double> total(space, 0.0L);
    MonteCarloResult res;
    res.n = m;
    res.block_level = block_level_;
    for (std::size_t c = 0; c < tallies_.size(); ++c) {
      for (std::size_t code = 0; code < tallies_[c].counts.size(); ++code)
        chunk[c][code / shrink] += tallies_[c].counts[code];
      for (std::size_t code = 0; code < space; ++code) total[code] += chunk[c][code];
      res.windows += tallies_[c].windows;
    }
    const long double nc = static_cast<long double>(tallies_.size());
    for (std::size_t code = 0; code < space; ++code) {
      if (total[code] == 0.0L) continue;
      MonteCarloEntry e;
      e.word = detail::code_word(code, m, d_);
      e.count = total[code];
      const long double f = total[code] / res.windows;
      long double ss = 0.0L;
      for (std::size_t c = 0; c < tallies_.size(); ++c) {
        const long double r = chunk[c][code] - f * tallies_[c].windows;
        ss += r * r;
      }
      const long double var =
          tallies_.size() > 1 ? ss * nc / (nc - 1.0L) / (res.windows * res.windows) : 0.0L;
      e.freq = static_cast<double>(f);
      e.se = static_cast<double>(std::sqrt(var));
      res.entries.push_back(std::move(e));
    }
    return res;
  }

 private:
  std::size_t n_, d_;
  bool fixed_start_;
  int block_level_ = 0;
  std::vector<detail::Tally> tallies_;
};

/// Sliding-window frequencies of length-n words in sampled realisations.
/// With a start letter, windows of theta^k(start) are counted. Without one,
/// each sample draws an adjacent pair t1 t2 from simulated long realisations
/// and counts the windows of theta^k(t1 t2) that start inside theta^k(t1).
inline MonteCarloResult monte_carlo_frequencies(const RandomSubstitution& s, const PerronData& pd,
                                                std::optional<Letter> start, int k, std::size_t n,
                                                std::size_t samples, std::uint64_t seed,
                                                unsigned threads = 0) {
  return MonteCarloRun(s, pd, start, k, n, samples, seed, threads).frequencies(n);
}

struct ProbeStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

/// Samples realisations of theta_Q^k(a) (a drawn from R) and evaluates
/// -log mu_P(central n-window) / n using the supplied tables of mu_P.
inline std::vector<ProbeStats> local_dimension_probe(const RandomSubstitution& q_subst,
                                                     const PerronData& pd,
                                                     const std::vector<FrequencyTable>& p_tables,
                                                     int k, std::size_t samples,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RealisationSampler sampler(q_subst);
  std::vector<double> rcum;
  double acc = 0.0;
  for (double r : pd.right) rcum.push_back(acc += r);
  rcum.back() = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> values(p_tables.size());
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = unif(rng);
    Letter a = 0;
    while (x >= rcum[a]) ++a;
    Word w = single(a);
    for (int j = 0; j < k; ++j) w = sampler.apply(w, rng);
    for (std::size_t t = 0; t < p_tables.size(); ++t) {
      const std::size_t n = p_tables[t].n;
      if (w.size() < n) throw ValidationError("realisation shorter than probe window");
      const Word u = w.substr((w.size() - n) / 2, n);
      const double mu = p_tables[t].at(u);
      if (!(mu > 0.0)) throw WindowMissing("probe window has no frequency");
      values[t].push_back(-std::log(mu) / static_cast<double>(n));
    }
  }
  std::vector<ProbeStats> out;
  for (std::size_t t = 0; t < p_tables.size(); ++t) {
    ProbeStats st;
    st.n = p_tables[t].n;
    st.count = values[t].size();
    double s = 0.0, s2 = 0.0;
    for (double v : values[t]) s += v;
    st.mean = s / static_cast<double>(st.count);
    for (double v : values[t]) s2 += (v - st.mean) * (v - st.mean);
    st.sd = st.count > 1 ? std::sqrt(s2 / static_cast<double>(st.count - 1)) : 0.0;
    out.push_back(st);
  }
  return out;
}

}  // namespace substspec
