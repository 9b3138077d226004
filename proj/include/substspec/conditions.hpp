#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <tuple>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "language.hpp"
#include "spectral.hpp"
#include "substitution.hpp"

namespace substspec {

struct CompatibilityResult {
  bool compatible = true;
  // Offending letter and two realisations with different abelianisations.
  int letter = -1;
  Word first, second;
};

inline CompatibilityResult check_compatibility(const RandomSubstitution& s) {
  CompatibilityResult res;
  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto& rule = s.rules[a];
    const CountVector base = abelianise(rule.front().word, s.size());
    for (std::size_t j = 1; j < rule.size(); ++j)
      if (abelianise(rule[j].word, s.size()) != base) {
        res.compatible = false;
        res.letter = static_cast<int>(a);
        res.first = rule.front().word;
        res.second = rule[j].word;
        return res;
      }
  }
  return res;
}

/// True when every realisation of each letter has the same length. Weaker
/// than compatibility; enough for fixed tile lengths.
inline bool has_constant_lengths(const RandomSubstitution& s) {
  for (const auto& rule : s.rules)
    for (const auto& r : rule)
      if (r.word.size() != rule.front().word.size()) return false;
  return true;
}

/// Common letter counts of every realisation of theta(u).
inline CountVector image_counts(const RandomSubstitution& s, const Word& u) {
  if (!check_compatibility(s).compatible)
    throw NotCompatible("image counts need a compatible substitution");
  CountVector out(s.size(), 0);
  for (char c : u) {
    const CountVector ci = abelianise(s.rules[static_cast<Letter>(c)].front().word, s.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ci[i];
  }
  return out;
}

inline std::size_t expected_image_length(const RandomSubstitution& s, const Word& u) {
  std::size_t n = 0;
  for (std::size_t c : image_counts(s, u)) n += c;
  return n;
}

enum class VerdictKind { Verified, Refuted };

struct Verdict {
  VerdictKind kind = VerdictKind::Verified;
  int depth = 0;  // depth verified to, or depth of the refutation
  int letter = -1;
  Word u, v;        // realisations of `letter` being compared
  Word witness;     // word in the intersection / symmetric difference
  std::string note;

  bool verified() const noexcept { return kind == VerdictKind::Verified; }
};

namespace detail {

inline std::vector<std::vector<WordDistribution>> levels_for_conditions(const RandomSubstitution& s,
                                                                        int depth,
                                                                        std::size_t cap) {
  std::vector<std::vector<WordDistribution>> levels;
  levels.push_back(rule_distributions(s));
  for (int j = 2; j <= depth; ++j) levels.push_back(next_level(s, levels.back(), cap));
  return levels;
}

}  // namespace detail

namespace detail {

// Searches for a word lying in both concatenation products A_0 A_1 ... and
// B_0 B_1 ..., where all words of one factor share a length. Walks the merged
// cut positions left to right; at every state at least one side sits on a
// factor boundary.
class ProductIntersection {
 public:
  using Factors = std::vector<const WordDistribution*>;

  ProductIntersection(Factors a, Factors b) : a_(std::move(a)), b_(std::move(b)) {}

  std::optional<Word> find() { return search(0, {}, 0, {}); }

 private:
  using Entries = std::vector<WordDistribution::Entry>;

  static std::pair<std::size_t, std::size_t> prefix_range(const Entries& e, const Word& p) {
    auto lo = std::lower_bound(e.begin(), e.end(), p,
                               [](const WordDistribution::Entry& x, const Word& key) { return x.first < key; });
    auto hi = lo;
    while (hi != e.end() && hi->first.compare(0, p.size(), p) == 0) ++hi;
    return {static_cast<std::size_t>(lo - e.begin()), static_cast<std::size_t>(hi - e.begin())};
  }

  static bool has_prefix(const Entries& e, const Word& p) {
    auto lo = std::lower_bound(e.begin(), e.end(), p,
                               [](const WordDistribution::Entry& x, const Word& key) { return x.first < key; });
    return lo != e.end() && lo->first.compare(0, p.size(), p) == 0;
  }

  std::optional<Word> search(std::size_t i, const Word& pu, std::size_t j, const Word& pv) {
    if (i == a_.size() || j == b_.size()) {
      if (i == a_.size() && j == b_.size()) return Word{};
      return std::nullopt;
    }
    auto key = std::make_tuple(i, pu, j, pv);
    if (dead_.count(key)) return std::nullopt;
    const Entries& ea = a_[i]->entries();
    const Entries& eb = b_[j]->entries();
    const std::size_t la = ea.front().first.size(), lb = eb.front().first.size();
    const std::size_t step = std::min(la - pu.size(), lb - pv.size());
    auto ra = prefix_range(ea, pu);
    auto rb = prefix_range(eb, pv);
    const bool from_a = (ra.second - ra.first) <= (rb.second - rb.first);
    const Entries& src = from_a ? ea : eb;
    const auto range = from_a ? ra : rb;
    const std::size_t off = from_a ? pu.size() : pv.size();
    std::set<Word> tried;
    for (std::size_t x = range.first; x < range.second; ++x) {
      Word seg = src[x].first.substr(off, step);
      if (!tried.insert(seg).second) continue;
      Word nu = pu + seg, nv = pv + seg;
      if (!has_prefix(from_a ? eb : ea, from_a ? nv : nu)) continue;
      std::size_t ni = i, nj = j;
      if (nu.size() == la) { ++ni; nu.clear(); }
      if (nv.size() == lb) { ++nj; nv.clear(); }
      if (auto rest = search(ni, nu, nj, nv)) return seg + *rest;
    }
    dead_.insert(std::move(key));
    return std::nullopt;
  }

  Factors a_, b_;
  std::set<std::tuple<std::size_t, Word, std::size_t, Word>> dead_;
};

inline ProductIntersection::Factors factors_of(const std::vector<WordDistribution>& level,
                                               const Word& u) {
  ProductIntersection::Factors f;
  for (char c : u) f.push_back(&level[static_cast<Letter>(c)]);
  return f;
}

}  // namespace detail

/// Disjointness of theta^k(u) and theta^k(v) for u != v in theta(a), k = 1..depth.
/// Needs compatibility so that level-k images of a letter share one length.
inline Verdict check_dsc(const RandomSubstitution& s, int depth = 3,
                         std::size_t cap = kDefaultCap) {
  if (!check_compatibility(s).compatible)
    throw NotCompatible("disjoint set condition is checked for compatible substitutions");
  const auto levels = detail::levels_for_conditions(s, depth, cap);
  for (int k = 1; k <= depth; ++k) {
    const auto& lv = levels[k - 1];
    for (std::size_t a = 0; a < s.size(); ++a) {
      const auto& rule = s.rules[a];
      for (std::size_t i = 0; i < rule.size(); ++i)
        for (std::size_t j = i + 1; j < rule.size(); ++j) {
          detail::ProductIntersection search(detail::factors_of(lv, rule[i].word),
                                             detail::factors_of(lv, rule[j].word));
          if (auto w = search.find()) {
            Verdict v;
            v.kind = VerdictKind::Refuted;
            v.depth = k;
            v.letter = static_cast<int>(a);
            v.u = rule[i].word;
            v.v = rule[j].word;
            v.witness = *w;
            return v;
          }
        }
    }
  }
  Verdict v;
  v.depth = depth;
  return v;
}

struct IscIppVerdict {
  Verdict isc;
  Verdict ipp;
};

/// Equality of the supports (ISC) and of the distributions (IPP) of
/// theta^k(u), theta^k(v) for u, v in theta(a), k = 1..depth.
inline IscIppVerdict check_isc_ipp(const RandomSubstitution& s, int depth = 3,
                                   std::size_t cap = kDefaultCap, double tol = 1e-12) {
  IscIppVerdict out;
  out.isc.depth = out.ipp.depth = depth;
  bool isc_open = true, ipp_open = true;
  const auto levels = detail::levels_for_conditions(s, depth, cap);
  for (int k = 1; k <= depth && (isc_open || ipp_open); ++k) {
    const auto& lv = levels[k - 1];
    for (std::size_t a = 0; a < s.size(); ++a) {
      const auto& rule = s.rules[a];
      for (std::size_t j = 1; j < rule.size(); ++j) {
        auto refute = [&](Verdict& v, const Word& w) {
          v.kind = VerdictKind::Refuted;
          v.depth = k;
          v.letter = static_cast<int>(a);
          v.u = rule[0].word;
          v.v = rule[j].word;
          v.witness = w;
        };
        const auto f0 = detail::factors_of(lv, rule[0].word);
        const auto fj = detail::factors_of(lv, rule[j].word);
        if (detail::product_size(f0) > static_cast<double>(cap) ||
            detail::product_size(fj) > static_cast<double>(cap)) {
          // Too large to enumerate; disjoint nonempty sets still refute equality.
          if (detail::ProductIntersection(f0, fj).find())
            throw CapExceeded("identical set check exceeds cap");
          Word w;
          for (const auto* f : f0) w += f->entries().front().first;
          if (isc_open) { refute(out.isc, w); isc_open = false; }
          if (ipp_open) { refute(out.ipp, w); ipp_open = false; }
          continue;
        }
        const auto d0 = push_forward(lv, rule[0].word, cap);
        const auto dj = push_forward(lv, rule[j].word, cap);
        // Supports differ iff some word of one side is missing from the other.
        std::optional<Word> missing;
        for (const auto& e : d0.entries())
          if (!dj.contains(e.first)) { missing = e.first; break; }
        if (!missing)
          for (const auto& e : dj.entries())
            if (!d0.contains(e.first)) { missing = e.first; break; }
        if (missing) {
          if (isc_open) { refute(out.isc, *missing); isc_open = false; }
          if (ipp_open) { refute(out.ipp, *missing); ipp_open = false; }
          continue;
        }
        if (ipp_open)
          for (const auto& e : d0.entries()) {
            const double p0 = std::exp(e.second), pj = std::exp(dj.log_prob(e.first));
            if (std::abs(p0 - pj) > tol * std::max(p0, pj)) {
              refute(out.ipp, e.first);
              ipp_open = false;
              break;
            }
          }
      }
    }
  }
  return out;
}

/// Maps each legal window of length 2*radius+1 to -1 (centre is not a tile
/// start) or the letter whose tile starts at the centre.
struct WindowHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view w) const noexcept {
    return std::hash<std::string_view>{}(w);
  }
};

struct RecognitionTable {
  int radius = 0;
  std::unordered_map<Word, int, WindowHash, std::equal_to<>> answer;

  int lookup(std::string_view window) const {
    auto it = answer.find(window);
    if (it == answer.end()) throw WindowMissing("window not in recognition table");
    return it->second;
  }
};

enum class RecognisabilityStatus { Found, Unverified };

struct RecognisabilityResult {
  RecognisabilityStatus status = RecognisabilityStatus::Unverified;
  int tried_up_to = 0;
  std::optional<RecognitionTable> table;
  // Last conflicting window seen (for diagnostics).
  Word conflict;
};

namespace detail {

/// Longest legal cover needed for radius r: one margin letter on each side
/// plus enough tiles to hold a window starting anywhere in the first tile.
inline std::size_t recognition_cover_length(const RandomSubstitution& s, int r) {
  const std::size_t width = 2 * static_cast<std::size_t>(r) + 1;
  const std::size_t minlen = s.min_image_length();
  return (s.max_image_length() + width - 1 + minlen - 1) / minlen + 3;
}

}  // namespace detail

/// Each placement is a legal word x v y with the window inside a realisation
/// of theta(v), starting in the first tile and ending in the last one.
inline std::optional<RecognitionTable> try_recognition_radius(const RandomSubstitution& s, int r,
                                                              const std::vector<LegalLanguage>& lang,
                                                              Word* conflict = nullptr) {
  const std::size_t width = 2 * static_cast<std::size_t>(r) + 1;
  if (lang.size() < std::max(detail::recognition_cover_length(s, r), width))
    throw ValidationError("language too short for radius");
  const auto legal = [&](const Word& t) { return t.size() <= lang.size() && lang[t.size() - 1].contains(t); };
  RecognitionTable table;
  table.radius = r;
  bool ok = true;
  Word t, w;
  std::vector<std::size_t> starts;
  auto emit = [&](std::size_t o) {
    const std::size_t c = o + static_cast<std::size_t>(r);
    int ans = -1;
    for (std::size_t i = 0; i < starts.size(); ++i)
      if (starts[i] == c) ans = static_cast<Letter>(t[i + 1]);
    const std::string_view win(w.data() + o, width);
    auto it = table.answer.find(win);
    if (it == table.answer.end()) {
      table.answer.emplace(Word(win), ans);
    } else if (it->second != ans) {
      ok = false;
      if (conflict) *conflict = it->first;
    }
  };
  auto rec = [&](auto& self) -> void {
    if (!ok) return;
    if (!starts.empty()) {
      const std::size_t first = starts.size() > 1 ? starts[1] : w.size();
      bool extendable = false;
      for (std::size_t o = 0; o < first && ok; ++o) {
        if (o + width > w.size() || o + width <= starts.back()) continue;
        if (!extendable) {
          for (std::size_t y = 0; y < s.size() && !extendable; ++y)
            extendable = legal(t + single(static_cast<Letter>(y)));
          if (!extendable) return;
        }
        emit(o);
      }
      if (w.size() >= first - 1 + width) return;
    }
    for (std::size_t b = 0; b < s.size(); ++b) {
      t.push_back(static_cast<char>(b));
      if (legal(t)) {
        for (const auto& rz : s.rules[b]) {
          starts.push_back(w.size());
          w += rz.word;
          self(self);
          w.resize(starts.back());
          starts.pop_back();
        }
      }
      t.pop_back();
    }
  };
  for (std::size_t x = 0; x < s.size() && ok; ++x) {
    t = single(static_cast<Letter>(x));
    if (legal(t)) rec(rec);
  }
  if (!ok) return std::nullopt;
  const auto& windows = lang[width - 1];
  if (table.answer.size() != windows.size()) return std::nullopt;
  for (const auto& win : windows.words)
    if (!table.answer.count(win)) return std::nullopt;
  return table;
}

inline RecognisabilityResult find_recognisability_radius(const RandomSubstitution& s,
                                                         int max_radius = 6) {
  if (!check_compatibility(s).compatible)
    throw NotCompatible("recognisability is defined for compatible substitutions");
  RecognisabilityResult res;
  detail::LanguageBuilder builder(s);
  for (int r = 1; r <= max_radius; ++r) {
    res.tried_up_to = r;
    const std::size_t width = 2 * static_cast<std::size_t>(r) + 1;
    const auto& lang = builder.build(std::max(detail::recognition_cover_length(s, r), width));
    if (auto t = try_recognition_radius(s, r, lang, &res.conflict)) {
      res.status = RecognisabilityStatus::Found;
      res.table = std::move(t);
      return res;
    }
  }
  return res;
}

struct RecognisableCore {
  Word v;  // tile types
  Word w;  // the core itself, a realisation of theta(v)
  std::size_t offset = 0;
};

namespace detail {

struct Tile {
  std::size_t start;
  std::size_t len;
  Letter type;
  bool operator==(const Tile&) const = default;
};

// All decompositions of u into realisations (partial tiles allowed at both
// ends) whose cut points agree with the table inside its central zone.
inline std::vector<std::vector<Tile>> table_consistent_tilings(const RandomSubstitution& s,
                                                               const Word& u,
                                                               const RecognitionTable& table) {
  const std::size_t r = static_cast<std::size_t>(table.radius);
  const std::size_t width = 2 * r + 1;
  std::vector<int> ans(u.size(), -2);
  for (std::size_t c = r; c + r < u.size(); ++c) ans[c] = table.lookup(u.substr(c - r, width));
  std::vector<std::vector<Tile>> out;
  std::vector<Tile> cur;
  auto matches = [&](const Word& rw, std::size_t from, std::size_t at) {
    for (std::size_t i = from; i < rw.size() && at + i - from < u.size(); ++i)
      if (rw[i] != u[at + i - from]) return false;
    return true;
  };
  auto interior_ok = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi && c < u.size(); ++c)
      if (ans[c] >= 0) return false;
    return true;
  };
  auto rec = [&](auto& self, std::size_t pos) -> void {
    if (pos >= u.size()) {
      out.push_back(cur);
      return;
    }
    for (std::size_t a = 0; a < s.size(); ++a) {
      if (ans[pos] != -2 && ans[pos] != static_cast<int>(a)) continue;
      for (const auto& rz : s.rules[a]) {
        if (!matches(rz.word, 0, pos) || !interior_ok(pos + 1, pos + rz.word.size())) continue;
        cur.push_back({pos, rz.word.size(), static_cast<Letter>(a)});
        self(self, pos + rz.word.size());
        cur.pop_back();
      }
    }
  };
  // First (possibly partial) tile: u starts at offset j of some realisation.
  for (std::size_t a = 0; a < s.size(); ++a)
    for (const auto& rz : s.rules[a])
      for (std::size_t j = 1; j < rz.word.size(); ++j) {
        if (!matches(rz.word, j, 0) || !interior_ok(0, rz.word.size() - j)) continue;
        rec(rec, rz.word.size() - j);
      }
  rec(rec, 0);
  return out;
}

}  // namespace detail

/// Longest run of complete tiles shared by every decomposition of u that is
/// consistent with the table.
inline RecognisableCore recognisable_core(const RandomSubstitution& s, const Word& u,
                                          const RecognitionTable& table) {
  if (u.size() <= 2 * static_cast<std::size_t>(table.radius))
    throw ValidationError("word too short for the recognition radius");
  const auto tilings = detail::table_consistent_tilings(s, u, table);
  RecognisableCore core;
  if (tilings.empty()) throw WindowMissing("no tiling of the word agrees with the table");
  std::vector<detail::Tile> common;
  for (const auto& t : tilings.front()) {
    if (t.start + t.len > u.size()) continue;
    bool everywhere = true;
    for (std::size_t i = 1; i < tilings.size() && everywhere; ++i)
      everywhere = std::find(tilings[i].begin(), tilings[i].end(), t) != tilings[i].end();
    if (everywhere) common.push_back(t);
  }
  std::size_t best_first = 0, best_count = 0;
  for (std::size_t i = 0; i < common.size();) {
    std::size_t j = i + 1;
    while (j < common.size() && common[j].start == common[j - 1].start + common[j - 1].len) ++j;
    if (j - i > best_count) {
      best_first = i;
      best_count = j - i;
    }
    i = j;
  }
  if (best_count == 0) return core;
  core.offset = common[best_first].start;
  std::size_t end = core.offset;
  for (std::size_t i = best_first; i < best_first + best_count; ++i) {
    core.v.push_back(static_cast<char>(common[i].type));
    end = common[i].start + common[i].len;
  }
  core.w = u.substr(core.offset, end - core.offset);
  return core;
}

struct ConditionReport {
  bool primitive = false;
  bool compatible = false;
  CompatibilityResult compatibility;
  std::optional<Verdict> dsc;
  std::optional<Verdict> isc;
  std::optional<Verdict> ipp;
  RecognisabilityResult recognisability;
  int depth = 0;
  int recog_max = 0;

  bool dsc_verified() const { return dsc && dsc->verified(); }
  bool isc_ipp_verified() const { return isc && ipp && isc->verified() && ipp->verified(); }
  bool recognisable() const {
    return recognisability.status == RecognisabilityStatus::Found;
  }
};

inline ConditionReport assess_conditions(const RandomSubstitution& s, int depth = 3,
                                         int recog_max = 6, std::size_t cap = kDefaultCap) {
  ConditionReport rep;
  rep.depth = depth;
  rep.recog_max = recog_max;
  rep.primitive = is_primitive(substitution_matrix(s));
  rep.compatibility = check_compatibility(s);
  rep.compatible = rep.compatibility.compatible;
  if (!rep.primitive || !rep.compatible) return rep;
  rep.dsc = check_dsc(s, depth, cap);
  auto ii = check_isc_ipp(s, depth, cap);
  rep.isc = ii.isc;
  rep.ipp = ii.ipp;
  rep.recognisability = find_recognisability_radius(s, recog_max);
  return rep;
}

}  // namespace substspec
