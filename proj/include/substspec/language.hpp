#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "substitution.hpp"
#include "word.hpp"

namespace substspec {

inline constexpr std::size_t kMaxCoverLength = 24;

struct LegalLanguage {
  std::size_t n = 0;
  std::vector<Word> words;  // sorted
  int iterations = 0;       // passes until the level stopped growing

  bool contains(const Word& u) const { return std::binary_search(words.begin(), words.end(), u); }

  /// Position in `words`, or -1.
  long index_of(const Word& u) const {
    auto it = std::lower_bound(words.begin(), words.end(), u);
    if (it == words.end() || *it != u) return -1;
    return static_cast<long>(it - words.begin());
  }

  std::size_t size() const noexcept { return words.size(); }
};

namespace detail {

// Each level l is the least set S with: every l-window of theta(v') that
// starts inside the first tile lies in S, for all legal covers v' of length
// <= l. Covers shorter than l are checked against finished lower levels.
class LanguageBuilder {
 public:
  explicit LanguageBuilder(const RandomSubstitution& s) : s_(s) {}

  /// Levels 1..n; levels already built by earlier calls are reused.
  const std::vector<LegalLanguage>& build(std::size_t n) {
    for (std::size_t l = levels_.size() + 1; l <= n; ++l) {
      current_.clear();
      ell_ = l;
      int passes = 0;
      while (true) {
        ++passes;
        const std::size_t before = current_.size();
        for (std::size_t a = 0; a < s_.size(); ++a) {
          const Word cover = single(static_cast<Letter>(a));
          if (!is_legal_cover(cover)) continue;
          std::set<Word> partial;
          for (const auto& r : s_.rules[a])
            for (std::size_t i = 0; i < r.word.size(); ++i) partial.insert(r.word.substr(i));
          extend(cover, std::move(partial));
        }
        if (current_.size() == before) break;
      }
      LegalLanguage lang;
      lang.n = l;
      lang.words.assign(current_.begin(), current_.end());
      std::sort(lang.words.begin(), lang.words.end());
      lang.iterations = passes;
      lower_.push_back(current_);
      levels_.push_back(std::move(lang));
    }
    return levels_;
  }

 private:
  bool is_legal_cover(const Word& v) const {
    if (v.size() < ell_) return lower_[v.size() - 1].count(v) > 0;
    if (v.size() == ell_) return current_.count(v) > 0 || ell_ == 1;
    return false;
  }

  void extend(const Word& cover, std::set<Word> partial) {
    std::set<Word> open;
    for (auto& p : partial) {
      if (p.size() >= ell_)
        current_.insert(p.substr(0, ell_));
      else
        open.insert(p);
    }
    if (open.empty()) return;
    if (cover.size() >= kMaxCoverLength)
      throw CapExceeded("cover length exceeds " + std::to_string(kMaxCoverLength));
    for (std::size_t b = 0; b < s_.size(); ++b) {
      Word next = cover + single(static_cast<Letter>(b));
      if (!is_legal_cover(next)) continue;
      std::set<Word> grown;
      for (const auto& p : open)
        for (const auto& r : s_.rules[b]) grown.insert(p + r.word);
      extend(next, std::move(grown));
    }
  }

  const RandomSubstitution& s_;
  std::vector<LegalLanguage> levels_;
  std::vector<std::unordered_set<Word>> lower_;
  std::unordered_set<Word> current_;
  std::size_t ell_ = 0;
};

}  // namespace detail

/// Legal languages L^1..L^n (result[l-1] has words of length l).
inline std::vector<LegalLanguage> legal_language_upto(const RandomSubstitution& s, std::size_t n) {
  if (n == 0) throw ValidationError("word length must be positive");
  return detail::LanguageBuilder(s).build(n);
}

inline LegalLanguage legal_words(const RandomSubstitution& s, std::size_t n) {
  return legal_language_upto(s, n).back();
}

inline bool is_legal(const RandomSubstitution& s, const Word& u) {
  return legal_words(s, u.size()).contains(u);
}

}  // namespace substspec
