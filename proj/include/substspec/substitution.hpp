#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "word.hpp"

namespace substspec {

struct Realisation {
  Word word;
  double prob;
};

/// A random substitution on a finite alphabet. Letters are indices 0..d-1;
/// `names` maps each index back to its printable character.
struct RandomSubstitution {
  std::vector<char> names;
  std::vector<std::vector<Realisation>> rules;
  std::string label;

  std::size_t size() const noexcept { return names.size(); }

  int letter_index(char name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  Word encode(const std::string& text) const {
    Word out;
    out.reserve(text.size());
    for (char c : text) {
      const int i = letter_index(c);
      if (i < 0) throw ValidationError(std::string("unknown letter '") + c + "'");
      out.push_back(static_cast<char>(i));
    }
    return out;
  }

  std::string decode(const Word& w) const {
    std::string out;
    out.reserve(w.size());
    for (char c : w) out.push_back(names.at(static_cast<Letter>(c)));
    return out;
  }

  std::size_t min_image_length() const {
    std::size_t m = SIZE_MAX;
    for (const auto& rule : rules)
      for (const auto& r : rule) m = std::min(m, r.word.size());
    return m;
  }

  std::size_t max_image_length() const {
    std::size_t m = 0;
    for (const auto& rule : rules)
      for (const auto& r : rule) m = std::max(m, r.word.size());
    return m;
  }
};

using RuleSpec = std::vector<std::pair<std::string, double>>;

/// Builds a substitution from printable rules, e.g.
/// from_strings("ab", {{{"ab", .5}, {"ba", .5}}, {{"a", 1}}}).
/// Does not validate; call validate() on the result.
inline RandomSubstitution from_strings(const std::string& alphabet,
                                       const std::vector<RuleSpec>& rules,
                                       std::string label = {}) {
  RandomSubstitution s;
  s.names.assign(alphabet.begin(), alphabet.end());
  s.label = std::move(label);
  if (rules.size() != alphabet.size())
    throw ValidationError("rule count does not match alphabet size");
  for (const auto& rule : rules) {
    std::vector<Realisation> rs;
    for (const auto& [text, p] : rule) rs.push_back({s.encode(text), p});
    s.rules.push_back(std::move(rs));
  }
  return s;
}

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

inline ValidationReport validate(const RandomSubstitution& s) {
  ValidationReport rep;
  const std::size_t d = s.size();
  if (d == 0) rep.violations.emplace_back("empty alphabet");
  if (d > 255) rep.violations.emplace_back("alphabet larger than 255 letters");
  if (s.rules.size() != d) {
    rep.violations.emplace_back("rule count does not match alphabet size");
    return rep;
  }
  std::set<char> seen_names;
  for (char c : s.names)
    if (!seen_names.insert(c).second)
      rep.violations.push_back(std::string("duplicate letter name '") + c + "'");

  char buf[160];
  for (std::size_t a = 0; a < d; ++a) {
    const char name = s.names[a];
    if (s.rules[a].empty()) {
      rep.violations.push_back(std::string("letter '") + name + "' has no realisations");
      continue;
    }
    double sum = 0.0;
    std::set<Word> words;
    for (const auto& r : s.rules[a]) {
      sum += r.prob;
      if (!(r.prob > 0.0 && r.prob <= 1.0)) {
        std::snprintf(buf, sizeof buf, "letter '%c': probability %.12g outside (0,1]", name, r.prob);
        rep.violations.emplace_back(buf);
      }
      if (r.word.empty())
        rep.violations.push_back(std::string("letter '") + name + "': empty image word");
      for (char c : r.word)
        if (static_cast<Letter>(c) >= d)
          rep.violations.push_back(std::string("letter '") + name + "': image uses unknown letter");
      if (!words.insert(r.word).second)
        rep.violations.push_back(std::string("letter '") + name + "': duplicate realisation " +
                                 s.decode(r.word));
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::snprintf(buf, sizeof buf, "letter '%c': probabilities sum to %.12g", name, sum);
      rep.violations.emplace_back(buf);
    }
  }
  return rep;
}

inline void require_valid(const RandomSubstitution& s) {
  auto rep = validate(s);
  if (!rep.ok()) throw ValidationError(rep.violations.front());
}

/// M(i,j) = expected number of occurrences of letter i in the image of letter j.
/// Expected letter counts; exact integers for letters whose realisations
/// share an abelianisation.
inline Matrix substitution_matrix(const RandomSubstitution& s) {
  const std::size_t d = s.size();
  Matrix m(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto first = abelianise(s.rules[j].front().word, d);
    bool shared = true;
    for (const auto& r : s.rules[j]) shared = shared && abelianise(r.word, d) == first;
    if (shared) {
      for (std::size_t i = 0; i < d; ++i) m(i, j) = static_cast<double>(first[i]);
      continue;
    }
    for (const auto& r : s.rules[j])
      for (char c : r.word) m(static_cast<Letter>(c), j) += r.prob;
  }
  return m;
}

}  // namespace substspec
