#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace substspec {

using Letter = std::uint8_t;

// Byte string of letter indices (not letter names).
using Word = std::string;

using CountVector = std::vector<std::size_t>;

inline Letter letter_at(const Word& w, std::size_t i) { return static_cast<Letter>(w[i]); }

inline CountVector abelianise(const Word& u, std::size_t alphabet_size) {
  CountVector out(alphabet_size, 0);
  for (char c : u) ++out[static_cast<Letter>(c)];
  return out;
}

inline Word single(Letter a) { return Word(1, static_cast<char>(a)); }

}  // namespace substspec
