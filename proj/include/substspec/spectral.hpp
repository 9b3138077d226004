#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace substspec {

struct PerronData {
  Matrix matrix;
  double lambda = 0.0;
  std::vector<double> right;  // ||right||_1 = 1
};

/// Checks whether some power up to the Wielandt exponent (d-1)^2+1 is positive.
inline bool is_primitive(const Matrix& m) {
  const std::size_t d = m.size();
  if (d == 0) return false;
  std::vector<char> cur(d * d), base(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (m(i, j) < 0.0) return false;
      base[i * d + j] = m(i, j) > 0.0;
    }
  auto mul = [d](const std::vector<char>& x, const std::vector<char>& y) {
    std::vector<char> z(d * d, 0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        if (x[i * d + k])
          for (std::size_t j = 0; j < d; ++j) z[i * d + j] |= y[k * d + j];
    return z;
  };
  const std::size_t bound = (d - 1) * (d - 1) + 1;
  cur = base;
  std::size_t e = 1;
  while (e < bound) {
    cur = mul(cur, cur);
    e *= 2;
  }
  return std::all_of(cur.begin(), cur.end(), [](char c) { return c != 0; });
}

inline PerronData perron_eigen(const Matrix& m,
                               std::optional<std::vector<double>> start = std::nullopt,
                               int max_iter = 100000) {
  if (!is_primitive(m)) throw NotPrimitive("substitution matrix is not primitive");
  const std::size_t d = m.size();
  std::vector<double> v = start.value_or(std::vector<double>(d, 1.0));
  auto l1 = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double t : x) s += std::abs(t);
    return s;
  };
  {
    const double n = l1(v);
    for (double& t : v) t /= n;
  }
  // Iterates M + I, which has the same Perron vector.
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> w = m.apply(v);
    for (std::size_t i = 0; i < d; ++i) w[i] += v[i];
    const double n = l1(w);
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      w[i] /= n;
      diff = std::max(diff, std::abs(w[i] - v[i]));
    }
    v = std::move(w);
    if (diff < 1e-13) break;
  }
  PerronData out;
  out.matrix = m;
  out.lambda = l1(m.apply(v)) / l1(v);
  out.right = v;
  if (out.lambda <= 1.0 + 1e-9) throw NonExpanding("Perron root is not greater than one");
  return out;
}

}  // namespace substspec
