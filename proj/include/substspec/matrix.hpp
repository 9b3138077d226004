#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace substspec {

// Small dense square matrix, row-major. Sized for alphabets of a handful of
// letters; nothing here is tuned for large d.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& row : rows) {
      assert(row.size() == n_);
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const noexcept { return n_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  Matrix operator*(const Matrix& other) const {
    assert(other.n_ == n_);
    Matrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < n_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < n_; ++j) out(i, j) += a * other(k, j);
      }
    return out;
  }

  std::vector<double> apply(std::span<const double> v) const {
    assert(v.size() == n_);
    std::vector<double> out(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  Matrix power(unsigned k) const {
    Matrix result = identity(n_);
    Matrix base = *this;
    while (k > 0) {
      if (k & 1U) result = result * base;
      base = base * base;
      k >>= 1U;
    }
    return result;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace substspec
