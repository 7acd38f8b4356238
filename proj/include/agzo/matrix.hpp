// Copyright 2026 The agzo-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AGZO_MATRIX_HPP_
#define AGZO_MATRIX_HPP_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "agzo/errors.hpp"
#include "agzo/ledger.hpp"
#include "agzo/rng.hpp"

namespace agzo {

// Dense row-major matrix of doubles. Every allocation and release is reported
// to the global ledger, which is what the memory experiments measure, so all
// buffers that matter to the footprint claims must be Matrix instances.
class Matrix {
 public:
  Matrix() noexcept = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) {
      throw dimension_error("Matrix dimensions must be positive");
    }
    data_.assign(rows * cols, 0.0);
    ledger::on_alloc(bytes());
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows)
      : Matrix(rows.size(), rows.size() ? rows.begin()->size() : 0) {
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != cols_) {
        throw dimension_error("ragged initializer list");
      }
      std::size_t j = 0;
      for (double v : row) (*this)(i, j++) = v;
      ++i;
    }
  }

  Matrix(const Matrix& other)
      : rows_(other.rows_), cols_(other.cols_), data_(other.data_) {
    if (!empty()) ledger::on_alloc(bytes());
  }

  Matrix(Matrix&& other) noexcept
      : rows_(other.rows_), cols_(other.cols_), data_(std::move(other.data_)) {
    other.rows_ = 0;
    other.cols_ = 0;
    other.data_.clear();
  }

  Matrix& operator=(const Matrix& other) {
    if (this != &other) {
      Matrix tmp(other);
      *this = std::move(tmp);
    }
    return *this;
  }

  Matrix& operator=(Matrix&& other) noexcept {
    if (this != &other) {
      if (!empty()) ledger::on_free(bytes());
      rows_ = other.rows_;
      cols_ = other.cols_;
      data_ = std::move(other.data_);
      other.rows_ = 0;
      other.cols_ = 0;
      other.data_.clear();
    }
    return *this;
  }

  ~Matrix() {
    if (!empty()) ledger::on_free(bytes());
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  std::uint64_t bytes() const {
    return static_cast<std::uint64_t>(size()) * sizeof(double);
  }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Drop the payload (and its ledger bytes) now instead of at scope exit.
  void release() { *this = Matrix(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace mat_detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw dimension_error(what);
}
}  // namespace mat_detail

// C = A * B
inline Matrix multiply(const Matrix& a, const Matrix& b) {
  mat_detail::require(a.cols() == b.rows(), "multiply: inner dims disagree");
  Matrix c(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

// C = A^T * B
inline Matrix multiply_at(const Matrix& a, const Matrix& b) {
  mat_detail::require(a.rows() == b.rows(), "multiply_at: dims disagree");
  Matrix c(a.cols(), b.cols());
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a.data() + p * n;
    const double* bp = b.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

// C = A * B^T
inline Matrix multiply_bt(const Matrix& a, const Matrix& b) {
  mat_detail::require(a.cols() == b.cols(), "multiply_bt: dims disagree");
  Matrix c(a.rows(), b.rows());
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// A += s * B
inline void axpy(Matrix& a, double s, const Matrix& b) {
  mat_detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                      "axpy: shapes disagree");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) pa[i] += s * pb[i];
}

inline void scale_inplace(Matrix& a, double s) {
  double* p = a.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) p[i] *= s;
}

inline Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

// Frobenius inner product.
inline double frob(const Matrix& a, const Matrix& b) {
  mat_detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                      "frob: shapes disagree");
  const double* pa = a.data();
  const double* pb = b.data();
  double acc = 0.0;
  for (std::size_t i = 0, n = a.size(); i < n; ++i) acc += pa[i] * pb[i];
  return acc;
}

// Frobenius norm.
inline double frob(const Matrix& a) {
  const double* p = a.data();
  double acc = 0.0;
  for (std::size_t i = 0, n = a.size(); i < n; ++i) acc += p[i] * p[i];
  return std::sqrt(acc);
}

inline double max_abs(const Matrix& a) {
  const double* p = a.data();
  double m = 0.0;
  for (std::size_t i = 0, n = a.size(); i < n; ++i)
    m = std::max(m, std::abs(p[i]));
  return m;
}

inline bool all_finite(const Matrix& a) {
  const double* p = a.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

inline Matrix take_cols(const Matrix& a, std::size_t w) {
  mat_detail::require(w >= 1 && w <= a.cols(), "take_cols: bad width");
  Matrix out(a.rows(), w);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < w; ++j) out(i, j) = a(i, j);
  return out;
}

// i.i.d. N(0,1) entries in row-major order from the stream addressed by key.
inline Matrix gauss_matrix(SeedKey key, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw dimension_error("gauss_matrix: dimensions must be positive");
  }
  Matrix m(rows, cols);
  NormalStream(key).fill(m.data(), m.size());
  return m;
}

}  // namespace agzo

#endif  // AGZO_MATRIX_HPP_
