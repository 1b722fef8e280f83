#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sefusion/errors.hpp"

namespace sefusion {

// Dense row-major matrix. Feature vectors are 1xD rows; a batch of samples
// is a BxD matrix with one sample per row.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      std::ostringstream msg;
      msg << "matrix " << rows_ << "x" << cols_ << " needs " << rows_ * cols_
          << " values, got " << values_.size();
      throw ShapeError(msg.str());
    }
  }

  // Nested-list constructor, mostly for tests: Matrix<double>{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw ShapeError("ragged matrix literal");
      values_.insert(values_.end(), row.begin(), row.end());
    }
  }

  static Matrix row(std::vector<T> values) {
    const std::size_t n = values.size();
    return Matrix(1, n, std::move(values));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::span<const T> row_view(std::size_t r) const {
    return std::span<const T>(values_).subspan(r * cols_, cols_);
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  template <typename U>
  Matrix<U> cast() const {
    std::vector<U> out(values_.begin(), values_.end());
    return Matrix<U>(rows_, cols_, std::move(out));
  }

  Matrix& operator+=(const Matrix& other) {
    require_same_shape(other, "+=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& other) {
    require_same_shape(other, "-=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
  }

  Matrix& operator*=(T scale) {
    for (auto& v : values_) v *= scale;
    return *this;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  void require_same_shape(const Matrix& other, const char* op) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
      throw ShapeError(std::string("shape mismatch in ") + op + ": " + shape_string() +
                       " vs " + other.shape_string());
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

template <typename T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  a += b;
  return a;
}

template <typename T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  a -= b;
  return a;
}

template <typename T>
Matrix<T> operator*(T scale, Matrix<T> a) {
  a *= scale;
  return a;
}

namespace detail {

inline std::string shapes(const char* op, std::size_t ar, std::size_t ac, std::size_t br,
                          std::size_t bc) {
  std::ostringstream msg;
  msg << op << ": incompatible shapes " << ar << "x" << ac << " and " << br << "x" << bc;
  return msg.str();
}

}  // namespace detail

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError(detail::shapes("matmul", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{0}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// a * b^T without materializing the transpose.
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError(detail::shapes("matmul_nt", a.rows(), a.cols(), b.cols(), b.rows()));
  }
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      T acc{0};
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

// a^T * b without materializing the transpose.
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(detail::shapes("matmul_tn", a.cols(), a.rows(), b.rows(), b.cols()));
  }
  Matrix<T> out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T aki = a(k, i);
      if (aki == T{0}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

// Columns of a followed by columns of b.
template <typename T>
Matrix<T> concat_cols(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError(detail::shapes("concat_cols", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  Matrix<T> out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.values().begin() + static_cast<std::ptrdiff_t>(r * out.cols());
    auto ra = a.row_view(r);
    auto rb = b.row_view(r);
    dst = std::copy(ra.begin(), ra.end(), dst);
    std::copy(rb.begin(), rb.end(), dst);
  }
  return out;
}

// Same flat values reinterpreted row-major: flat index k lands at
// (k / cols, k % cols).
template <typename T>
Matrix<T> reshape(const Matrix<T>& x, std::size_t rows, std::size_t cols) {
  if (x.rows() * x.cols() != rows * cols) {
    throw ShapeError("reshape: cannot view " + x.shape_string() + " as " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<T> values(x.values().begin(), x.values().end());
  return Matrix<T>(rows, cols, std::move(values));
}

// x + bias, with a 1xC bias broadcast over every row of x.
template <typename T>
Matrix<T> add_row_broadcast(Matrix<T> x, const Matrix<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError(detail::shapes("add_row_broadcast", x.rows(), x.cols(), bias.rows(),
                                    bias.cols()));
  }
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) += bias[c];
  return x;
}

template <typename T>
Matrix<T> relu(Matrix<T> x) {
  for (auto& v : x.values()) v = v > T{0} ? v : T{0};
  return x;
}

// Logistic function, kept strictly inside (0, 1): results that would round
// to exactly 0 or 1 are clamped to the nearest representable interior value.
template <typename T>
T sigmoid_scalar(T v) {
  static const T below_one = std::nextafter(T{1}, T{0});
  static const T above_zero = std::numeric_limits<T>::denorm_min();
  // Branch on sign so exp never overflows.
  if (v >= T{0}) {
    const T e = std::exp(-v);
    return std::min(T{1} / (T{1} + e), below_one);
  }
  const T e = std::exp(v);
  return std::max(e / (T{1} + e), above_zero);
}

template <typename T>
Matrix<T> sigmoid(Matrix<T> x) {
  for (auto& v : x.values()) v = sigmoid_scalar(v);
  return x;
}

// Row-wise softmax with max subtraction. Accepts any number of rows; the
// single-row case is the one the model uses per sample.
template <typename T>
Matrix<T> softmax(Matrix<T> x) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    T mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    T total{0};
    for (std::size_t c = 0; c < x.cols(); ++c) {
      x(r, c) = std::exp(x(r, c) - mx);
      total += x(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) /= total;
  }
  return x;
}

// Row-wise log-sum-exp.
template <typename T>
std::vector<T> logsumexp_rows(const Matrix<T>& x) {
  std::vector<T> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    T mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    T total{0};
    for (std::size_t c = 0; c < x.cols(); ++c) total += std::exp(x(r, c) - mx);
    out[r] = mx + std::log(total);
  }
  return out;
}

// Batched form of `weights * reshape(row, m, D/m)`: every row of `x` (width
// D) is viewed as m row-major chunks of width D/m, and output row b is the
// weights(b, .)-weighted sum of those chunks.
template <typename T>
Matrix<T> modal_mix(const Matrix<T>& x, const Matrix<T>& weights) {
  const std::size_t m = weights.cols();
  if (x.rows() != weights.rows() || m == 0 || x.cols() % m != 0) {
    throw ShapeError(detail::shapes("modal_mix", x.rows(), x.cols(), weights.rows(), m));
  }
  const std::size_t width = x.cols() / m;
  Matrix<T> out(x.rows(), width);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    for (std::size_t k = 0; k < m; ++k) {
      const T w = weights(b, k);
      const std::size_t offset = k * width;
      for (std::size_t j = 0; j < width; ++j) out(b, j) += w * x(b, offset + j);
    }
  }
  return out;
}

template <typename T>
T sum(const Matrix<T>& x) {
  T acc{0};
  for (const auto& v : x.values()) acc += v;
  return acc;
}

template <typename T>
bool all_finite(const Matrix<T>& x) {
  return std::all_of(x.values().begin(), x.values().end(),
                     [](T v) { return std::isfinite(v); });
}

// Copies the listed rows, in order. Used to cut mini-batches.
template <typename T>
Matrix<T> gather_rows(const Matrix<T>& x, std::span<const std::size_t> rows) {
  Matrix<T> out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row_view(rows[i]);
    std::copy(src.begin(), src.end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(i * x.cols()));
  }
  return out;
}

}  // namespace sefusion
