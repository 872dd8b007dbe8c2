/*
 * Copyright 2026 The apcr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "common/error.hpp"

namespace apcr::num {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

// Dense row-major array. Every extent is positive; a default-constructed
// tensor is the "absent" state and has rank 0 and no data.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    data_.assign(checked_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    require(checked_size(shape_) == data_.size(),
            ErrorCode::kDimensionMismatch,
            "tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_string(shape_));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor zeros_like(const Tensor& other) {
    Tensor out;
    out.shape_ = other.shape_;
    out.data_.assign(other.data_.size(), T(0));
    return out;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-1 tensors are treated as a single row.
  std::size_t rows() const {
    return shape_.size() <= 1 ? (data_.empty() ? 0 : 1) : shape_[0];
  }
  std::size_t cols() const {
    const std::size_t r = rows();
    return r == 0 ? 0 : data_.size() / r;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }
  std::span<T> row(std::size_t r) {
    return std::span<T>(data_).subspan(r * cols(), cols());
  }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols(), cols());
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  static std::size_t checked_size(const Shape& shape) {
    require(!shape.empty(), ErrorCode::kInvalidArgument,
            "tensor shape must have at least one extent");
    std::size_t n = 1;
    for (std::size_t e : shape) {
      require(e > 0, ErrorCode::kInvalidArgument,
              "tensor extents must be positive, got " + shape_string(shape));
      n *= e;
    }
    return n;
  }

  Shape shape_;
  std::vector<T> data_;
};

namespace kernels {

// c[m,n] = a[m,k] * b[n,k]^T. The transpose is materialized so the inner
// loop is a contiguous axpy, which the compiler vectorizes without needing
// to reassociate a floating-point reduction.
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
               std::size_t n) {
  thread_local std::vector<T> bt;
  bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t kk = 0; kk < k; ++kk) bt[kk * n + j] = b[j * k + kk];
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    std::fill(ci, ci + n, T(0));
    const T* ai = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = ai[kk];
      const T* btk = bt.data() + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * btk[j];
    }
  }
}

// da[m,k] += g[m,n] * b[n,k]
template <typename T>
void matmul_nt_grad_a(const T* g, const T* b, T* da, std::size_t m,
                      std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* dai = da + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T gij = g[i * n + j];
      if (gij == T(0)) continue;
      const T* bj = b + j * k;
      for (std::size_t kk = 0; kk < k; ++kk) dai[kk] += gij * bj[kk];
    }
  }
}

// db[n,k] += g[m,n]^T * a[m,k]
template <typename T>
void matmul_nt_grad_b(const T* g, const T* a, T* db, std::size_t m,
                      std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T gij = g[i * n + j];
      if (gij == T(0)) continue;
      T* dbj = db + j * k;
      for (std::size_t kk = 0; kk < k; ++kk) dbj[kk] += gij * ai[kk];
    }
  }
}

}  // namespace kernels

// Plain (non-differentiable) y = x * w^T, used by inference-only paths.
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& x, const Tensor<T>& w) {
  require(x.cols() == w.cols(), ErrorCode::kDimensionMismatch,
          "matmul_nt: inner dimensions differ (" + shape_string(x.shape()) +
              " vs " + shape_string(w.shape()) + ")");
  Tensor<T> out = Tensor<T>::matrix(x.rows(), w.rows());
  kernels::matmul_nt(x.data(), w.data(), out.data(), x.rows(), x.cols(),
                     w.rows());
  return out;
}

}  // namespace apcr::num
