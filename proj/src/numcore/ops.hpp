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

// Differentiable primitives recorded on a Tape. Shapes are checked eagerly
// and reported as kDimensionMismatch.

#include <cmath>
#include <utility>
#include <vector>

#include "numcore/tape.hpp"

namespace apcr::num {

namespace detail {

template <typename T>
void check_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.same_shape(b), ErrorCode::kDimensionMismatch,
          std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

template <typename T>
bool any_grad(Var<T> a) {
  return a.tape->requires_grad(a);
}

template <typename T>
bool any_grad(Var<T> a, Var<T> b) {
  return a.tape->requires_grad(a) || b.tape->requires_grad(b);
}

template <typename T>
void accumulate(Tape<T>& tape, Var<T> target, const Tensor<T>& delta) {
  if (!tape.requires_grad(target)) return;
  Tensor<T>& g = tape.grad_accumulator(target.id);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

template <typename T>
T sign(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

}  // namespace detail

template <typename T>
Var<T> operator+(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::check_same(av, bv, "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(std::move(out), detail::any_grad(a, b),
                        [a, b](Tape<T>& tape, const Tensor<T>& g) {
                          detail::accumulate(tape, a, g);
                          detail::accumulate(tape, b, g);
                        });
}

template <typename T>
Var<T> operator-(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::check_same(av, bv, "sub");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(std::move(out), detail::any_grad(a, b),
                        [a, b](Tape<T>& tape, const Tensor<T>& g) {
                          detail::accumulate(tape, a, g);
                          if (!tape.requires_grad(b)) return;
                          Tensor<T>& gb = tape.grad_accumulator(b.id);
                          for (std::size_t i = 0; i < gb.size(); ++i)
                            gb[i] -= g[i];
                        });
}

// Elementwise product.
template <typename T>
Var<T> operator*(Var<T> a, Var<T> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::check_same(av, bv, "mul");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(
      std::move(out), detail::any_grad(a, b),
      [a, b](Tape<T>& tape, const Tensor<T>& g) {
        const auto& av = tape.value(a);
        const auto& bv = tape.value(b);
        if (tape.requires_grad(a)) {
          Tensor<T>& ga = tape.grad_accumulator(a.id);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (tape.requires_grad(b)) {
          Tensor<T>& gb = tape.grad_accumulator(b.id);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
        }
      });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.storage()) v *= factor;
  return a.tape->record(std::move(out), detail::any_grad(a),
                        [a, factor](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>& ga = tape.grad_accumulator(a.id);
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            ga[i] += g[i] * factor;
                        });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.storage()) v = T(1) / (T(1) + std::exp(-v));
  const auto self = static_cast<std::uint32_t>(a.tape->size());
  return a.tape->record(std::move(out), detail::any_grad(a),
                        [a, self](Tape<T>& tape, const Tensor<T>& g) {
                          const auto& y = tape.value(Var<T>{&tape, self});
                          Tensor<T>& ga = tape.grad_accumulator(a.id);
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            ga[i] += g[i] * y[i] * (T(1) - y[i]);
                        });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.storage()) v = std::tanh(v);
  const auto self = static_cast<std::uint32_t>(a.tape->size());
  return a.tape->record(std::move(out), detail::any_grad(a),
                        [a, self](Tape<T>& tape, const Tensor<T>& g) {
                          const auto& y = tape.value(Var<T>{&tape, self});
                          Tensor<T>& ga = tape.grad_accumulator(a.id);
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            ga[i] += g[i] * (T(1) - y[i] * y[i]);
                        });
}

// Subgradient of |u| at u = 0 is taken as 0.
template <typename T>
Var<T> abs(Var<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.storage()) v = std::abs(v);
  return a.tape->record(std::move(out), detail::any_grad(a),
                        [a](Tape<T>& tape, const Tensor<T>& g) {
                          const auto& x = tape.value(a);
                          Tensor<T>& ga = tape.grad_accumulator(a.id);
                          for (std::size_t i = 0; i < ga.size(); ++i)
                            ga[i] += g[i] * detail::sign(x[i]);
                        });
}

template <typename T>
Var<T> sum(Var<T> a) {
  double total = 0;
  for (T v : a.value().storage()) total += v;
  return a.tape->record(Tensor<T>({1}, static_cast<T>(total)),
                        detail::any_grad(a),
                        [a](Tape<T>& tape, const Tensor<T>& g) {
                          Tensor<T>& ga = tape.grad_accumulator(a.id);
                          for (auto& v : ga.storage()) v += g[0];
                        });
}

// x[m,k] * w[n,k]^T -> [m,n]
template <typename T>
Var<T> matmul_nt(Var<T> x, Var<T> w) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.rows();
  require(wv.cols() == k, ErrorCode::kDimensionMismatch,
          "matmul_nt: " + shape_string(xv.shape()) + " x " +
              shape_string(wv.shape()) + "^T");
  Tensor<T> out = Tensor<T>::matrix(m, n);
  kernels::matmul_nt(xv.data(), wv.data(), out.data(), m, k, n);
  return x.tape->record(
      std::move(out), detail::any_grad(x, w),
      [x, w, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
        if (tape.requires_grad(x)) {
          kernels::matmul_nt_grad_a(g.data(), tape.value(w).data(),
                                    tape.grad_accumulator(x.id).data(), m, k,
                                    n);
        }
        if (tape.requires_grad(w)) {
          kernels::matmul_nt_grad_b(g.data(), tape.value(x).data(),
                                    tape.grad_accumulator(w.id).data(), m, k,
                                    n);
        }
      });
}

// a[m,n] + bias[n] broadcast over rows.
template <typename T>
Var<T> add_row(Var<T> a, Var<T> bias) {
  const auto& av = a.value();
  const auto& bv = bias.value();
  const std::size_t m = av.rows(), n = av.cols();
  require(bv.size() == n, ErrorCode::kDimensionMismatch,
          "add_row: bias " + shape_string(bv.shape()) + " for rows of " +
              shape_string(av.shape()));
  Tensor<T> out = av;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return a.tape->record(std::move(out), detail::any_grad(a, bias),
                        [a, bias, m, n](Tape<T>& tape, const Tensor<T>& g) {
                          detail::accumulate(tape, a, g);
                          if (!tape.requires_grad(bias)) return;
                          Tensor<T>& gb = tape.grad_accumulator(bias.id);
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j)
                              gb[j] += g[i * n + j];
                        });
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t count) {
  const auto& av = a.value();
  const std::size_t n = av.cols();
  require(count > 0 && begin + count <= av.rows(),
          ErrorCode::kDimensionMismatch,
          "slice_rows: rows [" + std::to_string(begin) + "," +
              std::to_string(begin + count) + ") of " +
              shape_string(av.shape()));
  Tensor<T> out = Tensor<T>::matrix(count, n);
  std::copy_n(av.data() + begin * n, count * n, out.data());
  return a.tape->record(std::move(out), detail::any_grad(a),
                        [a, begin, count, n](Tape<T>& tape,
                                             const Tensor<T>& g) {
                          T* ga = tape.grad_accumulator(a.id).data() + begin * n;
                          for (std::size_t i = 0; i < count * n; ++i)
                            ga[i] += g[i];
                        });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument,
          "concat_rows: no inputs");
  Tape<T>* tape = parts.front().tape;
  const std::size_t n = parts.front().value().cols();
  std::size_t rows = 0;
  bool grad = false;
  for (Var<T> p : parts) {
    require(p.value().cols() == n, ErrorCode::kDimensionMismatch,
            "concat_rows: column count differs");
    rows += p.value().rows();
    grad = grad || tape->requires_grad(p);
  }
  Tensor<T> out = Tensor<T>::matrix(rows, n);
  std::size_t offset = 0;
  for (Var<T> p : parts) {
    const auto& pv = p.value();
    std::copy_n(pv.data(), pv.size(), out.data() + offset);
    offset += pv.size();
  }
  return tape->record(std::move(out), grad,
                      [parts](Tape<T>& tape, const Tensor<T>& g) {
                        std::size_t offset = 0;
                        for (Var<T> p : parts) {
                          const std::size_t count = tape.value(p).size();
                          if (tape.requires_grad(p)) {
                            T* gp = tape.grad_accumulator(p.id).data();
                            for (std::size_t i = 0; i < count; ++i)
                              gp[i] += g[offset + i];
                          }
                          offset += count;
                        }
                      });
}

// Stacks one row from each source into an [M, cols] matrix.
template <typename T>
Var<T> gather_rows(const std::vector<std::pair<Var<T>, std::size_t>>& rows) {
  require(!rows.empty(), ErrorCode::kInvalidArgument,
          "gather_rows: no inputs");
  Tape<T>* tape = rows.front().first.tape;
  const std::size_t n = rows.front().first.value().cols();
  Tensor<T> out = Tensor<T>::matrix(rows.size(), n);
  bool grad = false;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto& [src, r] = rows[m];
    const auto& sv = src.value();
    require(sv.cols() == n && r < sv.rows(), ErrorCode::kDimensionMismatch,
            "gather_rows: row " + std::to_string(r) + " of " +
                shape_string(sv.shape()));
    std::copy_n(sv.data() + r * n, n, out.data() + m * n);
    grad = grad || tape->requires_grad(src);
  }
  return tape->record(std::move(out), grad,
                      [rows, n](Tape<T>& tape, const Tensor<T>& g) {
                        for (std::size_t m = 0; m < rows.size(); ++m) {
                          const auto& [src, r] = rows[m];
                          if (!tape.requires_grad(src)) continue;
                          T* gs = tape.grad_accumulator(src.id).data() + r * n;
                          for (std::size_t j = 0; j < n; ++j)
                            gs[j] += g[m * n + j];
                        }
                      });
}

// GRU state update z*h + (1-z)*c.
template <typename T>
Var<T> gru_blend(Var<T> z, Var<T> h, Var<T> c) {
  const auto& zv = z.value();
  const auto& hv = h.value();
  const auto& cv = c.value();
  detail::check_same(zv, hv, "gru_blend");
  detail::check_same(zv, cv, "gru_blend");
  Tensor<T> out = Tensor<T>::zeros_like(zv);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = zv[i] * hv[i] + (T(1) - zv[i]) * cv[i];
  Tape<T>* tape = z.tape;
  const bool grad = tape->requires_grad(z) || tape->requires_grad(h) ||
                    tape->requires_grad(c);
  return tape->record(
      std::move(out), grad, [z, h, c](Tape<T>& tape, const Tensor<T>& g) {
        const auto& zv = tape.value(z);
        const auto& hv = tape.value(h);
        const auto& cv = tape.value(c);
        if (tape.requires_grad(z)) {
          Tensor<T>& gz = tape.grad_accumulator(z.id);
          for (std::size_t i = 0; i < gz.size(); ++i)
            gz[i] += g[i] * (hv[i] - cv[i]);
        }
        if (tape.requires_grad(h)) {
          Tensor<T>& gh = tape.grad_accumulator(h.id);
          for (std::size_t i = 0; i < gh.size(); ++i) gh[i] += g[i] * zv[i];
        }
        if (tape.requires_grad(c)) {
          Tensor<T>& gc = tape.grad_accumulator(c.id);
          for (std::size_t i = 0; i < gc.size(); ++i)
            gc[i] += g[i] * (T(1) - zv[i]);
        }
      });
}

// sum_r w[r] * sum_c |pred[r,c] - target[r,c]|, accumulated in double.
// Rows with zero weight contribute exactly zero, which is what makes
// padded positions inert.
template <typename T>
Var<T> weighted_l1(Var<T> pred, Tensor<T> target, std::vector<T> row_weights) {
  const auto& pv = pred.value();
  detail::check_same(pv, target, "weighted_l1");
  const std::size_t m = pv.rows(), n = pv.cols();
  require(row_weights.size() == m, ErrorCode::kDimensionMismatch,
          "weighted_l1: row weight count");
  double total = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (row_weights[r] == T(0)) continue;
    double row_sum = 0;
    for (std::size_t c = 0; c < n; ++c)
      row_sum += std::abs(static_cast<double>(pv[r * n + c]) -
                          static_cast<double>(target[r * n + c]));
    total += static_cast<double>(row_weights[r]) * row_sum;
  }
  return pred.tape->record(
      Tensor<T>({1}, static_cast<T>(total)), detail::any_grad(pred),
      [pred, target = std::move(target), w = std::move(row_weights), m, n](
          Tape<T>& tape, const Tensor<T>& g) {
        const auto& pv = tape.value(pred);
        Tensor<T>& gp = tape.grad_accumulator(pred.id);
        for (std::size_t r = 0; r < m; ++r) {
          if (w[r] == T(0)) continue;
          const T scale = g[0] * w[r];
          for (std::size_t c = 0; c < n; ++c)
            gp[r * n + c] += scale * detail::sign(pv[r * n + c] - target[r * n + c]);
        }
      });
}

// sum_r w[r] * -log softmax(logits[r])[label[r]]
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::vector<int> labels,
                             std::vector<T> row_weights) {
  const auto& lv = logits.value();
  const std::size_t m = lv.rows(), k = lv.cols();
  require(labels.size() == m && row_weights.size() == m,
          ErrorCode::kDimensionMismatch,
          "softmax_cross_entropy: label/weight count");
  Tensor<T> probs = Tensor<T>::zeros_like(lv);
  double total = 0;
  for (std::size_t r = 0; r < m; ++r) {
    require(labels[r] >= 0 && static_cast<std::size_t>(labels[r]) < k,
            ErrorCode::kInvalidArgument,
            "softmax_cross_entropy: label out of range");
    const T* row = lv.data() + r * k;
    const T peak = *std::max_element(row, row + k);
    double z = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double e = std::exp(static_cast<double>(row[c] - peak));
      probs[r * k + c] = static_cast<T>(e);
      z += e;
    }
    for (std::size_t c = 0; c < k; ++c)
      probs[r * k + c] = static_cast<T>(probs[r * k + c] / z);
    total += static_cast<double>(row_weights[r]) *
             -(static_cast<double>(row[labels[r]] - peak) - std::log(z));
  }
  return logits.tape->record(
      Tensor<T>({1}, static_cast<T>(total)), detail::any_grad(logits),
      [logits, probs = std::move(probs), labels = std::move(labels),
       w = std::move(row_weights), m, k](Tape<T>& tape, const Tensor<T>& g) {
        Tensor<T>& gl = tape.grad_accumulator(logits.id);
        for (std::size_t r = 0; r < m; ++r) {
          const T scale = g[0] * w[r];
          if (scale == T(0)) continue;
          for (std::size_t c = 0; c < k; ++c) {
            const T onehot = static_cast<int>(c) == labels[r] ? T(1) : T(0);
            gl[r * k + c] += scale * (probs[r * k + c] - onehot);
          }
        }
      });
}

}  // namespace apcr::num
