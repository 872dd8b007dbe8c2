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

// Reverse-mode differentiation over a linear tape. Nodes are appended in
// evaluation order, so walking the tape backwards is a valid reverse
// topological order.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "numcore/tensor.hpp"

namespace apcr::num {

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A differentiable input (model parameter).
  Var<T> leaf(Tensor<T> value) {
    return push(std::move(value), /*requires_grad=*/true, {});
  }

  Var<T> constant(Tensor<T> value) {
    return push(std::move(value), /*requires_grad=*/false, {});
  }

  // Records an op result. The backward function is dropped when no parent
  // requires a gradient.
  Var<T> record(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    if (!requires_grad) backward = nullptr;
    return push(std::move(value), requires_grad, std::move(backward));
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_[v.id].value; }
  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient accumulator for a node, allocated as zeros on first use.
  Tensor<T>& grad_accumulator(std::uint32_t id) {
    Node& node = nodes_[id];
    if (node.grad.empty()) node.grad = Tensor<T>::zeros_like(node.value);
    return node.grad;
  }

  // Gradient of the last backward() call; zeros when the node was unused.
  Tensor<T> grad(Var<T> v) const {
    const Node& node = nodes_[v.id];
    return node.grad.empty() ? Tensor<T>::zeros_like(node.value) : node.grad;
  }

  void backward(Var<T> loss) {
    require(value(loss).size() == 1, ErrorCode::kInvalidArgument,
            "backward: loss must be a scalar, got shape " +
                shape_string(value(loss).shape()));
    for (Node& node : nodes_) node.grad = Tensor<T>();
    grad_accumulator(loss.id)[0] = T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.backward || node.grad.empty()) continue;
      node.backward(*this, node.grad);
    }
    for (const Node& node : nodes_) {
      if (node.requires_grad && !node.backward && !node.grad.empty() &&
          !node.grad.all_finite()) {
        fail(ErrorCode::kNonFinite,
             "backward: non-finite gradient reached a parameter");
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    nodes_.push_back(
        Node{std::move(value), Tensor<T>(), std::move(backward), requires_grad});
    return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
};

// Gradients of a scalar loss with respect to the given leaves, in order.
template <typename T>
std::vector<Tensor<T>> reverse_gradients(Tape<T>& tape, Var<T> loss,
                                         std::span<const Var<T>> leaves) {
  tape.backward(loss);
  std::vector<Tensor<T>> out;
  out.reserve(leaves.size());
  for (Var<T> leaf : leaves) out.push_back(tape.grad(leaf));
  return out;
}

}  // namespace apcr::num
