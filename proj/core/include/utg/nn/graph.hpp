// Copyright 2026 The utg Authors
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

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "utg/nn/param_store.hpp"
#include "utg/nn/tensor.hpp"

namespace utg::nn {

/// Handle to a node recorded on a Graph.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
/// tape backwards is a valid topological order for gradient propagation.
///
/// A graph lives for one forward/backward pass; values are computed eagerly.
template <class T>
class Graph {
 public:
  /// Called during backward with the tape and the id of the node being
  /// processed. It reads `grad(self)` and accumulates into its parents.
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Var constant(Tensor<T> value) { return push(std::move(value), {}, nullptr, false, nullptr); }

  Var variable(Tensor<T> value) { return push(std::move(value), {}, nullptr, true, nullptr); }

  /// Leaf bound to a stored parameter; backward() adds its gradient into
  /// the store's gradient buffer.
  Var param(ParamStore<T>& store, const std::string& name) {
    auto& entry = store.entry(name);
    return push(entry.value, {}, nullptr, true, &entry.grad);
  }

  Var record(Tensor<T> value, std::vector<Var> parents, Backward fn) {
    bool needs = false;
    for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
    if (!needs) fn = nullptr;
    return push(std::move(value), std::move(parents), std::move(fn), needs, nullptr);
  }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const std::vector<Var>& parents(std::size_t id) const { return nodes_.at(id).parents; }
  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }

  /// Gradient buffer of a node, allocated on first use.
  Tensor<T>& grad_mut(Var v) {
    auto& n = nodes_.at(v.id);
    if (n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }
  Tensor<T>& grad_mut(std::size_t id) { return grad_mut(Var{id}); }

  const Tensor<T>& grad(Var v) {
    return grad_mut(v);
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node that requires it.
  void backward(Var loss) {
    if (value(loss).size() != 1) {
      throw ShapeError("backward() needs a scalar loss, got " + shape_string(value(loss).shape()));
    }
    grad_mut(loss)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() != n.value.size()) continue;
      if (n.backward) n.backward(*this, i);
      if (n.sink) {
        auto dst = n.sink->data();
        auto src = n.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::vector<Var> parents;
    Backward backward;
    bool requires_grad = false;
    Tensor<T>* sink = nullptr;
  };

  Var push(Tensor<T> value, std::vector<Var> parents, Backward fn, bool needs_grad, Tensor<T>* sink) {
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backward = std::move(fn);
    n.requires_grad = needs_grad;
    n.sink = sink;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace utg::nn
