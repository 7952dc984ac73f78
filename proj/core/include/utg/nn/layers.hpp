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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "utg/nn/graph.hpp"
#include "utg/nn/init.hpp"
#include "utg/nn/ops.hpp"
#include "utg/nn/param_store.hpp"

namespace utg::nn {

/// Binds stored parameters onto a graph. A binder built from a mutable store
/// records trainable leaves; one built from a const store records constants,
/// which is what inference on an immutable model uses.
template <class T>
class Binder {
 public:
  explicit Binder(ParamStore<T>& store) : mutable_(&store), store_(&store) {}
  explicit Binder(const ParamStore<T>& store) : store_(&store) {}

  Var operator()(Graph<T>& g, const std::string& name) const {
    return mutable_ ? g.param(*mutable_, name) : g.constant(store_->value(name));
  }
  const ParamStore<T>& store() const noexcept { return *store_; }

 private:
  ParamStore<T>* mutable_ = nullptr;
  const ParamStore<T>* store_ = nullptr;
};

/// Adds `prefix.w` [in, out] (He normal) and `prefix.b` [out] (zeros).
inline void add_dense(ParamStore<float>& store, const std::string& prefix, std::size_t in, std::size_t out,
                      Rng& rng) {
  store.add(prefix + ".w", he_normal({in, out}, in, rng));
  store.add(prefix + ".b", Tensor<float>({out}));
}

/// Adds `prefix.w` [cout, cin, k, k] and `prefix.b` [cout].
inline void add_conv(ParamStore<float>& store, const std::string& prefix, std::size_t cin, std::size_t cout,
                     std::size_t k, Rng& rng) {
  store.add(prefix + ".w", he_normal({cout, cin, k, k}, cin * k * k, rng));
  store.add(prefix + ".b", Tensor<float>({cout}));
}

/// Adds `prefix.w` [cin, cout, k, k] and `prefix.b` [cout] for a transposed
/// convolution with the given stride.
inline void add_conv_transpose(ParamStore<float>& store, const std::string& prefix, std::size_t cin,
                               std::size_t cout, std::size_t k, std::size_t stride, Rng& rng) {
  const std::size_t fan_in = std::max<std::size_t>(1, cin * k * k / (stride * stride));
  store.add(prefix + ".w", he_normal({cin, cout, k, k}, fan_in, rng));
  store.add(prefix + ".b", Tensor<float>({cout}));
}

template <class T>
Var dense_layer(Graph<T>& g, const Binder<T>& p, const std::string& prefix, Var x) {
  return dense(g, x, p(g, prefix + ".w"), p(g, prefix + ".b"));
}

template <class T>
Var conv_layer(Graph<T>& g, const Binder<T>& p, const std::string& prefix, Var x, const ConvSpec& spec) {
  return conv2d(g, x, p(g, prefix + ".w"), p(g, prefix + ".b"), spec);
}

template <class T>
Var conv_transpose_layer(Graph<T>& g, const Binder<T>& p, const std::string& prefix, Var x, const ConvSpec& spec) {
  return conv_transpose2d(g, x, p(g, prefix + ".w"), p(g, prefix + ".b"), spec);
}

}  // namespace utg::nn
