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
#include <cstdint>
#include <span>
#include <vector>

#include "utg/nn/graph.hpp"

namespace utg::nn {

// Elementwise. Binary ops require identical shapes.
template <class T> Var add(Graph<T>& g, Var a, Var b);
template <class T> Var sub(Graph<T>& g, Var a, Var b);
template <class T> Var mul(Graph<T>& g, Var a, Var b);
template <class T> Var scale(Graph<T>& g, Var a, T factor);
template <class T> Var add_scalar(Graph<T>& g, Var a, T offset);
template <class T> Var square(Graph<T>& g, Var a);
template <class T> Var exp(Graph<T>& g, Var a);
template <class T> Var relu(Graph<T>& g, Var a);
template <class T> Var sigmoid(Graph<T>& g, Var a);
template <class T> Var tanh(Graph<T>& g, Var a);

// Reductions accumulate in double and return a rank-0 tensor.
template <class T> Var sum(Graph<T>& g, Var a);
template <class T> Var mean(Graph<T>& g, Var a);

template <class T> Var reshape(Graph<T>& g, Var a, Shape shape);
template <class T> Var stop_gradient(Graph<T>& g, Var a);

/// y = x W + b for x [N, in], W [in, out], b [out].
template <class T> Var dense(Graph<T>& g, Var x, Var w, Var b);

/// Which kernel taps a convolution reads. Masked taps are skipped outright,
/// so their weights receive exactly zero gradient and the inputs under them
/// cannot influence the output.
enum class MaskType { kA, kB };

/// Raster-causal tap mask for a kh x kw kernel (1 = visible). Type A hides
/// the centre tap and everything after it; type B keeps the centre.
std::vector<std::uint8_t> causal_mask(std::size_t kh, std::size_t kw, MaskType type);

struct ConvSpec {
  std::size_t stride = 1;
  std::size_t padding = 0;
  /// kh*kw entries, row-major; empty means every tap is visible.
  std::vector<std::uint8_t> tap_mask;
};

/// x [N, Cin, H, W], w [Cout, Cin, kh, kw], b [Cout] -> [N, Cout, Ho, Wo].
template <class T> Var conv2d(Graph<T>& g, Var x, Var w, Var b, const ConvSpec& spec);

/// Adjoint of conv2d. x [N, Cin, H, W], w [Cin, Cout, kh, kw], b [Cout]
/// -> [N, Cout, (H-1)*stride - 2*pad + kh, ...].
template <class T> Var conv_transpose2d(Graph<T>& g, Var x, Var w, Var b, const ConvSpec& spec);

/// [N, C, H, W] -> [N*H*W, C] and back.
template <class T> Var channels_to_rows(Graph<T>& g, Var x);
template <class T> Var rows_to_channels(Graph<T>& g, Var rows, std::size_t n, std::size_t h,
                                        std::size_t w);

/// Rows of `table` [V, K] selected by `indices` -> [indices.size(), K].
template <class T> Var gather_rows(Graph<T>& g, Var table, std::span<const std::int32_t> indices);

/// Mean negative log-likelihood of integer targets under softmax(logits)
/// taken over axis 1. logits [N, V] or [N, V, H, W]; one target per
/// (n, h, w) position in row-major order.
template <class T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const std::int32_t> targets);

}  // namespace utg::nn
