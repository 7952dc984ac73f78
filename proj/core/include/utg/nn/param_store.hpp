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

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "utg/nn/tensor.hpp"

namespace utg::nn {

/// Named trainable tensors plus their gradients and Adam moments.
///
/// Iteration order is the lexicographic order of names, which keeps
/// optimizer updates and serialization deterministic.
template <class T>
class ParamStore {
 public:
  struct Entry {
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> first_moment;
    Tensor<T> second_moment;
  };

  Tensor<T>& add(const std::string& name, Tensor<T> value) {
    if (entries_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    Entry e;
    e.grad = Tensor<T>(value.shape());
    e.first_moment = Tensor<T>(value.shape());
    e.second_moment = Tensor<T>(value.shape());
    e.value = std::move(value);
    return entries_.emplace(name, std::move(e)).first->second.value;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor<T>& value(const std::string& name) { return entry(name).value; }
  const Tensor<T>& value(const std::string& name) const { return entry(name).value; }
  Tensor<T>& grad(const std::string& name) { return entry(name).grad; }
  const Tensor<T>& grad(const std::string& name) const { return entry(name).grad; }

  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
  }

  std::map<std::string, Entry>& entries() noexcept { return entries_; }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  void zero_grad() {
    for (auto& [_, e] : entries_) e.grad.fill(T{0});
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }

  std::int64_t step() const noexcept { return step_; }
  void advance_step() noexcept { ++step_; }

  /// Copies values (not optimizer state) into a store of another precision.
  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, e] : entries_) out.add(name, e.value.template cast<U>());
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

}  // namespace utg::nn
