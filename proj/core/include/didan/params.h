/* Copyright 2026 The DIDAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DIDAN_PARAMS_H_
#define DIDAN_PARAMS_H_

#include <map>
#include <string>

#include "didan/tensor.h"

namespace didan {

// Named learnable tensors, iterated in name order so serialization and
// optimizer updates are deterministic.
template <typename T>
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor<T>, std::less<>>;

  void set(const std::string& name, Tensor<T> value) {
    entries_[name] = std::move(value);
  }
  bool contains(std::string_view name) const {
    return entries_.find(name) != entries_.end();
  }
  const Tensor<T>& get(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
    }
    return it->second;
  }
  Tensor<T>& get(std::string_view name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
    }
    return it->second;
  }

  const Map& entries() const { return entries_; }
  Map& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.size();
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, t] : entries_) out.set(name, t.template cast<U>());
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) = default;

 private:
  Map entries_;
};

}  // namespace didan

#endif  // DIDAN_PARAMS_H_
