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

#ifndef DIDAN_ENTITY_H_
#define DIDAN_ENTITY_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace didan {

// Lowercases ASCII letters, collapses whitespace runs to one space and strips
// leading/trailing punctuation and whitespace. Returns nullopt when nothing
// is left. Interior punctuation is kept ("U.K." -> "u.k").
std::optional<std::string> normalize_entity(std::string_view raw);

// Sorted, duplicate-free set of normalized entity strings.
class EntitySet {
 public:
  EntitySet() = default;

  // Normalizes every raw string and drops the ones that normalize to nothing.
  static EntitySet from_raw(std::span<const std::string> raw);
  // Takes strings that are already normalized; rejects empty ones.
  static EntitySet from_normalized(std::vector<std::string> items);

  void insert(std::string_view raw);
  bool contains(std::string_view normalized) const;
  bool intersects(const EntitySet& other) const;

  const std::vector<std::string>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  friend bool operator==(const EntitySet&, const EntitySet&) = default;

 private:
  std::vector<std::string> items_;
};

// 1.0 when the caption mentions at least one entity of the article body.
double compute_indicator(const EntitySet& body, const EntitySet& caption);

}  // namespace didan

#endif  // DIDAN_ENTITY_H_
