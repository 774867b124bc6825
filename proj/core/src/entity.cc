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

#include "didan/entity.h"

#include <algorithm>
#include <stdexcept>

namespace didan {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

}  // namespace

std::optional<std::string> normalize_entity(std::string_view raw) {
  std::string collapsed;
  collapsed.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
  }
  auto strippable = [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return is_punct(c) || is_space(c);
  };
  auto first = std::find_if_not(collapsed.begin(), collapsed.end(), strippable);
  auto last = std::find_if_not(collapsed.rbegin(), collapsed.rend(), strippable).base();
  if (first >= last) return std::nullopt;
  return std::string(first, last);
}

EntitySet EntitySet::from_raw(std::span<const std::string> raw) {
  EntitySet set;
  for (const auto& r : raw) set.insert(r);
  return set;
}

EntitySet EntitySet::from_normalized(std::vector<std::string> items) {
  for (const auto& s : items) {
    if (s.empty()) throw std::invalid_argument("entity set: empty entity string");
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  EntitySet set;
  set.items_ = std::move(items);
  return set;
}

void EntitySet::insert(std::string_view raw) {
  auto norm = normalize_entity(raw);
  if (!norm) return;
  auto it = std::lower_bound(items_.begin(), items_.end(), *norm);
  if (it == items_.end() || *it != *norm) items_.insert(it, std::move(*norm));
}

bool EntitySet::contains(std::string_view normalized) const {
  return std::binary_search(items_.begin(), items_.end(), normalized);
}

bool EntitySet::intersects(const EntitySet& other) const {
  auto a = items_.begin();
  auto b = other.items_.begin();
  while (a != items_.end() && b != other.items_.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

double compute_indicator(const EntitySet& body, const EntitySet& caption) {
  return body.intersects(caption) ? 1.0 : 0.0;
}

}  // namespace didan
