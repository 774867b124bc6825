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

#ifndef DIDAN_ADAM_H_
#define DIDAN_ADAM_H_

#include <cstdint>
#include <map>
#include <string>

#include "didan/graph.h"
#include "didan/params.h"

namespace didan {

struct AdamHyperParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates per parameter plus the shared step count.
template <typename T>
struct AdamState {
  AdamHyperParams hyper;
  std::uint64_t step = 0;
  ParamStore<T> first_moment;
  ParamStore<T> second_moment;
};

// One bias-corrected ADAM update. Parameters without a gradient entry are
// left untouched; moments are created on first use.
template <typename T>
void adam_step(ParamStore<T>& params,
               const std::map<std::string, Tensor<T>, std::less<>>& grads,
               AdamState<T>& state);

}  // namespace didan

#endif  // DIDAN_ADAM_H_
