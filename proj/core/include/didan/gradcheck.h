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

#ifndef DIDAN_GRADCHECK_H_
#define DIDAN_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "didan/graph.h"
#include "didan/params.h"

namespace didan {

// Builds a scalar loss from the given parameters inside a fresh graph.
using LossBuilder = std::function<NodeId(Graph<double>&)>;

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-3;
  // Relative error is |a - n| / max(|a|, |n|, floor); entries where both
  // gradients are exactly zero report 0.
  double floor = 1e-6;
};

// Compares backward() against central differences for every entry of every
// parameter. `build_loss` must be deterministic.
GradCheckReport finite_difference_check(const LossBuilder& build_loss,
                                        ParamStore<double>& params,
                                        const GradCheckOptions& options = {});

}  // namespace didan

#endif  // DIDAN_GRADCHECK_H_
