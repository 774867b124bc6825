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

#include "didan/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace didan {
namespace {

double evaluate(const LossBuilder& build_loss, const ParamStore<double>& params) {
  Graph<double> g(&params);
  const NodeId loss = build_loss(g);
  const Tensor<double>& v = g.value(loss);
  if (v.size() != 1) {
    throw ShapeError("finite_difference_check: loss is not scalar, shape " +
                     shape_to_string(v.shape()));
  }
  return v[0];
}

}  // namespace

GradCheckReport finite_difference_check(const LossBuilder& build_loss,
                                        ParamStore<double>& params,
                                        const GradCheckOptions& options) {
  Gradients<double> analytic;
  {
    Graph<double> g(&params);
    const NodeId loss = build_loss(g);
    analytic = g.backward(loss);
  }

  GradCheckReport report;
  for (auto& [name, tensor] : params.entries()) {
    ParamCheck check;
    check.name = name;
    auto it = analytic.params.find(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double a = it == analytic.params.end() ? 0.0 : it->second[i];
      const double saved = tensor[i];
      tensor[i] = saved + options.step;
      const double up = evaluate(build_loss, params);
      tensor[i] = saved - options.step;
      const double down = evaluate(build_loss, params);
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);

      double rel = 0.0;
      if (a != 0.0 || numeric != 0.0) {
        const double denom =
            std::max({std::abs(a), std::abs(numeric), options.floor});
        rel = std::abs(a - numeric) / denom;
      }
      if (i == 0 || rel > check.max_rel_error) {
        check.max_rel_error = rel;
        check.worst_index = i;
        check.analytic = a;
        check.numeric = numeric;
      }
    }
    check.passed = check.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && check.passed;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace didan
