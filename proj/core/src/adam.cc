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

#include "didan/adam.h"

#include <cmath>

namespace didan {

template <typename T>
void adam_step(ParamStore<T>& params,
               const std::map<std::string, Tensor<T>, std::less<>>& grads,
               AdamState<T>& state) {
  for (const auto& [name, grad] : grads) {
    const Tensor<T>& p = params.get(name);
    if (grad.shape() != p.shape()) {
      throw ShapeError("adam_step: gradient for '" + name + "' has shape " +
                       shape_to_string(grad.shape()) + ", parameter has " +
                       shape_to_string(p.shape()));
    }
    for (ParamStore<T>* moments : {&state.first_moment, &state.second_moment}) {
      if (!moments->contains(name)) {
        moments->set(name, Tensor<T>(p.shape()));
      } else if (moments->get(name).shape() != p.shape()) {
        throw ShapeError("adam_step: moment for '" + name +
                         "' does not match its parameter");
      }
    }
  }

  state.step += 1;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);

  for (const auto& [name, grad] : grads) {
    Tensor<T>& p = params.get(name);
    Tensor<T>& m = state.first_moment.get(name);
    Tensor<T>& v = state.second_moment.get(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(grad[i]);
      const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * gi;
      const double vi =
          h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) -
                            h.lr * m_hat / (std::sqrt(v_hat) + h.eps));
    }
  }
}

template void adam_step<float>(ParamStore<float>&,
                               const std::map<std::string, Tensor<float>, std::less<>>&,
                               AdamState<float>&);
template void adam_step<double>(ParamStore<double>&,
                                const std::map<std::string, Tensor<double>, std::less<>>&,
                                AdamState<double>&);

}  // namespace didan
