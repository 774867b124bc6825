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

#ifndef DIDAN_CONFIG_IO_H_
#define DIDAN_CONFIG_IO_H_

#include <string>
#include <string_view>

#include "didan/synth.h"
#include "didan/trainer.h"

namespace didan {

// JSON objects whose keys mirror the struct field names. Missing keys keep
// the value already in `base`; unknown keys and ill-typed values throw
// std::invalid_argument naming the key.
TrainConfig train_config_from_json(std::string_view json_text, const TrainConfig& base = {});
SynthConfig synth_config_from_json(std::string_view json_text, const SynthConfig& base = {});

// Every field, pretty-printed with two-space indentation.
std::string to_json(const TrainConfig& config);
std::string to_json(const SynthConfig& config);

}  // namespace didan

#endif  // DIDAN_CONFIG_IO_H_
