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

#ifndef DIDAN_ABLATION_H_
#define DIDAN_ABLATION_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "didan/evaluate.h"
#include "didan/synth.h"
#include "didan/trainer.h"

namespace didan {

struct AblationCell {
  std::string name;
  TrainConfig config;
};

// Where the shared dataset comes from: generated in memory from `synth`, or
// read from three manifests.
struct AblationMatrix {
  std::optional<SynthConfig> synth;
  std::optional<std::array<std::filesystem::path, 3>> manifests;  // train, val, test
  TrainConfig base;
  std::vector<AblationCell> cells;
  bool include_cca = false;
  std::size_t oracle_mc = 0;  // 0 skips the oracle; synthetic data only
};

// Matrix JSON:
//   {"synth": {...} | "data": {"train": P, "val": P, "test": P},
//    "base": {...TrainConfig...},
//    "cells": [{"name": "...", ...overrides...}]
//      or "axes": {"use_mismatch": [...], "use_nei": [...],
//                  "generated_fraction": [...], "modality_ablation": [...]},
//    "include_cca": bool, "oracle_mc": n}
// Relative manifest paths resolve against `base_dir`. Throws
// std::invalid_argument on malformed input.
AblationMatrix parse_ablation_matrix(std::string_view json_text,
                                     const std::filesystem::path& base_dir = {});

struct AblationCellResult {
  std::string name;
  TrainConfig config;
  std::size_t best_epoch = 0;
  EvalReport val;
  EvalReport test;
};

struct AblationReport {
  std::array<double, 3> split_fractions{};
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  std::optional<double> oracle_accuracy;
  std::vector<AblationCellResult> cells;
  std::optional<EvalReport> cca;
};

struct AblationData {
  std::vector<ArticleRecord> train, val, test;
};

// One train+eval per cell on the shared splits. Cells run on up to `threads`
// workers; each owns its parameters and generator, so the report does not
// depend on the thread count. Test metrics use the best-validation weights.
AblationReport run_ablation(std::span<const AblationCell> cells, const AblationData& data,
                            bool include_cca, std::size_t threads = 1,
                            const WarningSink& warn = stderr_warnings());

// Loads or generates the data, runs every cell and, for synthetic data with
// oracle_mc > 0, records the oracle ceiling.
AblationReport run_ablation(const AblationMatrix& matrix, std::size_t threads = 1,
                            const WarningSink& warn = stderr_warnings());

std::string to_json(const AblationReport& report);

}  // namespace didan

#endif  // DIDAN_ABLATION_H_
