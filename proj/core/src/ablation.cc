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

#include "didan/ablation.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "didan/cca.h"
#include "didan/config_io.h"
#include "didan/manifest.h"
#include "json.hpp"

namespace didan {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& msg) {
  throw std::invalid_argument("ablation matrix: " + msg);
}

std::string axis_name(const TrainConfig& c) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mismatch=%d nei=%d gf=%g %s", c.use_mismatch ? 1 : 0,
                c.use_nei ? 1 : 0, c.generated_fraction,
                std::string(to_string(c.modality_ablation)).c_str());
  return buf;
}

std::vector<json> axis_values(const json& axes, const char* key, const json& fallback) {
  if (!axes.contains(key)) return {fallback};
  const json& v = axes.at(key);
  if (!v.is_array() || v.empty()) bad(std::string("axis '") + key + "' must be a non-empty array");
  return std::vector<json>(v.begin(), v.end());
}

std::vector<AblationCell> cells_from_axes(const json& axes, const TrainConfig& base) {
  if (!axes.is_object()) bad("'axes' must be an object");
  for (const auto& [key, _] : axes.items()) {
    if (key != "use_mismatch" && key != "use_nei" && key != "generated_fraction" &&
        key != "modality_ablation") {
      bad("unknown axis '" + key + "'");
    }
  }
  const auto mm = axis_values(axes, "use_mismatch", base.use_mismatch);
  const auto nei = axis_values(axes, "use_nei", base.use_nei);
  const auto gf = axis_values(axes, "generated_fraction", base.generated_fraction);
  const auto mod =
      axis_values(axes, "modality_ablation", std::string(to_string(base.modality_ablation)));
  std::vector<AblationCell> cells;
  for (const auto& a : mm)
    for (const auto& b : nei)
      for (const auto& c : gf)
        for (const auto& d : mod) {
          json o = {{"use_mismatch", a}, {"use_nei", b}, {"generated_fraction", c},
                    {"modality_ablation", d}};
          AblationCell cell;
          cell.config = train_config_from_json(o.dump(), base);
          cell.name = axis_name(cell.config);
          cells.push_back(std::move(cell));
        }
  return cells;
}

std::vector<AblationCell> cells_from_list(const json& list, const TrainConfig& base) {
  if (!list.is_array() || list.empty()) bad("'cells' must be a non-empty array");
  std::vector<AblationCell> cells;
  for (const auto& item : list) {
    if (!item.is_object()) bad("every cell must be an object");
    json overrides = item;
    AblationCell cell;
    if (overrides.contains("name")) {
      if (!overrides["name"].is_string()) bad("cell 'name' must be a string");
      cell.name = overrides["name"].get<std::string>();
      overrides.erase("name");
    }
    cell.config = train_config_from_json(overrides.dump(), base);
    if (cell.name.empty()) cell.name = axis_name(cell.config);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::filesystem::path resolve(const json& v, const char* key, const std::filesystem::path& dir) {
  if (!v.contains(key) || !v.at(key).is_string()) {
    bad(std::string("'data' needs a string '") + key + "'");
  }
  std::filesystem::path p = v.at(key).get<std::string>();
  return p.is_relative() && !dir.empty() ? dir / p : p;
}

ordered_json report_object(const EvalReport& r) { return ordered_json::parse(to_json(r)); }

}  // namespace

AblationMatrix parse_ablation_matrix(std::string_view json_text,
                                     const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "synth" && key != "data" && key != "base" && key != "cells" && key != "axes" &&
        key != "include_cca" && key != "oracle_mc") {
      bad("unknown key '" + key + "'");
    }
  }
  AblationMatrix m;
  if (j.contains("synth") == j.contains("data")) bad("give exactly one of 'synth' and 'data'");
  if (j.contains("synth")) {
    m.synth = synth_config_from_json(j["synth"].dump());
  } else {
    const json& d = j["data"];
    if (!d.is_object()) bad("'data' must be an object");
    m.manifests = std::array<std::filesystem::path, 3>{
        resolve(d, "train", base_dir), resolve(d, "val", base_dir), resolve(d, "test", base_dir)};
  }
  if (j.contains("base")) m.base = train_config_from_json(j["base"].dump());
  if (j.contains("cells") && j.contains("axes")) bad("give 'cells' or 'axes', not both");
  if (j.contains("cells")) {
    m.cells = cells_from_list(j["cells"], m.base);
  } else if (j.contains("axes")) {
    m.cells = cells_from_axes(j["axes"], m.base);
  } else {
    m.cells = {{axis_name(m.base), m.base}};
  }
  if (j.contains("include_cca")) {
    if (!j["include_cca"].is_boolean()) bad("'include_cca' must be true or false");
    m.include_cca = j["include_cca"].get<bool>();
  }
  if (j.contains("oracle_mc")) {
    if (!j["oracle_mc"].is_number_unsigned()) bad("'oracle_mc' must be a non-negative integer");
    m.oracle_mc = j["oracle_mc"].get<std::size_t>();
  }
  for (const auto& cell : m.cells) validate(cell.config);
  return m;
}

AblationReport run_ablation(std::span<const AblationCell> cells, const AblationData& data,
                            bool include_cca, std::size_t threads, const WarningSink& warn) {
  if (data.train.empty() || data.val.empty() || data.test.empty()) {
    throw std::invalid_argument("ablation: every split needs at least one record");
  }
  AblationReport report;
  report.n_train = data.train.size();
  report.n_val = data.val.size();
  report.n_test = data.test.size();
  const double total = static_cast<double>(report.n_train + report.n_val + report.n_test);
  report.split_fractions = {report.n_train / total, report.n_val / total, report.n_test / total};
  report.cells.resize(cells.size());

  std::mutex warn_mutex;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const AblationCell& cell = cells[i];
        TrainOptions options;
        options.warn = [&, name = cell.name](const std::string& msg) {
          std::lock_guard<std::mutex> lock(warn_mutex);
          if (warn) warn("[" + name + "] " + msg);
        };
        TrainResult trained = train(data.train, data.val, cell.config, options);
        AblationCellResult& out = report.cells[i];
        out.name = cell.name;
        out.config = cell.config;
        out.best_epoch = trained.best_epoch;
        out.val = evaluate_accuracy(trained.best, data.val, cell.config.fusion());
        out.test = evaluate_accuracy(trained.best, data.test, cell.config.fusion());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (include_cca) {
    const CcaViews views = build_views(data.train, /*real_only=*/true);
    CcaModel model = fit_cca(views.a, views.b, kCcaDefaultComponents, kCcaDefaultRidge);
    calibrate_threshold(model, data.val);
    report.cca = evaluate_accuracy(model, data.test);
  }
  return report;
}

AblationReport run_ablation(const AblationMatrix& matrix, std::size_t threads,
                            const WarningSink& warn) {
  AblationData data;
  if (matrix.synth) {
    SynthSplits splits = generate_records(*matrix.synth);
    data.train = std::move(splits.train);
    data.val = std::move(splits.val);
    data.test = std::move(splits.test);
  } else if (matrix.manifests) {
    data.train = load_records(load_manifest((*matrix.manifests)[0]));
    data.val = load_records(load_manifest((*matrix.manifests)[1]));
    data.test = load_records(load_manifest((*matrix.manifests)[2]));
  } else {
    throw std::invalid_argument("ablation: matrix has no data source");
  }
  AblationReport report = run_ablation(matrix.cells, data, matrix.include_cca, threads, warn);
  if (matrix.synth) {
    report.split_fractions = matrix.synth->split_fractions;
    if (matrix.oracle_mc > 0) {
      report.oracle_accuracy = bayes_oracle_accuracy(*matrix.synth, matrix.oracle_mc);
    }
  }
  return report;
}

std::string to_json(const AblationReport& report) {
  ordered_json j;
  j["split_fractions"] = report.split_fractions;
  j["n"] = {{"train", report.n_train}, {"val", report.n_val}, {"test", report.n_test}};
  j["oracle_accuracy"] =
      report.oracle_accuracy ? ordered_json(*report.oracle_accuracy) : ordered_json(nullptr);
  ordered_json cells = ordered_json::array();
  for (const auto& c : report.cells) {
    ordered_json cell;
    cell["name"] = c.name;
    cell["config"] = ordered_json::parse(to_json(c.config));
    cell["best_epoch"] = c.best_epoch;
    cell["val"] = report_object(c.val);
    cell["test"] = report_object(c.test);
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  j["cca"] = report.cca ? report_object(*report.cca) : ordered_json(nullptr);
  return j.dump(2);
}

}  // namespace didan
