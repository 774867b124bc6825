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

#include "cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "didan/ablation.h"
#include "didan/binary_io.h"
#include "didan/cca.h"
#include "didan/config_io.h"
#include "didan/errors.h"
#include "didan/evaluate.h"
#include "didan/manifest.h"
#include "didan/model.h"
#include "didan/synth.h"
#include "didan/trainer.h"
#include "json.hpp"

namespace didan::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Bad flag values or config content, reported as usage errors.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot write file");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

// Config files hold caller-supplied content, so their errors are usage errors.
template <typename F>
auto parse_config(const fs::path& path, F&& parse) {
  const std::string text = read_text(path);
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::vector<ArticleRecord> load_split(const fs::path& manifest) {
  return load_records(load_manifest(manifest));
}

bool is_cca_checkpoint(const NamedTensors& named) { return named.count("cca.u") > 0; }

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a, Context& ctx) {
  SynthConfig config;
  if (!a.config.empty()) {
    config = parse_config(a.config, [](const std::string& t) { return synth_config_from_json(t); });
  }
  if (a.seed) config.seed = *a.seed;
  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SynthDataset ds = generate_synthetic_dataset(config, a.out);
  write_text(fs::path(a.out) / "resolved_config.json", to_json(config));
  ordered_json j;
  j["train"] = ds.train_manifest.string();
  j["val"] = ds.val_manifest.string();
  j["test"] = ds.test_manifest.string();
  j["n"] = {{"train", ds.splits.train.size()},
            {"val", ds.splits.val.size()},
            {"test", ds.splits.test.size()}};
  ctx.out << j.dump() << '\n';
  return kOk;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string manifest, val, config, out;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a, Context& ctx) {
  TrainConfig config;
  if (!a.config.empty()) {
    config = parse_config(a.config, [](const std::string& t) { return train_config_from_json(t); });
  }
  if (a.seed) config.seed = *a.seed;
  try {
    validate(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto train_records = load_split(a.manifest);
  const auto val_records = a.val.empty() ? std::vector<ArticleRecord>{} : load_split(a.val);

  ordered_json echo;
  echo["command"] = "train";
  echo["manifest"] = a.manifest;
  echo["val"] = a.val.empty() ? ordered_json(nullptr) : ordered_json(a.val);
  echo["train"] = ordered_json::parse(to_json(config));
  write_text(fs::path(a.out) / "resolved_config.json", echo.dump(2));

  TrainOptions options;
  options.out_dir = fs::path(a.out);
  options.warn = [&](const std::string& msg) { ctx.err << "warning: " << msg << '\n'; };
  options.on_metrics = [&](const EpochMetrics& m) { ctx.out << metrics_to_json(m) << '\n'; };
  const TrainResult result = train(train_records, val_records, config, options);
  ordered_json summary;
  summary["model"] = (fs::path(a.out) / "model.ddn").string();
  summary["best"] = (fs::path(a.out) / "best.ddn").string();
  summary["best_epoch"] = result.best_epoch;
  summary["pool"] = {{"real", result.pool_real}, {"generated", result.pool_generated}};
  ctx.out << summary.dump() << '\n';
  return kOk;
}

// --- eval / score ----------------------------------------------------------

struct ModelArgs {
  std::string model, manifest, out;
};

void echo_next_to(const std::string& out, const char* command, const ModelArgs& a) {
  if (out.empty()) return;
  ordered_json echo;
  echo["command"] = command;
  echo["model"] = a.model;
  echo["manifest"] = a.manifest;
  write_text(out + ".config.json", echo.dump(2));
}

int run_eval(const ModelArgs& a, Context& ctx) {
  const NamedTensors named = read_checkpoint(a.model);
  const auto records = load_split(a.manifest);
  EvalReport report;
  if (is_cca_checkpoint(named)) {
    report = evaluate_accuracy(cca_from_named(named), records);
  } else {
    report = evaluate_accuracy(params_from_named(named), records, fusion_from_named(named));
  }
  const std::string line = to_json(report);
  if (!a.out.empty()) write_text(a.out, line);
  echo_next_to(a.out, "eval", a);
  ctx.out << line << '\n';
  return kOk;
}

int run_score(const ModelArgs& a, Context& ctx) {
  const NamedTensors named = read_checkpoint(a.model);
  const auto records = load_split(a.manifest);
  std::ostringstream lines;
  if (is_cca_checkpoint(named)) {
    const CcaModel model = cca_from_named(named);
    for (const auto& r : records) {
      const CcaViews views = build_views(r);
      ordered_json j;
      j["article_id"] = r.article_id;
      j["score"] = cca_score(model, r);
      j["threshold"] = model.threshold;
      ordered_json pairs = ordered_json::array();
      for (std::size_t p = 0; p < r.pairs.size(); ++p) {
        pairs.push_back({{"pair_id", r.pairs[p].pair_id},
                         {"score", cca_pair_score(model, views.a.row(p).transpose(),
                                                  views.b.row(p).transpose())}});
      }
      j["pairs"] = std::move(pairs);
      lines << j.dump() << '\n';
    }
  } else {
    const DidanParams<float> params = params_from_named(named);
    const FusionOptions fusion = fusion_from_named(named);
    for (const auto& r : records) {
      const ForwardTrace<float> trace = forward_article(r, params, std::nullopt, Mode::kEval, fusion);
      ordered_json j;
      j["article_id"] = r.article_id;
      j["p_A"] = trace.authenticity;
      ordered_json pairs = ordered_json::array();
      for (const auto& p : trace.pairs) {
        pairs.push_back({{"pair_id", p.pair_id}, {"score", p.score}, {"b_c", p.indicator}});
      }
      j["pairs"] = std::move(pairs);
      lines << j.dump() << '\n';
    }
  }
  if (!a.out.empty()) write_text(a.out, lines.str());
  echo_next_to(a.out, "score", a);
  ctx.out << lines.str();
  return kOk;
}

// --- ablate ----------------------------------------------------------------

struct AblateArgs {
  std::string matrix, out;
};

int run_ablate(const AblateArgs& a, Context& ctx) {
  const fs::path matrix_path(a.matrix);
  const AblationMatrix matrix = parse_config(matrix_path, [&](const std::string& t) {
    return parse_ablation_matrix(t, matrix_path.parent_path());
  });
  const AblationReport report = run_ablation(
      matrix, thread_limit(), [&](const std::string& msg) { ctx.err << "warning: " << msg << '\n'; });
  const std::string text = to_json(report);
  write_text(a.out, text);
  write_text(a.out + ".config.json", read_text(matrix_path));
  ctx.out << ordered_json::parse(text).dump() << '\n';
  return kOk;
}

// --- cca -------------------------------------------------------------------

struct CcaFitArgs {
  std::string manifest, val, out;
  std::size_t components = kCcaDefaultComponents;
  double ridge = kCcaDefaultRidge;
};

int run_cca_fit(const CcaFitArgs& a, Context& ctx) {
  if (!(a.ridge > 0.0)) throw UsageError("--ridge must be positive");
  if (a.components == 0) throw UsageError("--components must be positive");
  const auto train_records = load_split(a.manifest);
  const auto val_records = load_split(a.val);
  const CcaViews views = build_views(train_records, /*real_only=*/true);
  CcaModel model = fit_cca(views.a, views.b, a.components, a.ridge);
  const Calibration cal = calibrate_threshold(model, val_records);
  write_checkpoint(cca_to_named(model), a.out);
  ordered_json echo;
  echo["command"] = "cca fit";
  echo["manifest"] = a.manifest;
  echo["val"] = a.val;
  echo["components"] = a.components;
  echo["ridge"] = a.ridge;
  write_text(a.out + ".config.json", echo.dump(2));
  ordered_json j;
  j["model"] = a.out;
  j["components"] = model.components();
  j["rho"] = std::vector<double>(model.rho.data(), model.rho.data() + model.rho.size());
  j["threshold"] = cal.threshold;
  j["val_accuracy"] = cal.accuracy;
  ctx.out << j.dump() << '\n';
  return kOk;
}

template <typename F>
int guarded(F&& body, Context& ctx) {
  try {
    return body();
  } catch (const NumericalError& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const UsageError& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    // Shape mismatches and invalid data reaching the model.
    ctx.err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace

std::size_t thread_limit() {
  const char* v = std::getenv("DIDAN_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) {
    throw UsageError(std::string("DIDAN_THREADS must be a positive integer, got '") + v + "'");
  }
  return static_cast<std::size_t>(n);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"didan: visual-semantic consistency detector for generated news"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--config", synth.config, "SynthConfig JSON");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Override the config seed");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train DIDAN");
  train_cmd->add_option("--manifest", train_args.manifest, "Training manifest")->required();
  train_cmd->add_option("--val", train_args.val, "Validation manifest");
  train_cmd->add_option("--config", train_args.config, "TrainConfig JSON");
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");

  ModelArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy report for a DIDAN or CCA checkpoint");
  eval_cmd->add_option("--model", eval_args.model, "Checkpoint")->required();
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest to score")->required();
  eval_cmd->add_option("--out", eval_args.out, "Also write the report here");

  ModelArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Per-article scores as JSON lines");
  score_cmd->add_option("--model", score_args.model, "Checkpoint")->required();
  score_cmd->add_option("--manifest", score_args.manifest, "Manifest to score")->required();
  score_cmd->add_option("--out", score_args.out, "Also write the lines here");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation matrix");
  ablate_cmd->add_option("--matrix", ablate.matrix, "Matrix JSON")->required();
  ablate_cmd->add_option("--out", ablate.out, "Report JSON")->required();

  auto* cca_cmd = app.add_subcommand("cca", "CCA baseline");
  cca_cmd->require_subcommand(1);
  CcaFitArgs cca_fit;
  auto* cca_fit_cmd = cca_cmd->add_subcommand("fit", "Fit on real articles, calibrate on val");
  cca_fit_cmd->add_option("--manifest", cca_fit.manifest, "Training manifest")->required();
  cca_fit_cmd->add_option("--val", cca_fit.val, "Calibration manifest")->required();
  cca_fit_cmd->add_option("--out", cca_fit.out, "Checkpoint path")->required();
  cca_fit_cmd->add_option("--components", cca_fit.components, "Canonical components");
  cca_fit_cmd->add_option("--ridge", cca_fit.ridge, "Covariance ridge");
  ModelArgs cca_eval;
  auto* cca_eval_cmd = cca_cmd->add_subcommand("eval", "Accuracy of a CCA checkpoint");
  cca_eval_cmd->add_option("--model", cca_eval.model, "Checkpoint")->required();
  cca_eval_cmd->add_option("--manifest", cca_eval.manifest, "Manifest to score")->required();
  cca_eval_cmd->add_option("--out", cca_eval.out, "Also write the report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (*synth_cmd) return guarded([&] { return run_synth(synth, ctx); }, ctx);
  if (*train_cmd) return guarded([&] { return run_train(train_args, ctx); }, ctx);
  if (*eval_cmd) return guarded([&] { return run_eval(eval_args, ctx); }, ctx);
  if (*score_cmd) return guarded([&] { return run_score(score_args, ctx); }, ctx);
  if (*ablate_cmd) return guarded([&] { return run_ablate(ablate, ctx); }, ctx);
  if (*cca_fit_cmd) return guarded([&] { return run_cca_fit(cca_fit, ctx); }, ctx);
  if (*cca_eval_cmd) {
    return guarded(
        [&] {
          if (!is_cca_checkpoint(read_checkpoint(cca_eval.model))) {
            throw FormatError(cca_eval.model + ": not a CCA checkpoint");
          }
          return run_eval(cca_eval, ctx);
        },
        ctx);
  }
  err << "error: no subcommand\n";
  return kUsage;
}

}  // namespace didan::cli
