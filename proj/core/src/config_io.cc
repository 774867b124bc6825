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

#include "didan/config_io.h"

#include <functional>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace didan {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what, const std::string& key, const std::string& msg) {
  throw std::invalid_argument(what + " config: '" + key + "' " + msg);
}

json parse_object(std::string_view text, const std::string& what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(what + " config: invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(what + " config: expected a JSON object");
  return j;
}

template <typename C>
using Setter = std::function<void(C&, const json&, const std::string&)>;

template <typename C>
Setter<C> size_field(std::size_t C::*field, const std::string& what) {
  return [field, what](C& c, const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) fail(what, key, "must be a non-negative integer");
    c.*field = v.get<std::size_t>();
  };
}

template <typename C>
Setter<C> u64_field(std::uint64_t C::*field, const std::string& what) {
  return [field, what](C& c, const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) fail(what, key, "must be a non-negative integer");
    c.*field = v.get<std::uint64_t>();
  };
}

template <typename C>
Setter<C> double_field(double C::*field, const std::string& what) {
  return [field, what](C& c, const json& v, const std::string& key) {
    if (!v.is_number()) fail(what, key, "must be a number");
    c.*field = v.get<double>();
  };
}

template <typename C>
Setter<C> bool_field(bool C::*field, const std::string& what) {
  return [field, what](C& c, const json& v, const std::string& key) {
    if (!v.is_boolean()) fail(what, key, "must be true or false");
    c.*field = v.get<bool>();
  };
}

template <typename C>
Setter<C> triple_field(std::array<double, 3> C::*field, const std::string& what) {
  return [field, what](C& c, const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) fail(what, key, "must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(what, key, "must be an array of 3 numbers");
      (c.*field)[i] = v[i].get<double>();
    }
  };
}

template <typename C>
C apply(std::string_view text, C config, const std::map<std::string, Setter<C>>& fields,
        const std::string& what) {
  const json j = parse_object(text, what);
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw std::invalid_argument(what + " config: unknown key '" + key + "'");
    it->second(config, value, key);
  }
  return config;
}

const std::map<std::string, Setter<TrainConfig>>& train_fields() {
  static const std::map<std::string, Setter<TrainConfig>> fields = [] {
    const std::string w = "train";
    std::map<std::string, Setter<TrainConfig>> f;
    f["lr"] = double_field(&TrainConfig::lr, w);
    f["batch_size"] = size_field(&TrainConfig::batch_size, w);
    f["epochs"] = size_field(&TrainConfig::epochs, w);
    f["seed"] = u64_field(&TrainConfig::seed, w);
    f["generated_fraction"] = double_field(&TrainConfig::generated_fraction, w);
    f["use_mismatch"] = bool_field(&TrainConfig::use_mismatch, w);
    f["use_nei"] = bool_field(&TrainConfig::use_nei, w);
    f["modality_ablation"] = [w](TrainConfig& c, const json& v, const std::string& key) {
      if (!v.is_string()) fail(w, key, "must be a string");
      try {
        c.modality_ablation = parse_modality(v.get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail(w, key, e.what());
      }
    };
    f["negatives_per_positive"] = size_field(&TrainConfig::negatives_per_positive, w);
    f["d_vse"] = size_field(&TrainConfig::d_vse, w);
    f["hidden1"] = size_field(&TrainConfig::hidden1, w);
    f["hidden2"] = size_field(&TrainConfig::hidden2, w);
    return f;
  }();
  return fields;
}

const std::map<std::string, Setter<SynthConfig>>& synth_fields() {
  static const std::map<std::string, Setter<SynthConfig>> fields = [] {
    const std::string w = "synth";
    std::map<std::string, Setter<SynthConfig>> f;
    f["n_articles"] = size_field(&SynthConfig::n_articles, w);
    f["d_text"] = size_field(&SynthConfig::d_text, w);
    f["d_image"] = size_field(&SynthConfig::d_image, w);
    f["latent_dim"] = size_field(&SynthConfig::latent_dim, w);
    f["sigma"] = double_field(&SynthConfig::sigma, w);
    f["caption_noise_scale"] = double_field(&SynthConfig::caption_noise_scale, w);
    f["image_noise_scale"] = double_field(&SynthConfig::image_noise_scale, w);
    f["caption_signal"] = double_field(&SynthConfig::caption_signal, w);
    f["image_signal"] = double_field(&SynthConfig::image_signal, w);
    f["missing_image_prob"] = double_field(&SynthConfig::missing_image_prob, w);
    f["n_topics"] = size_field(&SynthConfig::n_topics, w);
    f["entity_pool_size"] = size_field(&SynthConfig::entity_pool_size, w);
    f["body_entities"] = size_field(&SynthConfig::body_entities, w);
    f["q_match"] = double_field(&SynthConfig::q_match, w);
    f["q_mismatch"] = double_field(&SynthConfig::q_mismatch, w);
    f["pair_count_probs"] = triple_field(&SynthConfig::pair_count_probs, w);
    f["min_sentences"] = size_field(&SynthConfig::min_sentences, w);
    f["max_sentences"] = size_field(&SynthConfig::max_sentences, w);
    f["min_words"] = size_field(&SynthConfig::min_words, w);
    f["max_words"] = size_field(&SynthConfig::max_words, w);
    f["min_caption_words"] = size_field(&SynthConfig::min_caption_words, w);
    f["max_caption_words"] = size_field(&SynthConfig::max_caption_words, w);
    f["min_objects"] = size_field(&SynthConfig::min_objects, w);
    f["max_objects"] = size_field(&SynthConfig::max_objects, w);
    f["split_fractions"] = triple_field(&SynthConfig::split_fractions, w);
    f["seed"] = u64_field(&SynthConfig::seed, w);
    return f;
  }();
  return fields;
}

}  // namespace

TrainConfig train_config_from_json(std::string_view json_text, const TrainConfig& base) {
  return apply(json_text, base, train_fields(), "train");
}

SynthConfig synth_config_from_json(std::string_view json_text, const SynthConfig& base) {
  return apply(json_text, base, synth_fields(), "synth");
}

std::string to_json(const TrainConfig& c) {
  ordered_json j;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["generated_fraction"] = c.generated_fraction;
  j["use_mismatch"] = c.use_mismatch;
  j["use_nei"] = c.use_nei;
  j["modality_ablation"] = std::string(to_string(c.modality_ablation));
  j["negatives_per_positive"] = c.negatives_per_positive;
  j["d_vse"] = c.d_vse;
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  return j.dump(2);
}

std::string to_json(const SynthConfig& c) {
  ordered_json j;
  j["n_articles"] = c.n_articles;
  j["d_text"] = c.d_text;
  j["d_image"] = c.d_image;
  j["latent_dim"] = c.latent_dim;
  j["sigma"] = c.sigma;
  j["caption_noise_scale"] = c.caption_noise_scale;
  j["image_noise_scale"] = c.image_noise_scale;
  j["caption_signal"] = c.caption_signal;
  j["image_signal"] = c.image_signal;
  j["missing_image_prob"] = c.missing_image_prob;
  j["n_topics"] = c.n_topics;
  j["entity_pool_size"] = c.entity_pool_size;
  j["body_entities"] = c.body_entities;
  j["q_match"] = c.q_match;
  j["q_mismatch"] = c.q_mismatch;
  j["pair_count_probs"] = c.pair_count_probs;
  j["min_sentences"] = c.min_sentences;
  j["max_sentences"] = c.max_sentences;
  j["min_words"] = c.min_words;
  j["max_words"] = c.max_words;
  j["min_caption_words"] = c.min_caption_words;
  j["max_caption_words"] = c.max_caption_words;
  j["min_objects"] = c.min_objects;
  j["max_objects"] = c.max_objects;
  j["split_fractions"] = c.split_fractions;
  j["seed"] = c.seed;
  return j.dump(2);
}

}  // namespace didan
