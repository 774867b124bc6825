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

#include "didan/manifest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "didan/binary_io.h"
#include "didan/errors.h"
#include "json.hpp"

namespace didan {
namespace {

using nlohmann::json;

class LineContext {
 public:
  LineContext(const std::filesystem::path& path, std::size_t line)
      : prefix_(path.string() + ":" + std::to_string(line) + ": ") {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(prefix_ + msg);
  }

  void only_keys(const json& obj, const std::set<std::string>& allowed,
                 const std::string& where) const {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
    }
  }

  const json& field(const json& obj, const char* key, const std::string& where) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail("missing key '" + std::string(key) + "' in " + where);
    return *it;
  }

  std::string string_field(const json& obj, const char* key,
                           const std::string& where) const {
    const json& v = field(obj, key, where);
    if (!v.is_string() || v.get<std::string>().empty()) {
      fail("'" + std::string(key) + "' in " + where + " must be a non-empty string");
    }
    return v.get<std::string>();
  }

  std::vector<std::string> entity_list(const json& obj, const char* key,
                                       const std::string& where) const {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array()) fail("'" + std::string(key) + "' in " + where + " must be an array");
    EntitySet set;
    for (const auto& e : *it) {
      if (!e.is_string()) fail("entity in " + where + " is not a string");
      set.insert(e.get<std::string>());
    }
    return set.items();
  }

 private:
  std::string prefix_;
};

std::filesystem::path checked_blob(const LineContext& ctx,
                                   const std::filesystem::path& base,
                                   const std::string& rel, const std::string& where) {
  const std::filesystem::path full = base / rel;
  if (!std::filesystem::is_regular_file(full)) {
    ctx.fail("blob for " + where + " not found: " + full.string());
  }
  return rel;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open manifest");

  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::set<std::string> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LineContext ctx(path, line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) ctx.fail("expected a JSON object");

    if (!have_header) {
      ctx.only_keys(obj, {"version", "d_text", "d_image", "split"}, "header");
      m.version = ctx.string_field(obj, "version", "header");
      if (m.version != kManifestVersion) {
        ctx.fail("unsupported manifest version '" + m.version + "'");
      }
      for (const char* key : {"d_text", "d_image"}) {
        const json& v = ctx.field(obj, key, "header");
        if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
          ctx.fail(std::string("header '") + key + "' must be a positive integer");
        }
      }
      m.d_text = obj["d_text"].get<std::size_t>();
      m.d_image = obj["d_image"].get<std::size_t>();
      m.split = ctx.string_field(obj, "split", "header");
      have_header = true;
      continue;
    }

    ctx.only_keys(obj,
                  {"article_id", "label", "sentences", "body_entities",
                   "body_entity_types", "pairs", "meta"},
                  "record");
    RecordEntry rec;
    rec.article_id = ctx.string_field(obj, "article_id", "record");
    const std::string where = "record '" + rec.article_id + "'";
    if (!seen_ids.insert(rec.article_id).second) {
      ctx.fail("duplicate article_id '" + rec.article_id + "'");
    }

    const json& label = ctx.field(obj, "label", where);
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
      ctx.fail("label in " + where + " must be 0 (generated) or 1 (real)");
    }
    rec.label = label.get<int>() == 1 ? Label::kReal : Label::kGenerated;

    const json& sentences = ctx.field(obj, "sentences", where);
    if (!sentences.is_array() || sentences.empty()) {
      ctx.fail("'sentences' in " + where + " must be a non-empty array of blob paths");
    }
    for (const auto& s : sentences) {
      if (!s.is_string()) ctx.fail("sentence path in " + where + " is not a string");
      rec.sentence_blobs.push_back(
          checked_blob(ctx, m.base_dir, s.get<std::string>(), where));
    }
    rec.body_entities = ctx.entity_list(obj, "body_entities", where);

    const json& pairs = ctx.field(obj, "pairs", where);
    if (!pairs.is_array()) ctx.fail("'pairs' in " + where + " must be an array");
    if (pairs.empty() || pairs.size() > kMaxPairsPerArticle) {
      ctx.fail(where + " has " + std::to_string(pairs.size()) +
               " image-caption pairs; allowed 1 to " +
               std::to_string(kMaxPairsPerArticle) + " per article");
    }
    for (const auto& p : pairs) {
      if (!p.is_object()) ctx.fail("pair in " + where + " is not an object");
      ctx.only_keys(p,
                    {"pair_id", "caption", "objects", "caption_entities",
                     "caption_entity_types", "meta"},
                    "pair of " + where);
      PairEntry pe;
      pe.pair_id = ctx.string_field(p, "pair_id", where);
      const std::string pwhere = "pair '" + pe.pair_id + "' of " + where;
      pe.caption_blob = checked_blob(ctx, m.base_dir,
                                     ctx.string_field(p, "caption", pwhere), pwhere);
      pe.objects_blob = checked_blob(ctx, m.base_dir,
                                     ctx.string_field(p, "objects", pwhere), pwhere);
      pe.caption_entities = ctx.entity_list(p, "caption_entities", pwhere);
      rec.pairs.push_back(std::move(pe));
    }
    m.records.push_back(std::move(rec));
  }
  if (!have_header) throw FormatError(path.string() + ": manifest has no header line");
  return m;
}

ArticleRecord load_record(const Manifest& manifest, std::size_t index) {
  const RecordEntry& e = manifest.records.at(index);
  ArticleRecord r;
  r.article_id = e.article_id;
  r.label = e.label;
  r.body_entities = EntitySet::from_normalized(e.body_entities);
  for (const auto& s : e.sentence_blobs) {
    r.sentences.push_back(read_feature_blob(manifest.base_dir / s));
  }
  for (const auto& p : e.pairs) {
    ImageCaptionPair pair;
    pair.pair_id = p.pair_id;
    pair.caption_words = read_feature_blob(manifest.base_dir / p.caption_blob);
    pair.object_feats = read_feature_blob(manifest.base_dir / p.objects_blob);
    pair.caption_entities = EntitySet::from_normalized(p.caption_entities);
    r.pairs.push_back(std::move(pair));
  }
  try {
    validate_record(r, manifest.d_text, manifest.d_image);
  } catch (const FormatError& err) {
    throw FormatError(manifest.base_dir.string() + ": " + err.what() +
                      " (manifest declares d_text=" + std::to_string(manifest.d_text) +
                      ", d_image=" + std::to_string(manifest.d_image) + ")");
  }
  return r;
}

std::vector<ArticleRecord> load_records(const Manifest& manifest) {
  std::vector<ArticleRecord> out;
  out.reserve(manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    out.push_back(load_record(manifest, i));
  }
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ostringstream out;
  json header = {{"version", manifest.version},
                 {"d_text", manifest.d_text},
                 {"d_image", manifest.d_image},
                 {"split", manifest.split}};
  out << header.dump() << '\n';
  for (const auto& r : manifest.records) {
    json rec;
    rec["article_id"] = r.article_id;
    rec["label"] = r.label == Label::kReal ? 1 : 0;
    json sentences = json::array();
    for (const auto& s : r.sentence_blobs) sentences.push_back(s.generic_string());
    rec["sentences"] = std::move(sentences);
    rec["body_entities"] = r.body_entities;
    json pairs = json::array();
    for (const auto& p : r.pairs) {
      pairs.push_back({{"pair_id", p.pair_id},
                       {"caption", p.caption_blob.generic_string()},
                       {"objects", p.objects_blob.generic_string()},
                       {"caption_entities", p.caption_entities}});
    }
    rec["pairs"] = std::move(pairs);
    out << rec.dump() << '\n';
  }
  write_file_bytes(path, out.str());
}

}  // namespace didan
