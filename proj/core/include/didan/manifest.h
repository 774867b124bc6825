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

#ifndef DIDAN_MANIFEST_H_
#define DIDAN_MANIFEST_H_

#include <filesystem>
#include <string>
#include <vector>

#include "didan/record.h"

namespace didan {

inline constexpr std::string_view kManifestVersion = "didan-manifest/1";

struct PairEntry {
  std::string pair_id;
  std::filesystem::path caption_blob;
  std::filesystem::path objects_blob;
  std::vector<std::string> caption_entities;  // normalized
};

struct RecordEntry {
  std::string article_id;
  Label label = Label::kReal;
  std::vector<std::filesystem::path> sentence_blobs;
  std::vector<std::string> body_entities;  // normalized
  std::vector<PairEntry> pairs;
};

// JSON-lines dataset index. Line 1 is the header
//   {"version", "d_text", "d_image", "split"}
// and every following line is one article record. Blob paths are stored
// relative to the manifest directory.
struct Manifest {
  std::string version{kManifestVersion};
  std::size_t d_text = 768;
  std::size_t d_image = 2048;
  std::string split;
  std::filesystem::path base_dir;
  std::vector<RecordEntry> records;
};

// Parses and validates the schema; blob files must exist. Blob contents are
// read lazily by load_record().
Manifest load_manifest(const std::filesystem::path& path);

ArticleRecord load_record(const Manifest& manifest, std::size_t index);
// Loads every record before returning, so a bad blob fails the whole call.
std::vector<ArticleRecord> load_records(const Manifest& manifest);

// Writes the manifest at `path`; blob paths are written as given.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace didan

#endif  // DIDAN_MANIFEST_H_
