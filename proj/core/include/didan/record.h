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

#ifndef DIDAN_RECORD_H_
#define DIDAN_RECORD_H_

#include <cstddef>
#include <string>
#include <vector>

#include "didan/entity.h"
#include "didan/tensor.h"

namespace didan {

inline constexpr std::size_t kMaxPairsPerArticle = 3;

enum class Label : int { kGenerated = 0, kReal = 1 };

inline double label_value(Label l) { return l == Label::kReal ? 1.0 : 0.0; }

struct ImageCaptionPair {
  std::string pair_id;
  FeatureTensor caption_words;  // [n_c x d_text]
  FeatureTensor object_feats;   // [n_o x d_image]
  EntitySet caption_entities;
};

struct ArticleRecord {
  std::string article_id;
  std::vector<FeatureTensor> sentences;  // each [n_words x d_text]
  EntitySet body_entities;
  std::vector<ImageCaptionPair> pairs;  // 1..3
  Label label = Label::kReal;
};

// Throws FormatError describing the first violated invariant.
void validate_pair(const ImageCaptionPair& pair, std::size_t d_text,
                   std::size_t d_image);
void validate_record(const ArticleRecord& record, std::size_t d_text,
                     std::size_t d_image);

}  // namespace didan

#endif  // DIDAN_RECORD_H_
