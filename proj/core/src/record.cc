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

#include "didan/record.h"

#include "didan/errors.h"

namespace didan {
namespace {

void check_matrix(const FeatureTensor& t, std::size_t width, const std::string& what) {
  if (t.rank() != 2 || t.dim(0) == 0 || t.dim(1) != width) {
    throw FormatError(what + " has shape " + shape_to_string(t.shape()) +
                      ", expected [n x " + std::to_string(width) + "] with n >= 1");
  }
  if (!t.all_finite()) throw FormatError(what + " contains non-finite values");
}

}  // namespace

void validate_pair(const ImageCaptionPair& pair, std::size_t d_text,
                   std::size_t d_image) {
  check_matrix(pair.caption_words, d_text, "pair '" + pair.pair_id + "' caption");
  check_matrix(pair.object_feats, d_image, "pair '" + pair.pair_id + "' objects");
}

void validate_record(const ArticleRecord& record, std::size_t d_text,
                     std::size_t d_image) {
  const std::string where = "article '" + record.article_id + "'";
  if (record.pairs.empty() || record.pairs.size() > kMaxPairsPerArticle) {
    throw FormatError(where + " has " + std::to_string(record.pairs.size()) +
                      " image-caption pairs; allowed 1 to " +
                      std::to_string(kMaxPairsPerArticle) + " per article");
  }
  if (record.sentences.empty()) throw FormatError(where + " has no sentences");
  for (std::size_t i = 0; i < record.sentences.size(); ++i) {
    check_matrix(record.sentences[i], d_text,
                 where + " sentence " + std::to_string(i));
  }
  for (const auto& p : record.pairs) validate_pair(p, d_text, d_image);
}

}  // namespace didan
