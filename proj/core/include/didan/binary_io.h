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

#ifndef DIDAN_BINARY_IO_H_
#define DIDAN_BINARY_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "didan/tensor.h"

namespace didan {

inline constexpr std::string_view kBlobMagic = "DFF1";
inline constexpr std::string_view kCheckpointMagic = "DDN1";

// DFF1 feature blob: magic, rank (u32 LE), rank x dim (u32 LE), then the
// f32 LE payload in row-major order.
std::string encode_feature_blob(const FeatureTensor& tensor);
FeatureTensor decode_feature_blob(std::string_view bytes,
                                  const std::string& source = "<memory>");

FeatureTensor read_feature_blob(const std::filesystem::path& path);
void write_feature_blob(const FeatureTensor& tensor,
                        const std::filesystem::path& path);

// DDN1 checkpoint container: magic, then for each entry the name length
// (u16 LE), UTF-8 name, rank (u32 LE), dims (u32 LE), f32 LE payload.
// Entries are written in name order.
using NamedTensors = std::map<std::string, FeatureTensor, std::less<>>;

std::string encode_checkpoint(const NamedTensors& entries);
NamedTensors decode_checkpoint(std::string_view bytes,
                               const std::string& source = "<memory>");

NamedTensors read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const NamedTensors& entries,
                      const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace didan

#endif  // DIDAN_BINARY_IO_H_
