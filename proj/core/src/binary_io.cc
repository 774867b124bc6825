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

#include "didan/binary_io.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

namespace didan {
namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFF));
  }
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(source_ + ": truncated " + what + " (need " +
                        std::to_string(n) + " bytes, have " +
                        std::to_string(remaining()) + ")");
    }
    std::string_view v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::uint16_t u16(const char* what) {
    auto b = take(2, what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  // Rank, dims and payload of one tensor record.
  FeatureTensor tensor(const std::string& label) {
    const std::uint32_t rank = u32("rank");
    if (rank == 0) throw FormatError(source_ + ": " + label + " has rank 0");
    if (static_cast<std::size_t>(rank) > remaining() / 4) {
      throw FormatError(source_ + ": " + label + " rank " +
                        std::to_string(rank) + " exceeds the remaining bytes");
    }
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = u32("dims");
      if (d == 0) throw FormatError(source_ + ": " + label + " has a zero dim");
      if (count > std::numeric_limits<std::size_t>::max() / 4 / d) {
        throw FormatError(source_ + ": " + label + " dims overflow");
      }
      count *= d;
    }
    if (count > remaining() / 4) {
      throw FormatError(source_ + ": truncated payload for " + label + " " +
                        shape_to_string(shape) + " (need " +
                        std::to_string(count * 4) + " bytes, have " +
                        std::to_string(remaining()) + ")");
    }
    std::vector<float> data(count);
    for (auto& v : data) v = std::bit_cast<float>(u32("payload"));
    return FeatureTensor(std::move(shape), std::move(data));
  }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

void put_tensor(std::string& out, const FeatureTensor& t, const std::string& label) {
  if (t.rank() == 0) throw ShapeError(label + ": rank-0 tensors are not storable");
  for (std::size_t d : t.shape()) {
    if (d == 0) {
      throw ShapeError(label + ": empty dim in shape " + shape_to_string(t.shape()));
    }
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw ShapeError(label + ": dim exceeds u32 in " + shape_to_string(t.shape()));
    }
  }
  if (!t.all_finite()) throw ShapeError(label + ": tensor has non-finite values");
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : t.storage()) put_f32(out, v);
}

}  // namespace

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

std::string encode_feature_blob(const FeatureTensor& tensor) {
  std::string out(kBlobMagic);
  put_tensor(out, tensor, "feature blob");
  return out;
}

FeatureTensor decode_feature_blob(std::string_view bytes, const std::string& source) {
  Reader r(bytes, source);
  if (bytes.size() < 4 || bytes.substr(0, 4) != kBlobMagic) {
    throw FormatError(source + ": bad magic, expected DFF1");
  }
  r.take(4, "magic");
  FeatureTensor t = r.tensor("feature blob");
  if (!r.at_end()) {
    throw FormatError(source + ": " + std::to_string(r.remaining()) +
                      " trailing bytes after payload");
  }
  return t;
}

FeatureTensor read_feature_blob(const std::filesystem::path& path) {
  return decode_feature_blob(read_file_bytes(path), path.string());
}

void write_feature_blob(const FeatureTensor& tensor, const std::filesystem::path& path) {
  write_file_bytes(path, encode_feature_blob(tensor));
}

std::string encode_checkpoint(const NamedTensors& entries) {
  std::string out(kCheckpointMagic);
  for (const auto& [name, tensor] : entries) {
    if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ShapeError("checkpoint entry name length out of range: '" + name + "'");
    }
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.append(name);
    put_tensor(out, tensor, "checkpoint entry '" + name + "'");
  }
  return out;
}

NamedTensors decode_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != kCheckpointMagic) {
    throw FormatError(source + ": bad magic, expected DDN1");
  }
  Reader r(bytes, source);
  r.take(4, "magic");
  NamedTensors out;
  while (!r.at_end()) {
    const std::uint16_t len = r.u16("name length");
    if (len == 0) throw FormatError(source + ": empty entry name");
    std::string name(r.take(len, "name"));
    FeatureTensor t = r.tensor("entry '" + name + "'");
    if (!out.emplace(name, std::move(t)).second) {
      throw FormatError(source + ": duplicate entry '" + name + "'");
    }
  }
  return out;
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

void write_checkpoint(const NamedTensors& entries, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(entries));
}

}  // namespace didan
