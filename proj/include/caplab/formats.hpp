// Copyright 2026 The caplab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary file formats. All integers are u32 little-endian and all payloads
// float32 little-endian, row-major. docs/FORMATS.md has the byte layouts.
//
//   FSEQ  "FSEQ" version m d, then m*d floats        (one modality block)
//   CKPT  "CKPT" version count, count tensor records, u32 meta length, meta
//         tensor record: u32 name length, name, u32 rank, rank u32 extents,
//         floats

#ifndef CAPLAB_FORMATS_HPP
#define CAPLAB_FORMATS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "caplab/config.hpp"
#include "caplab/numerics/tensor.hpp"

namespace caplab {

class CaptionModel;

inline constexpr std::uint32_t kFseqVersion = 1;
inline constexpr std::uint32_t kCkptVersion = 1;
inline constexpr std::size_t kFseqHeaderBytes = 16;

std::string encode_features(const num::Tensor& block);
// Throws FormatError naming the byte offset of the first bad field.
num::Tensor decode_features(const std::string& bytes,
                            const std::string& origin = "<memory>");
void save_features(const num::Tensor& block, const std::filesystem::path& path);
num::Tensor load_features(const std::filesystem::path& path);

struct CheckpointData {
  std::map<std::string, num::Tensor> tensors;
  Json meta;
};

std::string encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(const std::string& bytes,
                                 const std::string& origin = "<memory>");

// Meta always carries config, config_hash, vocab and vocab_hash; `extra`
// keys (stage, seed, ...) are merged in.
void save_checkpoint(const CaptionModel& model, const Json& extra,
                     const std::filesystem::path& path);
CheckpointData load_checkpoint(const std::filesystem::path& path);

// Rebuilds the model described by the meta block and loads its tensors.
// Throws ContractError listing missing or unexpected tensor names and
// DimensionError on a shape mismatch.
std::unique_ptr<CaptionModel> model_from_checkpoint(const CheckpointData& data);
std::unique_ptr<CaptionModel> load_model(const std::filesystem::path& path);

// Whole-file helpers shared by the corpus and training code.
std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& bytes);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace caplab

#endif  // CAPLAB_FORMATS_HPP
