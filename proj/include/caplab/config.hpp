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

#ifndef CAPLAB_CONFIG_HPP
#define CAPLAB_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace caplab {

using Json = nlohmann::json;

enum class FusionMode { cross_gating, concat, elementwise_add };

std::string_view fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

// Architecture hyper-parameters. The defaults are the full-size model
// (1536-d content / 1024-d motion features, 30 padded steps, 468-d
// embeddings, 512-d LSTMs). Toy corpora override the dimensions.
struct ModelConfig {
  std::size_t content_dim = 1536;
  std::size_t motion_dim = 1024;
  std::size_t pad_len = 30;
  std::size_t content_hidden = 512;
  std::size_t motion_hidden = 512;
  std::size_t fused_dim = 512;
  std::size_t pos_embed_dim = 468;
  std::size_t pos_hidden = 512;
  std::size_t word_embed_dim = 468;
  std::size_t dec_hidden = 512;
  std::size_t attn_dim = 512;
  std::size_t max_words = 28;
  std::size_t vocab_size = 0;  // filled from the Vocabulary
  FusionMode fusion = FusionMode::cross_gating;
  // false removes the POS pathway: the decoder receives psi = 0.
  bool use_pos = true;
  // Restrict attention to the true (unpadded) clip length.
  bool mask_padding = false;

  std::size_t pos_max_len() const noexcept { return max_words + 1; }
  void validate() const;

  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig from_json(const Json& j);
  // FNV-1a 64 of the canonical JSON, as 16 hex digits.
  std::string hash() const;
};

std::string fnv1a_hex(std::string_view bytes);

}  // namespace caplab

#endif  // CAPLAB_CONFIG_HPP
