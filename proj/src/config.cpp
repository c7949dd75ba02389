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

#include "caplab/config.hpp"

#include <cstdio>

#include "caplab/errors.hpp"

namespace caplab {

std::string_view fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::cross_gating: return "cross_gating";
    case FusionMode::concat: return "concat";
    case FusionMode::elementwise_add: return "elementwise_add";
  }
  return "cross_gating";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "cross_gating") return FusionMode::cross_gating;
  if (name == "concat") return FusionMode::concat;
  if (name == "elementwise_add") return FusionMode::elementwise_add;
  throw ConfigError("unknown fusion mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(content_dim, "content_dim");
  positive(motion_dim, "motion_dim");
  positive(pad_len, "pad_len");
  positive(content_hidden, "content_hidden");
  positive(motion_hidden, "motion_hidden");
  positive(fused_dim, "fused_dim");
  positive(pos_embed_dim, "pos_embed_dim");
  positive(pos_hidden, "pos_hidden");
  positive(word_embed_dim, "word_embed_dim");
  positive(dec_hidden, "dec_hidden");
  positive(attn_dim, "attn_dim");
  positive(max_words, "max_words");
  if (fusion == FusionMode::elementwise_add) {
    if (content_hidden != motion_hidden) {
      throw ConfigError(
          "elementwise_add fusion needs equal content/motion hidden sizes, got " +
          std::to_string(content_hidden) + " and " +
          std::to_string(motion_hidden));
    }
    if (content_hidden != fused_dim) {
      throw ConfigError(
          "elementwise_add fusion needs hidden size == fused_dim, got " +
          std::to_string(content_hidden) + " and " + std::to_string(fused_dim));
    }
  }
}

Json ModelConfig::to_json() const {
  return Json{{"content_dim", content_dim},
              {"motion_dim", motion_dim},
              {"pad_len", pad_len},
              {"content_hidden", content_hidden},
              {"motion_hidden", motion_hidden},
              {"fused_dim", fused_dim},
              {"pos_embed_dim", pos_embed_dim},
              {"pos_hidden", pos_hidden},
              {"word_embed_dim", word_embed_dim},
              {"dec_hidden", dec_hidden},
              {"attn_dim", attn_dim},
              {"max_words", max_words},
              {"vocab_size", vocab_size},
              {"fusion", std::string(fusion_mode_name(fusion))},
              {"use_pos", use_pos},
              {"mask_padding", mask_padding}};
}

ModelConfig ModelConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    auto size = [&](std::size_t& field) {
      if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw ConfigError("model." + key + " must be a non-negative integer");
      }
      field = value.get<std::size_t>();
    };
    if (key == "content_dim") size(c.content_dim);
    else if (key == "motion_dim") size(c.motion_dim);
    else if (key == "pad_len") size(c.pad_len);
    else if (key == "content_hidden") size(c.content_hidden);
    else if (key == "motion_hidden") size(c.motion_hidden);
    else if (key == "fused_dim") size(c.fused_dim);
    else if (key == "pos_embed_dim") size(c.pos_embed_dim);
    else if (key == "pos_hidden") size(c.pos_hidden);
    else if (key == "word_embed_dim") size(c.word_embed_dim);
    else if (key == "dec_hidden") size(c.dec_hidden);
    else if (key == "attn_dim") size(c.attn_dim);
    else if (key == "max_words") size(c.max_words);
    else if (key == "vocab_size") size(c.vocab_size);
    else if (key == "fusion") c.fusion = parse_fusion_mode(value.get<std::string>());
    else if (key == "use_pos") c.use_pos = value.get<bool>();
    else if (key == "mask_padding") c.mask_padding = value.get<bool>();
    else throw ConfigError("unknown model config key '" + key + "'");
  }
  return c;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ModelConfig::hash() const { return fnv1a_hex(to_json().dump()); }

}  // namespace caplab
