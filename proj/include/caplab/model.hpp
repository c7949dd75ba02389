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

#ifndef CAPLAB_MODEL_HPP
#define CAPLAB_MODEL_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "caplab/caption_decoder.hpp"
#include "caplab/config.hpp"
#include "caplab/fusion_encoder.hpp"
#include "caplab/pos_generator.hpp"
#include "caplab/vocabulary.hpp"

namespace caplab {

using ParamSnapshot = std::map<std::string, num::Tensor>;

// Parameter-name prefixes of the three trainable blocks.
inline constexpr const char* kEncoderPrefix = "enc.";
inline constexpr const char* kPosPrefix = "pos.";
inline constexpr const char* kDecoderPrefix = "dec.";

// Fusion encoder + POS generator + caption decoder over one ParameterStore.
// Pinned in memory: the blocks keep pointers into the store.
class CaptionModel {
 public:
  CaptionModel(ModelConfig config, Vocabulary vocab, std::uint64_t init_seed);
  CaptionModel(const CaptionModel&) = delete;
  CaptionModel& operator=(const CaptionModel&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  num::ParameterStore& params() noexcept { return store_; }
  const num::ParameterStore& params() const noexcept { return store_; }
  const FusionEncoder& encoder() const noexcept { return encoder_; }
  const PosGenerator& pos() const noexcept { return pos_; }
  const CaptionDecoder& decoder() const noexcept { return decoder_; }

  // Fused sequence X of a clip; with mask_padding only the first
  // true_length rows are returned.
  num::Var fused(num::Tape& tape, const FeatureClip& clip) const;
  num::Var fused(num::Tape& tape, num::Var content, num::Var motion,
                 std::size_t true_length) const;

  ParamSnapshot snapshot() const;
  // Shapes must match exactly.
  void restore(const ParamSnapshot& snap);
  // Rounds every parameter to the nearest float32, the checkpoint precision.
  void quantize_to_float();
  std::unique_ptr<CaptionModel> clone() const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  num::ParameterStore store_;
  num::Rng init_rng_;
  FusionEncoder encoder_;
  PosGenerator pos_;
  CaptionDecoder decoder_;
};

ModelConfig with_vocab(ModelConfig config, const Vocabulary& vocab);

}  // namespace caplab

#endif  // CAPLAB_MODEL_HPP
