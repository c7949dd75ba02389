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

// Attentive LSTM that predicts the POS tag sequence of the caption from the
// fused video sequence X. Its hidden state after emitting EOS is the global
// POS feature psi handed to the caption decoder.
//
//   h_t, z_t = LSTM([E_pos(c_{t-1}), attend(X, h_{t-1})], h_{t-1})
//   P(c_t)   = softmax(W_out h_t + b_out)
//
// c_0 is a dedicated begin row of the tag embedding table.

#ifndef CAPLAB_POS_GENERATOR_HPP
#define CAPLAB_POS_GENERATOR_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "caplab/attention.hpp"
#include "caplab/config.hpp"
#include "caplab/numerics/layers.hpp"
#include "caplab/pos_tag.hpp"

namespace caplab {

struct GlobalPosFeature {
  num::Tensor psi;
  PosSequence source_tags;
  bool edited = false;
};

struct PosStepResult {
  num::Var logits;  // 14 scores, pre-softmax
  num::LstmState state;
  num::Var attention;
};

// Position -> forced tag. A forced tag replaces the argmax and is fed
// forward as c_t.
using PosOverrides = std::map<std::size_t, PosTag>;

struct PosDecodeResult {
  PosSequence tags;
  GlobalPosFeature feature;
  num::Var psi;
  std::vector<num::Tensor> attention;  // one m-vector per emitted tag
  std::vector<num::Tensor> hidden;     // h_t after each emitted tag
  std::vector<std::size_t> unused_overrides;
};

class PosGenerator {
 public:
  PosGenerator(num::ParameterStore& store, const ModelConfig& config,
               num::Rng& rng);

  AttentionKeys keys(num::Tape& tape, num::Var x) const;
  num::LstmState initial_state(num::Tape& tape) const {
    return lstm_.zero_state(tape);
  }
  // prev_row is a tag index or kPosBeginRow.
  PosStepResult step(num::Tape& tape, const AttentionKeys& keys,
                     std::size_t prev_row, const num::LstmState& state) const;

  // Greedy decoding with optional forced tags. Stops after EOS; the tag at
  // position max_len - 1 is always EOS.
  PosDecodeResult decode(num::Tape& tape, num::Var x, std::size_t max_len,
                         const PosOverrides& overrides = {}) const;

  // Teacher-forced sum over t of -log P(gold_t | gold_<t, X).
  num::Var xe_loss(num::Tape& tape, num::Var x, const PosSequence& gold) const;

  const num::Embedding& embedding() const { return embed_; }
  const num::LstmCell& lstm() const { return lstm_; }
  const AttentionParams& attention() const { return attn_; }
  const num::Linear& output() const { return out_; }

 private:
  num::Embedding embed_;
  num::LstmCell lstm_;
  AttentionParams attn_;
  num::Linear out_;
};

std::size_t argmax(const num::Tensor& v);

}  // namespace caplab

#endif  // CAPLAB_POS_GENERATOR_HPP
