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

// Two-layer hierarchical caption decoder guided by the global POS feature.
// One step, given previous word s and states (h1, z1), (h2, z2):
//
//   psi'        = relu(W_g E(s) + b_g) * psi + psi
//   ctx         = attend(X, [h1, h2])            (states of the previous step)
//   h1', z1'    = LSTM_1([E(s), psi'], h1, z1)
//   h2', z2'    = LSTM_2([h1', ctx], h2, z2)
//   logits      = W_s h2' + b_s

#ifndef CAPLAB_CAPTION_DECODER_HPP
#define CAPLAB_CAPTION_DECODER_HPP

#include <vector>

#include "caplab/attention.hpp"
#include "caplab/config.hpp"
#include "caplab/fusion_encoder.hpp"
#include "caplab/numerics/layers.hpp"

namespace caplab {

struct DecoderState {
  num::LstmState layer1;
  num::LstmState layer2;
};

struct DecoderStepResult {
  num::Var logits;  // vocab_size scores
  DecoderState state;
  num::Var attention;
  num::Var gated_psi;
};

class CaptionDecoder {
 public:
  CaptionDecoder(num::ParameterStore& store, const ModelConfig& config,
                 num::Rng& rng);

  AttentionKeys keys(num::Tape& tape, num::Var x) const;
  DecoderState initial_state(num::Tape& tape) const;

  num::Var gate_psi(num::Tape& tape, num::Var word_embedding,
                    num::Var psi) const;
  DecoderStepResult step(num::Tape& tape, const AttentionKeys& keys,
                         std::size_t prev_word, num::Var psi,
                         const DecoderState& state) const;

  // tokens = BOS w_1 .. w_n EOS; returns sum_t -log P(tokens[t] | tokens<t).
  num::Var xe_loss(num::Tape& tape, num::Var x, num::Var psi,
                   const std::vector<std::size_t>& tokens) const;

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  const num::Embedding& embedding() const { return embed_; }
  const GatingParams& psi_gate() const { return gate_; }
  const num::LstmCell& layer1() const { return layer1_; }
  const num::LstmCell& layer2() const { return layer2_; }
  const AttentionParams& attention() const { return attn_; }
  const num::Linear& output() const { return out_; }

 private:
  std::size_t vocab_size_;
  num::Embedding embed_;
  GatingParams gate_;
  num::LstmCell layer1_;
  num::LstmCell layer2_;
  AttentionParams attn_;
  num::Linear out_;
};

}  // namespace caplab

#endif  // CAPLAB_CAPTION_DECODER_HPP
