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

#include "caplab/caption_decoder.hpp"

#include "caplab/errors.hpp"

namespace caplab {

using num::Var;

CaptionDecoder::CaptionDecoder(num::ParameterStore& store,
                               const ModelConfig& config, num::Rng& rng)
    : vocab_size_(config.vocab_size) {
  if (vocab_size_ == 0) throw ConfigError("decoder needs vocab_size > 0");
  embed_ = num::Embedding::create(store, "dec.embed", vocab_size_,
                                  config.word_embed_dim, rng);
  gate_ = GatingParams::create(store, "dec.psi_gate", config.word_embed_dim,
                               config.pos_hidden, rng);
  layer1_ = num::LstmCell::create(store, "dec.lstm1",
                                  config.word_embed_dim + config.pos_hidden,
                                  config.dec_hidden, rng);
  layer2_ = num::LstmCell::create(store, "dec.lstm2",
                                  config.dec_hidden + config.fused_dim,
                                  config.dec_hidden, rng);
  attn_ = AttentionParams::create(store, "dec.attn", 2 * config.dec_hidden,
                                  config.fused_dim, config.attn_dim, rng);
  out_ = num::Linear::create(store, "dec.out", config.dec_hidden, vocab_size_,
                             rng);
}

AttentionKeys CaptionDecoder::keys(num::Tape& tape, Var x) const {
  return prepare_keys(tape, x, attn_);
}

DecoderState CaptionDecoder::initial_state(num::Tape& tape) const {
  return {layer1_.zero_state(tape), layer2_.zero_state(tape)};
}

Var CaptionDecoder::gate_psi(num::Tape& tape, Var word_embedding,
                             Var psi) const {
  return cross_gate(tape, word_embedding, psi, gate_);
}

DecoderStepResult CaptionDecoder::step(num::Tape& tape,
                                       const AttentionKeys& keys,
                                       std::size_t prev_word, Var psi,
                                       const DecoderState& state) const {
  if (prev_word >= vocab_size_) {
    throw DomainError("token id " + std::to_string(prev_word) +
                      " outside vocabulary of " + std::to_string(vocab_size_));
  }
  Var word = embed_(tape, prev_word);
  Var gated = gate_psi(tape, word, psi);
  AttentionResult ctx =
      attend(tape, keys, num::concat(state.layer1.h, state.layer2.h), attn_);
  num::LstmState l1 =
      num::lstm_step(tape, layer1_, num::concat(word, gated), state.layer1);
  num::LstmState l2 = num::lstm_step(
      tape, layer2_, num::concat(l1.h, ctx.context), state.layer2);
  return {out_(tape, l2.h), DecoderState{l1, l2}, ctx.weights, gated};
}

Var CaptionDecoder::xe_loss(num::Tape& tape, Var x, Var psi,
                            const std::vector<std::size_t>& tokens) const {
  if (tokens.size() < 2) {
    throw DomainError("caption needs at least BOS and EOS");
  }
  const AttentionKeys k = keys(tape, x);
  DecoderState state = initial_state(tape);
  std::vector<Var> terms;
  terms.reserve(tokens.size() - 1);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    DecoderStepResult r = step(tape, k, tokens[t - 1], psi, state);
    if (tokens[t] >= vocab_size_) {
      throw DomainError("gold token id " + std::to_string(tokens[t]) +
                        " outside vocabulary");
    }
    terms.push_back(num::pick(num::log_softmax(r.logits), tokens[t]));
    state = r.state;
  }
  return num::neg(num::sum(num::stack_rows(terms)));
}

}  // namespace caplab
