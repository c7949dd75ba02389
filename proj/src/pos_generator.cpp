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

#include "caplab/pos_generator.hpp"

#include <algorithm>

#include "caplab/errors.hpp"

namespace caplab {

using num::Var;

std::size_t argmax(const num::Tensor& v) {
  if (v.empty()) throw DomainError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

PosGenerator::PosGenerator(num::ParameterStore& store,
                           const ModelConfig& config, num::Rng& rng) {
  embed_ = num::Embedding::create(store, "pos.embed", kPosTagCount + 1,
                                  config.pos_embed_dim, rng);
  lstm_ = num::LstmCell::create(store, "pos.lstm",
                                config.pos_embed_dim + config.fused_dim,
                                config.pos_hidden, rng);
  attn_ = AttentionParams::create(store, "pos.attn", config.pos_hidden,
                                  config.fused_dim, config.attn_dim, rng);
  out_ = num::Linear::create(store, "pos.out", config.pos_hidden, kPosTagCount,
                             rng);
}

AttentionKeys PosGenerator::keys(num::Tape& tape, Var x) const {
  return prepare_keys(tape, x, attn_);
}

PosStepResult PosGenerator::step(num::Tape& tape, const AttentionKeys& keys,
                                 std::size_t prev_row,
                                 const num::LstmState& state) const {
  if (prev_row > kPosBeginRow) {
    throw DomainError("POS input row " + std::to_string(prev_row) +
                      " out of range");
  }
  AttentionResult ctx = attend(tape, keys, state.h, attn_);
  Var input = num::concat(embed_(tape, prev_row), ctx.context);
  num::LstmState next = num::lstm_step(tape, lstm_, input, state);
  return {out_(tape, next.h), next, ctx.weights};
}

PosDecodeResult PosGenerator::decode(num::Tape& tape, Var x,
                                     std::size_t max_len,
                                     const PosOverrides& overrides) const {
  if (max_len == 0) throw DomainError("POS decode needs max_len >= 1");
  const AttentionKeys k = keys(tape, x);
  num::LstmState state = initial_state(tape);
  std::size_t prev = kPosBeginRow;
  PosDecodeResult out;
  bool edited = false;
  std::vector<std::size_t> used;
  for (std::size_t t = 0; t < max_len; ++t) {
    PosStepResult r = step(tape, k, prev, state);
    PosTag tag = pos_from_index(argmax(r.logits.value()));
    auto it = overrides.find(t);
    const bool last = t + 1 == max_len;
    if (it != overrides.end() && (!last || it->second == PosTag::EOS)) {
      tag = it->second;
      edited = true;
      used.push_back(t);
    }
    if (last) tag = PosTag::EOS;
    state = r.state;
    out.tags.tags.push_back(tag);
    out.attention.push_back(r.attention.value());
    out.hidden.push_back(state.h.value());
    if (tag == PosTag::EOS) break;
    prev = pos_index(tag);
  }
  for (const auto& [pos, _] : overrides) {
    if (std::find(used.begin(), used.end(), pos) == used.end()) {
      out.unused_overrides.push_back(pos);
    }
  }
  out.psi = state.h;
  out.feature = GlobalPosFeature{state.h.value(), out.tags, edited};
  return out;
}

Var PosGenerator::xe_loss(num::Tape& tape, Var x,
                          const PosSequence& gold) const {
  if (!gold.valid()) {
    throw DomainError("gold POS sequence must be non-empty and EOS-terminated");
  }
  const AttentionKeys k = keys(tape, x);
  num::LstmState state = initial_state(tape);
  std::size_t prev = kPosBeginRow;
  std::vector<Var> terms;
  terms.reserve(gold.size());
  for (PosTag tag : gold.tags) {
    PosStepResult r = step(tape, k, prev, state);
    terms.push_back(num::pick(num::log_softmax(r.logits), pos_index(tag)));
    state = r.state;
    prev = pos_index(tag);
  }
  return num::neg(num::sum(num::stack_rows(terms)));
}

}  // namespace caplab
