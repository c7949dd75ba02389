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

#ifndef CAPLAB_ATTENTION_HPP
#define CAPLAB_ATTENTION_HPP

#include <string>

#include "caplab/numerics/layers.hpp"

namespace caplab {

// Additive (MLP) attention scorer: e_i = w . tanh(W q + U x_i + b).
struct AttentionParams {
  num::Parameter* score = nullptr;  // w: attn_dim
  num::Parameter* query = nullptr;  // W: attn_dim x query_dim
  num::Parameter* key = nullptr;    // U: attn_dim x key_dim
  num::Parameter* bias = nullptr;   // b: attn_dim

  static AttentionParams create(num::ParameterStore& store,
                                const std::string& prefix,
                                std::size_t query_dim, std::size_t key_dim,
                                std::size_t attn_dim, num::Rng& rng);
  std::size_t query_dim() const { return query->value.cols(); }
  std::size_t key_dim() const { return key->value.cols(); }
};

// U x_i + b for every key row, computed once per sequence.
struct AttentionKeys {
  num::Var x;
  num::Var projected;
};

struct AttentionResult {
  num::Var context;  // sum_i weights_i x_i
  num::Var weights;  // softmax over the m scores
};

AttentionKeys prepare_keys(num::Tape& tape, num::Var x,
                           const AttentionParams& params);
AttentionResult attend(num::Tape& tape, const AttentionKeys& keys,
                       num::Var query, const AttentionParams& params);
// Convenience form for one-off queries.
AttentionResult attend(num::Tape& tape, num::Var x, num::Var query,
                       const AttentionParams& params);

}  // namespace caplab

#endif  // CAPLAB_ATTENTION_HPP
