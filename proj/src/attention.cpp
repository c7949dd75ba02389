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

#include "caplab/attention.hpp"

#include "caplab/errors.hpp"

namespace caplab {

using num::Var;

AttentionParams AttentionParams::create(num::ParameterStore& store,
                                        const std::string& prefix,
                                        std::size_t query_dim,
                                        std::size_t key_dim,
                                        std::size_t attn_dim, num::Rng& rng) {
  AttentionParams p;
  num::Tensor w = num::glorot_uniform(attn_dim, 1, rng);
  p.score = &store.create(prefix + ".score",
                          num::Tensor({attn_dim}, std::move(w.data())));
  p.query = &store.create(prefix + ".query",
                          num::glorot_uniform(attn_dim, query_dim, rng));
  p.key = &store.create(prefix + ".key",
                        num::glorot_uniform(attn_dim, key_dim, rng));
  p.bias = &store.create(prefix + ".b", num::Tensor({attn_dim}));
  return p;
}

AttentionKeys prepare_keys(num::Tape& tape, Var x,
                           const AttentionParams& params) {
  if (x.value().rank() != 2) {
    throw DimensionError("attention keys must be a matrix, got " +
                         num::shape_string(x.shape()));
  }
  if (x.value().rows() == 0) throw DomainError("attention over zero steps");
  if (x.value().cols() != params.key_dim()) {
    throw DimensionError("attention key width " +
                         std::to_string(x.value().cols()) + " vs expected " +
                         std::to_string(params.key_dim()));
  }
  return {x, num::affine_rows(x, tape.param(*params.key),
                              tape.param(*params.bias))};
}

AttentionResult attend(num::Tape& tape, const AttentionKeys& keys, Var query,
                       const AttentionParams& params) {
  if (query.size() != params.query_dim()) {
    throw DimensionError("attention query " + num::shape_string(query.shape()) +
                         " vs expected " + std::to_string(params.query_dim()));
  }
  Var q = num::matvec(tape.param(*params.query), query);
  Var hidden = num::tanh(num::add_to_rows(keys.projected, q));
  Var scores = num::matvec(hidden, tape.param(*params.score));
  Var weights = num::softmax(scores);
  return {num::weighted_row_sum(keys.x, weights), weights};
}

AttentionResult attend(num::Tape& tape, Var x, Var query,
                       const AttentionParams& params) {
  return attend(tape, prepare_keys(tape, x, params), query, params);
}

}  // namespace caplab
