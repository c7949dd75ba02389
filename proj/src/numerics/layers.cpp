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

#include "caplab/numerics/layers.hpp"

#include <cmath>

#include "caplab/errors.hpp"

namespace caplab::num {

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw DomainError("Rng::index on empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

Linear Linear::create(ParameterStore& store, const std::string& prefix,
                      std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  Linear l;
  l.weight = &store.create(prefix + ".w", glorot_uniform(out_dim, in_dim, rng));
  l.bias = &store.create(prefix + ".b", Tensor({out_dim}));
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  return affine(tape.param(*weight), x, tape.param(*bias));
}

Var Linear::rows(Tape& tape, Var m) const {
  return affine_rows(m, tape.param(*weight), tape.param(*bias));
}

Embedding Embedding::create(ParameterStore& store, const std::string& name,
                            std::size_t count, std::size_t dim, Rng& rng) {
  Embedding e;
  e.table = &store.create(name, glorot_uniform(count, dim, rng));
  return e;
}

Var Embedding::operator()(Tape& tape, std::size_t id) const {
  return row(tape.param(*table), id);
}

LstmCell LstmCell::create(ParameterStore& store, const std::string& prefix,
                          std::size_t input_dim, std::size_t hidden_dim,
                          Rng& rng) {
  LstmCell cell;
  cell.input_dim = input_dim;
  cell.hidden_dim = hidden_dim;
  cell.weight = &store.create(
      prefix + ".w", glorot_uniform(4 * hidden_dim, input_dim + hidden_dim, rng));
  Tensor bias({4 * hidden_dim});
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) bias[i] = 1.0;
  cell.bias = &store.create(prefix + ".b", std::move(bias));
  return cell;
}

LstmState LstmCell::zero_state(Tape& tape) const {
  return {tape.constant(Tensor({hidden_dim})),
          tape.constant(Tensor({hidden_dim}))};
}

LstmState lstm_step(Tape& tape, const LstmCell& cell, Var x,
                    const LstmState& prev) {
  const std::size_t H = cell.hidden_dim;
  if (x.size() != cell.input_dim || prev.h.size() != H || prev.c.size() != H) {
    throw DimensionError("lstm_step: cell " + std::to_string(cell.input_dim) +
                         "->" + std::to_string(H) + " given x " +
                         shape_string(x.shape()) + ", h " +
                         shape_string(prev.h.shape()) + ", c " +
                         shape_string(prev.c.shape()));
  }
  Var gates = affine(tape.param(*cell.weight), concat(x, prev.h),
                     tape.param(*cell.bias));
  Var in_gate = sigmoid(slice(gates, 0, H));
  Var forget_gate = sigmoid(slice(gates, H, H));
  Var candidate = tanh(slice(gates, 2 * H, H));
  Var out_gate = sigmoid(slice(gates, 3 * H, H));
  Var c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  Var h = mul(out_gate, tanh(c));
  return {h, c};
}

}  // namespace caplab::num
