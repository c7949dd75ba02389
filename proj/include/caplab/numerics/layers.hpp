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

#ifndef CAPLAB_NUMERICS_LAYERS_HPP
#define CAPLAB_NUMERICS_LAYERS_HPP

#include <cstdint>
#include <random>
#include <string>

#include "caplab/numerics/tape.hpp"

namespace caplab::num {

// Seeded generator shared by initialization, corpus synthesis and sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);  // uniform in [0, n)
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Uniform in [-a, a], a = sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// y = W x + b with W stored (out x in).
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterStore& store, const std::string& prefix,
                       std::size_t in_dim, std::size_t out_dim, Rng& rng);
  std::size_t in_dim() const { return weight->value.cols(); }
  std::size_t out_dim() const { return weight->value.rows(); }
  Var operator()(Tape& tape, Var x) const;
  // Applies the layer to every row of a matrix.
  Var rows(Tape& tape, Var m) const;
};

struct Embedding {
  Parameter* table = nullptr;

  static Embedding create(ParameterStore& store, const std::string& name,
                          std::size_t count, std::size_t dim, Rng& rng);
  std::size_t count() const { return table->value.rows(); }
  std::size_t dim() const { return table->value.cols(); }
  Var operator()(Tape& tape, std::size_t id) const;
};

struct LstmState {
  Var h;
  Var c;
};

// Packed LSTM cell. weight is (4H x (I + H)) acting on [x, h_prev]; the four
// row blocks are, in order, input gate, forget gate, cell candidate and
// output gate. Forget-gate bias starts at 1.
struct LstmCell {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static LstmCell create(ParameterStore& store, const std::string& prefix,
                         std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng);
  LstmState zero_state(Tape& tape) const;
};

LstmState lstm_step(Tape& tape, const LstmCell& cell, Var x,
                    const LstmState& prev);

}  // namespace caplab::num

#endif  // CAPLAB_NUMERICS_LAYERS_HPP
