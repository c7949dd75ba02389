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

// Reverse-mode automatic differentiation over Tensor values.
//
// A Tape records every operation applied to its Vars in creation order, which
// is already a topological order of the graph. backward() walks the nodes in
// reverse, pushing adjoints through each node's local derivative, and finally
// adds leaf adjoints into the owning Parameter::grad (or, for input leaves,
// into a per-leaf accumulator readable through Tape::grad).

#ifndef CAPLAB_NUMERICS_TAPE_HPP
#define CAPLAB_NUMERICS_TAPE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <deque>
#include <vector>

#include "caplab/numerics/tensor.hpp"

namespace caplab::num {

// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(value.shape()); }
};

// Owns every Parameter of a model. std::map keeps references stable and
// iteration sorted by name, which fixes checkpoint and optimizer order.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::map<std::string, Parameter>& all() noexcept { return params_; }
  const std::map<std::string, Parameter>& all() const noexcept {
    return params_;
  }
  // Parameters whose name starts with any of the given prefixes.
  std::vector<Parameter*> with_prefix(const std::vector<std::string>& prefixes);

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the Tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  // With record_gradients == false the tape only evaluates values; parameter
  // leaves are treated as constants and no backward closures are kept.
  explicit Tape(bool record_gradients = true)
      : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is accumulated and exposed through grad().
  Var input(Tensor value);
  // Leaf bound to a Parameter. Repeated calls with the same Parameter reuse
  // one node, so a weight used at every time step is copied once per tape.
  Var param(Parameter& p);

  // Propagates d(loss)/d(node) for a scalar loss. Parameter grads and input
  // leaf grads accumulate across calls.
  void backward(Var loss);

  const Tensor& grad(Var leaf) const;
  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool recording() const noexcept { return record_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Low-level node construction for op implementations.
  using Backprop = std::function<void(Tape&, std::uint32_t self)>;
  Var push(Tensor value, std::vector<std::uint32_t> inputs, Backprop backprop);
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  // Adjoint buffer of a node, allocated as zeros on first touch.
  Tensor& adjoint(std::uint32_t id);
  const Tensor& adjoint_of(std::uint32_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backprop backprop;
    Parameter* param = nullptr;
    bool needs_grad = false;
    bool is_input = false;
    Tensor leaf_grad;
  };

  bool record_;
  std::deque<Node> nodes_;  // stable references across push_back
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Vectors are rank-1, matrices rank-2; every op
// validates shapes and throws DimensionError on mismatch.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);

// Softmax / log-softmax over a vector (max-subtracted).
Var softmax(Var logits);
Var log_softmax(Var logits);

Var matvec(Var w, Var x);              // (r x c) * (c) -> (r)
Var matmul(Var a, Var b);              // (n x k) * (k x m) -> (n x m)
Var affine(Var w, Var x, Var b);       // w * x + b
Var affine_rows(Var m, Var w, Var b);  // each row: w * row + b -> (n x r)
Var add_to_rows(Var m, Var v);         // broadcast v over rows
Var weighted_row_sum(Var m, Var w);    // sum_i w_i * row_i -> (cols)

Var concat(Var a, Var b);       // vectors
Var concat_cols(Var a, Var b);  // matrices with equal row counts
Var slice(Var v, std::size_t offset, std::size_t length);
Var slice_rows(Var m, std::size_t offset, std::size_t count);
Var stack_rows(const std::vector<Var>& rows);
Var row(Var m, std::size_t index);  // embedding lookup
Var pick(Var v, std::size_t index);  // scalar element

Var sum(Var a);
Var mean(Var a);
Var dot(Var a, Var b);

}  // namespace caplab::num

#endif  // CAPLAB_NUMERICS_TAPE_HPP
