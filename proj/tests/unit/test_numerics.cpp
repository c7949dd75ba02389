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

#include <cmath>
#include <vector>

#include "caplab/errors.hpp"
#include "caplab/numerics/grad_check.hpp"
#include "caplab/numerics/layers.hpp"
#include "caplab/numerics/optim.hpp"
#include "doctest.h"

using namespace caplab;
using namespace caplab::num;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar-by-scalar evaluation of the LSTM gate equations, independent of the
// tape ops.
void lstm_oracle(const Tensor& w, const Tensor& b, const std::vector<double>& x,
                 const std::vector<double>& h, const std::vector<double>& c,
                 std::size_t H, std::vector<double>& h_out,
                 std::vector<double>& c_out) {
  std::vector<double> in(x);
  in.insert(in.end(), h.begin(), h.end());
  auto pre = [&](std::size_t r) {
    double acc = b[r];
    for (std::size_t j = 0; j < in.size(); ++j) acc += w.at(r, j) * in[j];
    return acc;
  };
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigm(pre(k));
    const double f = sigm(pre(H + k));
    const double g = std::tanh(pre(2 * H + k));
    const double o = sigm(pre(3 * H + k));
    c_out[k] = f * c[k] + i * g;
    h_out[k] = o * std::tanh(c_out[k]);
  }
}

}  // namespace

TEST_CASE("relu, sigmoid and softmax on definitional inputs") {
  Tape tape;
  Var r = relu(tape.constant(Tensor::vector({-1, 0, 2})));
  CHECK(r.value() == Tensor::vector({0, 0, 2}));
  CHECK(sigmoid(tape.constant(Tensor::vector({0.0}))).value()[0] == 0.5);
  for (double c : {-7.0, 0.0, 3.5, 1e3}) {
    Var s = softmax(tape.constant(Tensor::vector({c, c, c})));
    for (double p : s.value().values()) CHECK(p == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("softmax normalizes and is shift invariant") {
  Rng rng(11);
  for (int seed = 0; seed < 50; ++seed) {
    Tape tape;
    Tensor logits = random_tensor({7}, rng, 20.0);
    Tensor shifted = logits;
    const double c = rng.uniform(-100, 100);
    for (auto& v : shifted.data()) v += c;
    const Tensor p = softmax(tape.constant(logits)).value();
    const Tensor q = softmax(tape.constant(shifted)).value();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      total += p[i];
      CHECK(std::abs(p[i] - q[i]) < 1e-9);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("shape and domain errors") {
  Tape tape;
  Var a = tape.constant(Tensor::vector({1, 2}));
  Var b = tape.constant(Tensor::vector({1, 2, 3}));
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(matvec(tape.constant(Tensor({2, 2})), b), DimensionError);
  CHECK_THROWS_AS(softmax(tape.constant(Tensor(Shape{0}))), DomainError);
  Tape grad_tape;
  Var x = grad_tape.input(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(grad_tape.backward(x), ContractError);
}

TEST_CASE("backward on elementary losses") {
  Tape tape;
  Var x = tape.input(Tensor({2, 3}, 0.7));
  tape.backward(sum(x));
  for (double g : tape.grad(x).values()) CHECK(g == 1.0);

  Tape sq;
  Var y = sq.input(Tensor::vector({1, 2}));
  sq.backward(sum(mul(y, y)));
  CHECK(sq.grad(y) == Tensor::vector({2, 4}));
}

TEST_CASE("two backward passes accumulate exactly twice the gradient") {
  Rng rng(3);
  ParameterStore store;
  LstmCell cell = LstmCell::create(store, "cell", 3, 2, rng);
  Tensor x = random_tensor({3}, rng);
  store.zero_grad();
  Tape tape;
  LstmState s = lstm_step(tape, cell, tape.constant(x), cell.zero_state(tape));
  Var loss = sum(s.h);
  tape.backward(loss);
  const Tensor once = cell.weight->grad;
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(cell.weight->grad[i] == 2.0 * once[i]);
  }
}

TEST_CASE("lstm_step") {
  SUBCASE("zero parameters and state give zero outputs") {
    ParameterStore store;
    Rng rng(1);
    LstmCell cell = LstmCell::create(store, "cell", 4, 3, rng);
    cell.weight->value.fill(0.0);
    cell.bias->value.fill(0.0);
    Tape tape;
    LstmState s = lstm_step(tape, cell,
                            tape.constant(Tensor::vector({1, -2, 3, 0.5})),
                            cell.zero_state(tape));
    for (double v : s.h.value().values()) CHECK(v == 0.0);
    for (double v : s.c.value().values()) CHECK(v == 0.0);
  }
  SUBCASE("forget bias starts at one, other biases at zero") {
    ParameterStore store;
    Rng rng(1);
    LstmCell cell = LstmCell::create(store, "cell", 2, 3, rng);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(cell.bias->value[i] == ((i >= 3 && i < 6) ? 1.0 : 0.0));
    }
  }
  SUBCASE("matches the scalar gate oracle and is deterministic") {
    Rng rng(42);
    ParameterStore store;
    LstmCell cell = LstmCell::create(store, "cell", 3, 2, rng);
    cell.bias->value = random_tensor({8}, rng);
    const Tensor x = random_tensor({3}, rng);
    const Tensor h = random_tensor({2}, rng);
    const Tensor c = random_tensor({2}, rng);
    Tape tape;
    LstmState out = lstm_step(tape, cell, tape.constant(x),
                              {tape.constant(h), tape.constant(c)});
    std::vector<double> h_ref, c_ref;
    lstm_oracle(cell.weight->value, cell.bias->value, x.data(), h.data(),
                c.data(), 2, h_ref, c_ref);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(out.h.value()[k] - h_ref[k]) < 1e-12);
      CHECK(std::abs(out.c.value()[k] - c_ref[k]) < 1e-12);
    }
    Tape again;
    LstmState out2 = lstm_step(again, cell, again.constant(x),
                               {again.constant(h), again.constant(c)});
    CHECK(out2.h.value() == out.h.value());
    CHECK(out2.c.value() == out.c.value());
  }
  SUBCASE("rejects mismatched shapes") {
    ParameterStore store;
    Rng rng(1);
    LstmCell cell = LstmCell::create(store, "cell", 3, 2, rng);
    Tape tape;
    CHECK_THROWS_AS(lstm_step(tape, cell, tape.constant(Tensor({4})),
                              cell.zero_state(tape)),
                    DimensionError);
  }
}

TEST_CASE("composite LSTM + softmax loss matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    LstmCell cell = LstmCell::create(store, "cell", 3, 4, rng);
    Linear out = Linear::create(store, "out", 4, 5, rng);
    out.bias->value = random_tensor({5}, rng);
    const Tensor x1 = random_tensor({3}, rng), x2 = random_tensor({3}, rng);
    auto loss = [&](Tape& t) {
      LstmState s = cell.zero_state(t);
      s = lstm_step(t, cell, t.constant(x1), s);
      s = lstm_step(t, cell, t.constant(x2), s);
      return neg(pick(log_softmax(out(t, s.h)), seed % 5));
    };
    auto report = grad_check_params(
        loss, {cell.weight, cell.bias, out.weight, out.bias});
    CHECK(report.max_relative_error < 1e-4);
  }
}

TEST_CASE("grad_check") {
  Rng rng(5);
  const Tensor point = random_tensor({6}, rng, 2.0);
  CHECK(grad_check([](Tape&, Var x) { return sum(sigmoid(x)); }, point) < 1e-6);
  CHECK(grad_check([](Tape& t, Var) { return t.constant(Tensor::vector({3.0})); },
                   point) == 0.0);
  // Every differentiable primitive, through one composite expression.
  const Tensor m = random_tensor({3, 4}, rng);
  const Tensor w = random_tensor({2, 4}, rng);
  const Tensor wt = random_tensor({4, 2}, rng);
  const Tensor v = random_tensor({2}, rng);
  auto composite = [&](Tape& t, Var x) {
    Var M = t.constant(m);
    Var xs = slice(x, 0, 4);
    Var rows = affine_rows(add_to_rows(M, xs), t.constant(w), t.constant(v));
    Var mixed = concat_cols(rows, tanh(slice_rows(add_to_rows(M, xs), 0, 3)));
    Var ctx = weighted_row_sum(mixed, softmax(slice(x, 2, 3)));
    Var z = concat(sigmoid(ctx), exp(scale(slice(x, 4, 2), 0.3)));
    Var prod = matmul(stack_rows({xs, add_scalar(xs, 1.0)}), t.constant(wt));
    Var lin = affine(t.constant(w), xs, t.constant(v));
    Var lsm = log_softmax(sub(matvec(t.constant(w), xs), lin));
    return add(add(mean(mul(z, z)), dot(row(prod, 1), slice(x, 0, 2))),
               add(sum(log(add_scalar(exp(slice(x, 0, 2)), 1.0))),
                   add(pick(lsm, 0), sum(relu(add_scalar(x, 0.05))))));
  };
  CHECK(grad_check(composite, point) < 1e-6);
}

TEST_CASE("AdaDelta") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p{"p", Tensor::vector({0.5, -1.5}), Tensor({2})};
    AdaDelta opt;
    std::vector<Parameter*> ps{&p};
    for (int i = 0; i < 5; ++i) opt.step(ps);
    CHECK(p.value == Tensor::vector({0.5, -1.5}));
  }
  SUBCASE("opposite gradients give opposite updates") {
    Parameter p{"p", Tensor({2}), Tensor::vector({0.3, -0.3})};
    AdaDelta opt;
    std::vector<Parameter*> ps{&p};
    for (int i = 0; i < 4; ++i) opt.step(ps);
    CHECK(p.value[0] == -p.value[1]);
    CHECK(p.value[0] < 0.0);
  }
  SUBCASE("ten steps match a hand recurrence") {
    const double rho = 0.95, eps = 1e-6;
    const std::vector<double> grads = {1.0, -0.5, 2.0, 0.25, 0.0,
                                       -3.0, 1.5, 0.75, -0.1, 0.6};
    double x = 0.2, eg2 = 0.0, edx2 = 0.0;
    Parameter p{"p", Tensor::vector({0.2}), Tensor({1})};
    AdaDelta opt(rho, eps, 1.0);
    std::vector<Parameter*> ps{&p};
    for (double g : grads) {
      eg2 = rho * eg2 + (1 - rho) * g * g;
      const double dx = -std::sqrt(edx2 + eps) / std::sqrt(eg2 + eps) * g;
      edx2 = rho * edx2 + (1 - rho) * dx * dx;
      x += dx;
      p.grad[0] = g;
      opt.step(ps);
      CHECK(std::abs(p.value[0] - x) < 1e-12);
    }
  }
  SUBCASE("non-finite gradient throws before any update") {
    Parameter a{"a", Tensor::vector({1.0}), Tensor::vector({0.5})};
    Parameter b{"b", Tensor::vector({1.0}), Tensor::vector({std::nan("")})};
    AdaDelta opt;
    std::vector<Parameter*> ps{&a, &b};
    CHECK_THROWS_AS(opt.step(ps), NumericError);
    CHECK(a.value[0] == 1.0);
  }
}

TEST_CASE("clip_grad_norm rescales to the maximum") {
  Parameter a{"a", Tensor({2}), Tensor::vector({3.0, 0.0})};
  Parameter b{"b", Tensor({1}), Tensor::vector({4.0})};
  std::vector<Parameter*> ps{&a, &b};
  CHECK(clip_grad_norm(ps, 5.0) == 5.0);
  CHECK(a.grad[0] == 3.0);
  CHECK(clip_grad_norm(ps, 1.0) == 5.0);
  CHECK(std::abs(global_grad_norm(ps) - 1.0) < 1e-15);
}

TEST_CASE("no-grad tape records values only") {
  Tape tape(false);
  Var x = tape.input(Tensor::vector({1.0, 2.0}));
  Var y = sum(mul(x, x));
  CHECK(y.value()[0] == 5.0);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}
