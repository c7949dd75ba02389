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

#include "caplab/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caplab/errors.hpp"

namespace caplab::num {

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::create(const std::string& name, Tensor init) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw ContractError("duplicate parameter name " + name);
  it->second.name = name;
  it->second.value = std::move(init);
  it->second.zero_grad();
  return it->second;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw LookupError("unknown parameter " + name);
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw LookupError("unknown parameter " + name);
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

std::vector<Parameter*> ParameterStore::with_prefix(
    const std::vector<std::string>& prefixes) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    for (const auto& prefix : prefixes) {
      if (name.rfind(prefix, 0) == 0) {
        out.push_back(&p);
        break;
      }
    }
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Tape

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = record_;
  n.is_input = true;
  n.leaf_grad = Tensor(n.value.shape());
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.needs_grad = record_;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::push(Tensor value, std::vector<std::uint32_t> inputs,
               Backprop backprop) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (auto i : inputs) {
      if (nodes_[i].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor& Tape::adjoint(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!record_) throw ContractError("backward on a tape without gradients");
  if (loss.tape() != this) throw ContractError("loss belongs to another tape");
  if (loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  adjoint(loss.id())[0] = 1.0;
  for (std::int64_t id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, static_cast<std::uint32_t>(id));
  }
  for (auto& n : nodes_) {
    if (n.grad.empty()) continue;
    if (n.param != nullptr) {
      if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
      auto& g = n.param->grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    } else if (n.is_input) {
      for (std::size_t i = 0; i < n.leaf_grad.size(); ++i) {
        n.leaf_grad[i] += n.grad[i];
      }
    }
  }
}

const Tensor& Tape::grad(Var leaf) const {
  const Node& n = nodes_[leaf.id()];
  if (!n.is_input) throw ContractError("grad() is only kept for input leaves");
  return n.leaf_grad;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractError("operands live on different tapes");
  }
  return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(Var a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         shape_string(a.shape()));
  }
}

// Element-wise unary op with derivative expressed through input x and
// output y.
template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Tape& t = *a.tape();
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const auto ia = a.id();
  return t.push(std::move(y), {ia}, [ia, dfdx](Tape& tp, std::uint32_t self) {
    if (!tp.needs_grad(ia)) return;
    const Tensor& g = tp.adjoint_of(self);
    const Tensor& xv = tp.value(ia);
    const Tensor& yv = tp.value(self);
    Tensor& ga = tp.adjoint(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * dfdx(xv[i], yv[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    for (auto id : {ia, ib}) {
      if (!tp.needs_grad(id)) continue;
      Tensor& gi = tp.adjoint(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "sub");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(ia)) {
      Tensor& ga = tp.adjoint(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(ib)) {
      Tensor& gb = tp.adjoint(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(ia)) {
      const Tensor& bv = tp.value(ib);
      Tensor& ga = tp.adjoint(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.needs_grad(ib)) {
      const Tensor& av = tp.value(ia);
      Tensor& gb = tp.adjoint(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(
      a, [s](double x) { return s * x; },
      [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a,
      [](double x) {
        if (!(x > 0.0)) throw DomainError("log of non-positive value");
        return std::log(x);
      },
      [](double x, double) { return 1.0 / x; });
}

Var softmax(Var logits) {
  require_rank(logits, 1, "softmax");
  const Tensor& x = logits.value();
  if (x.empty()) throw DomainError("softmax over an empty axis");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x.values()) mx = std::max(mx, v);
  Tensor y(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= z;
  const auto ia = logits.id();
  return logits.tape()->push(
      std::move(y), {ia}, [ia](Tape& tp, std::uint32_t s) {
        if (!tp.needs_grad(ia)) return;
        const Tensor& g = tp.adjoint_of(s);
        const Tensor& p = tp.value(s);
        double gp = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gp += g[i] * p[i];
        Tensor& ga = tp.adjoint(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += p[i] * (g[i] - gp);
      });
}

Var log_softmax(Var logits) {
  require_rank(logits, 1, "log_softmax");
  const Tensor& x = logits.value();
  if (x.empty()) throw DomainError("log_softmax over an empty axis");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : x.values()) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - lz;
  const auto ia = logits.id();
  return logits.tape()->push(
      std::move(y), {ia}, [ia](Tape& tp, std::uint32_t s) {
        if (!tp.needs_grad(ia)) return;
        const Tensor& g = tp.adjoint_of(s);
        const Tensor& ly = tp.value(s);
        double gs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gs += g[i];
        Tensor& ga = tp.adjoint(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] - std::exp(ly[i]) * gs;
        }
      });
}

Var matvec(Var w, Var x) {
  Tape& t = same_tape(w, x);
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const Tensor& W = w.value();
  const Tensor& xv = x.value();
  const std::size_t r = W.rows(), c = W.cols();
  if (xv.size() != c) {
    throw DimensionError("matvec: matrix " + shape_string(W.shape()) +
                         " times vector " + shape_string(xv.shape()));
  }
  Tensor y({r});
  for (std::size_t i = 0; i < r; ++i) {
    const double* wr = W.data().data() + i * c;
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += wr[j] * xv[j];
    y[i] = acc;
  }
  const auto iw = w.id(), ix = x.id();
  return t.push(std::move(y), {iw, ix}, [iw, ix, r, c](Tape& tp,
                                                       std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(iw)) {
      const Tensor& xv = tp.value(ix);
      Tensor& gw = tp.adjoint(iw);
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* gr = gw.data().data() + i * c;
        for (std::size_t j = 0; j < c; ++j) gr[j] += gi * xv[j];
      }
    }
    if (tp.needs_grad(ix)) {
      const Tensor& W = tp.value(iw);
      Tensor& gx = tp.adjoint(ix);
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* wr = W.data().data() + i * c;
        for (std::size_t j = 0; j < c; ++j) gx[j] += gi * wr[j];
      }
    }
  });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rows() != k) {
    throw DimensionError("matmul: " + shape_string(A.shape()) + " times " +
                         shape_string(B.shape()));
  }
  Tensor y({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      for (std::size_t j = 0; j < m; ++j) y.at(i, j) += aip * B.at(p, j);
    }
  }
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(y), {ia, ib}, [ia, ib, n, k, m](Tape& tp,
                                                          std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(ia)) {
      const Tensor& B = tp.value(ib);
      Tensor& ga = tp.adjoint(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g.at(i, j) * B.at(p, j);
          ga.at(i, p) += acc;
        }
    }
    if (tp.needs_grad(ib)) {
      const Tensor& A = tp.value(ia);
      Tensor& gb = tp.adjoint(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.at(i, p);
          for (std::size_t j = 0; j < m; ++j) gb.at(p, j) += aip * g.at(i, j);
        }
    }
  });
}

Var affine(Var w, Var x, Var b) { return add(matvec(w, x), b); }

Var affine_rows(Var m, Var w, Var b) {
  Tape& t = same_tape(m, w);
  same_tape(m, b);
  require_rank(m, 2, "affine_rows");
  require_rank(w, 2, "affine_rows");
  require_rank(b, 1, "affine_rows");
  const Tensor& M = m.value();
  const Tensor& W = w.value();
  const Tensor& bv = b.value();
  const std::size_t n = M.rows(), c = M.cols(), r = W.rows();
  if (W.cols() != c || bv.size() != r) {
    throw DimensionError("affine_rows: rows " + shape_string(M.shape()) +
                         ", weight " + shape_string(W.shape()) + ", bias " +
                         shape_string(bv.shape()));
  }
  Tensor y({n, r});
  for (std::size_t i = 0; i < n; ++i) {
    const double* mr = M.data().data() + i * c;
    for (std::size_t o = 0; o < r; ++o) {
      const double* wr = W.data().data() + o * c;
      double acc = bv[o];
      for (std::size_t j = 0; j < c; ++j) acc += wr[j] * mr[j];
      y.at(i, o) = acc;
    }
  }
  const auto im = m.id(), iw = w.id(), ib = b.id();
  return t.push(std::move(y), {im, iw, ib}, [im, iw, ib, n, c, r](
                                                Tape& tp, std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(ib)) {
      Tensor& gb = tp.adjoint(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < r; ++o) gb[o] += g.at(i, o);
    }
    if (tp.needs_grad(iw)) {
      const Tensor& M = tp.value(im);
      Tensor& gw = tp.adjoint(iw);
      for (std::size_t i = 0; i < n; ++i) {
        const double* mr = M.data().data() + i * c;
        for (std::size_t o = 0; o < r; ++o) {
          const double gio = g.at(i, o);
          if (gio == 0.0) continue;
          double* gr = gw.data().data() + o * c;
          for (std::size_t j = 0; j < c; ++j) gr[j] += gio * mr[j];
        }
      }
    }
    if (tp.needs_grad(im)) {
      const Tensor& W = tp.value(iw);
      Tensor& gm = tp.adjoint(im);
      for (std::size_t i = 0; i < n; ++i) {
        double* gr = gm.data().data() + i * c;
        for (std::size_t o = 0; o < r; ++o) {
          const double gio = g.at(i, o);
          if (gio == 0.0) continue;
          const double* wr = W.data().data() + o * c;
          for (std::size_t j = 0; j < c; ++j) gr[j] += gio * wr[j];
        }
      }
    }
  });
}

Var add_to_rows(Var m, Var v) {
  Tape& t = same_tape(m, v);
  require_rank(m, 2, "add_to_rows");
  require_rank(v, 1, "add_to_rows");
  const std::size_t n = m.value().rows(), c = m.value().cols();
  if (v.size() != c) {
    throw DimensionError("add_to_rows: " + shape_string(m.shape()) + " + " +
                         shape_string(v.shape()));
  }
  Tensor y = m.value();
  const Tensor& vv = v.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) y.at(i, j) += vv[j];
  const auto im = m.id(), iv = v.id();
  return t.push(std::move(y), {im, iv}, [im, iv, n, c](Tape& tp,
                                                       std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(im)) {
      Tensor& gm = tp.adjoint(im);
      for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    }
    if (tp.needs_grad(iv)) {
      Tensor& gv = tp.adjoint(iv);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gv[j] += g.at(i, j);
    }
  });
}

Var weighted_row_sum(Var m, Var w) {
  Tape& t = same_tape(m, w);
  require_rank(m, 2, "weighted_row_sum");
  require_rank(w, 1, "weighted_row_sum");
  const Tensor& M = m.value();
  const Tensor& wv = w.value();
  const std::size_t n = M.rows(), c = M.cols();
  if (wv.size() != n) {
    throw DimensionError("weighted_row_sum: " + shape_string(M.shape()) +
                         " with weights " + shape_string(wv.shape()));
  }
  Tensor y({c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j] += wv[i] * M.at(i, j);
  const auto im = m.id(), iw = w.id();
  return t.push(std::move(y), {im, iw}, [im, iw, n, c](Tape& tp,
                                                       std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(im)) {
      const Tensor& wv = tp.value(iw);
      Tensor& gm = tp.adjoint(im);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gm.at(i, j) += wv[i] * g[j];
    }
    if (tp.needs_grad(iw)) {
      const Tensor& M = tp.value(im);
      Tensor& gw = tp.adjoint(iw);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += M.at(i, j) * g[j];
        gw[i] += acc;
      }
    }
  });
}

Var concat(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_rank(a, 1, "concat");
  require_rank(b, 1, "concat");
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> v;
  v.reserve(na + nb);
  v.insert(v.end(), a.value().data().begin(), a.value().data().end());
  v.insert(v.end(), b.value().data().begin(), b.value().data().end());
  const auto ia = a.id(), ib = b.id();
  return t.push(Tensor::vector(std::move(v)), {ia, ib},
                [ia, ib, na, nb](Tape& tp, std::uint32_t s) {
                  const Tensor& g = tp.adjoint_of(s);
                  if (tp.needs_grad(ia)) {
                    Tensor& ga = tp.adjoint(ia);
                    for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
                  }
                  if (tp.needs_grad(ib)) {
                    Tensor& gb = tp.adjoint(ib);
                    for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
                  }
                });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t n = a.value().rows();
  if (b.value().rows() != n) {
    throw DimensionError("concat_cols: " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t ca = a.value().cols(), cb = b.value().cols();
  Tensor y({n, ca + cb});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ca; ++j) y.at(i, j) = a.value().at(i, j);
    for (std::size_t j = 0; j < cb; ++j) y.at(i, ca + j) = b.value().at(i, j);
  }
  const auto ia = a.id(), ib = b.id();
  return t.push(std::move(y), {ia, ib}, [ia, ib, n, ca, cb](Tape& tp,
                                                            std::uint32_t s) {
    const Tensor& g = tp.adjoint_of(s);
    if (tp.needs_grad(ia)) {
      Tensor& ga = tp.adjoint(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
    }
    if (tp.needs_grad(ib)) {
      Tensor& gb = tp.adjoint(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
    }
  });
}

Var slice(Var v, std::size_t offset, std::size_t length) {
  require_rank(v, 1, "slice");
  if (offset + length > v.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") of length " +
                         std::to_string(v.size()));
  }
  const auto& src = v.value().data();
  std::vector<double> y(src.begin() + static_cast<std::ptrdiff_t>(offset),
                        src.begin() +
                            static_cast<std::ptrdiff_t>(offset + length));
  const auto iv = v.id();
  return v.tape()->push(Tensor::vector(std::move(y)), {iv},
                        [iv, offset, length](Tape& tp, std::uint32_t s) {
                          if (!tp.needs_grad(iv)) return;
                          const Tensor& g = tp.adjoint_of(s);
                          Tensor& gv = tp.adjoint(iv);
                          for (std::size_t i = 0; i < length; ++i) {
                            gv[offset + i] += g[i];
                          }
                        });
}

Var slice_rows(Var m, std::size_t offset, std::size_t count) {
  require_rank(m, 2, "slice_rows");
  const std::size_t c = m.value().cols();
  if (offset + count > m.value().rows()) {
    throw DimensionError("slice_rows out of range for " +
                         shape_string(m.shape()));
  }
  const auto& src = m.value().data();
  std::vector<double> y(
      src.begin() + static_cast<std::ptrdiff_t>(offset * c),
      src.begin() + static_cast<std::ptrdiff_t>((offset + count) * c));
  const auto im = m.id();
  return m.tape()->push(Tensor({count, c}, std::move(y)), {im},
                        [im, offset, count, c](Tape& tp, std::uint32_t s) {
                          if (!tp.needs_grad(im)) return;
                          const Tensor& g = tp.adjoint_of(s);
                          Tensor& gm = tp.adjoint(im);
                          for (std::size_t i = 0; i < count * c; ++i) {
                            gm[offset * c + i] += g[i];
                          }
                        });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DomainError("stack_rows of zero rows");
  Tape& t = *rows.front().tape();
  const std::size_t c = rows.front().size();
  std::vector<double> y;
  y.reserve(rows.size() * c);
  std::vector<std::uint32_t> ids;
  ids.reserve(rows.size());
  for (const Var& r : rows) {
    if (r.tape() != &t) throw ContractError("stack_rows across tapes");
    require_rank(r, 1, "stack_rows");
    if (r.size() != c) throw DimensionError("stack_rows: ragged rows");
    y.insert(y.end(), r.value().data().begin(), r.value().data().end());
    ids.push_back(r.id());
  }
  const std::size_t n = rows.size();
  auto captured = ids;
  return t.push(Tensor({n, c}, std::move(y)), std::move(ids),
                [captured, c](Tape& tp, std::uint32_t s) {
                  const Tensor& g = tp.adjoint_of(s);
                  for (std::size_t i = 0; i < captured.size(); ++i) {
                    if (!tp.needs_grad(captured[i])) continue;
                    Tensor& gr = tp.adjoint(captured[i]);
                    for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
                  }
                });
}

Var row(Var m, std::size_t index) {
  require_rank(m, 2, "row");
  if (index >= m.value().rows()) {
    throw DomainError("row index " + std::to_string(index) +
                      " out of range for " + shape_string(m.shape()));
  }
  const std::size_t c = m.value().cols();
  auto r = m.value().row(index);
  const auto im = m.id();
  return m.tape()->push(
      Tensor::vector(std::vector<double>(r.begin(), r.end())), {im},
      [im, index, c](Tape& tp, std::uint32_t s) {
        if (!tp.needs_grad(im)) return;
        const Tensor& g = tp.adjoint_of(s);
        Tensor& gm = tp.adjoint(im);
        for (std::size_t j = 0; j < c; ++j) gm[index * c + j] += g[j];
      });
}

Var pick(Var v, std::size_t index) {
  if (index >= v.size()) {
    throw DomainError("pick index " + std::to_string(index) +
                      " out of range for " + shape_string(v.shape()));
  }
  const auto iv = v.id();
  return v.tape()->push(Tensor::vector({v.value()[index]}), {iv},
                        [iv, index](Tape& tp, std::uint32_t s) {
                          if (!tp.needs_grad(iv)) return;
                          tp.adjoint(iv)[index] += tp.adjoint_of(s)[0];
                        });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const auto ia = a.id();
  return a.tape()->push(Tensor::vector({acc}), {ia},
                        [ia](Tape& tp, std::uint32_t s) {
                          if (!tp.needs_grad(ia)) return;
                          const double g = tp.adjoint_of(s)[0];
                          Tensor& ga = tp.adjoint(ia);
                          for (std::size_t i = 0; i < ga.size(); ++i) {
                            ga[i] += g;
                          }
                        });
}

Var mean(Var a) {
  if (a.size() == 0) throw DomainError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var dot(Var a, Var b) { return sum(mul(a, b)); }

}  // namespace caplab::num
