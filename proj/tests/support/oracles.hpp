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

// Loop-level reference evaluations of the model equations. They read
// parameter values directly and never touch the tape.

#ifndef CAPLAB_TESTS_ORACLES_HPP
#define CAPLAB_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "caplab/numerics/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;
using caplab::num::Tensor;

inline Vec matvec(const Tensor& w, const Vec& x) {
  Vec out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) out[r] += w.at(r, c) * x[c];
  }
  return out;
}

inline Vec affine(const Tensor& w, const Vec& x, const Tensor& b) {
  Vec out = matvec(w, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Vec cat(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline Vec row(const Tensor& m, std::size_t r) {
  return Vec(m.row(r).begin(), m.row(r).end());
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec softmax(const Vec& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  Vec p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += p[i] = std::exp(z[i] - mx);
  for (double& v : p) v /= total;
  return p;
}

inline Vec log_softmax(const Vec& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - mx - std::log(total);
  return out;
}

struct Lstm {
  Vec h, c;
};

inline Lstm lstm(const Tensor& w, const Tensor& b, const Vec& x, const Lstm& s) {
  const std::size_t H = s.h.size();
  const Vec pre = affine(w, cat(x, s.h), b);
  Lstm out{Vec(H), Vec(H)};
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(pre[k]);
    const double f = sigmoid(pre[H + k]);
    const double g = std::tanh(pre[2 * H + k]);
    const double o = sigmoid(pre[3 * H + k]);
    out.c[k] = f * s.c[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

// relu(w x + b) * y + y
inline Vec gate(const Tensor& w, const Tensor& b, const Vec& x, const Vec& y) {
  const Vec g = affine(w, x, b);
  Vec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(0.0, g[i]) * y[i] + y[i];
  return out;
}

struct Attention {
  Vec context, weights;
};

// e_i = w . tanh(W q + U x_i + b), softmax, weighted sum of rows.
inline Attention attend(const Tensor& w, const Tensor& W, const Tensor& U,
                        const Tensor& b, const Tensor& x, const Vec& q) {
  const Vec wq = matvec(W, q);
  Vec e(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vec ux = matvec(U, row(x, i));
    for (std::size_t a = 0; a < wq.size(); ++a) {
      e[i] += w[a] * std::tanh(wq[a] + ux[a] + b[a]);
    }
  }
  Attention out{Vec(x.cols(), 0.0), softmax(e)};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < x.cols(); ++c) out.context[c] += out.weights[i] * x.at(i, c);
  }
  return out;
}

inline double max_abs_diff(const Vec& a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

}  // namespace oracle

#endif  // CAPLAB_TESTS_ORACLES_HPP
