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

#include "caplab/numerics/optim.hpp"

#include <cmath>

#include "caplab/errors.hpp"

namespace caplab::num {

AdaDelta::AdaDelta(double rho, double epsilon, double learning_rate)
    : rho_(rho), epsilon_(epsilon), learning_rate_(learning_rate) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("AdaDelta rho must be in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("AdaDelta epsilon must be positive");
}

void AdaDelta::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    require_finite(p->grad, "gradient of " + p->name);
  }
  for (Parameter* p : params) {
    auto [it, fresh] = slots_.try_emplace(p->name);
    Slot& s = it->second;
    if (fresh || s.mean_sq_grad.shape() != p->value.shape()) {
      s.mean_sq_grad = Tensor(p->value.shape());
      s.mean_sq_update = Tensor(p->value.shape());
    }
    auto& x = p->value.data();
    const auto& g = p->grad.data();
    auto& eg2 = s.mean_sq_grad.data();
    auto& edx2 = s.mean_sq_update.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg2[i] = rho_ * eg2[i] + (1.0 - rho_) * g[i] * g[i];
      const double dx =
          -std::sqrt(edx2[i] + epsilon_) / std::sqrt(eg2[i] + epsilon_) * g[i];
      edx2[i] = rho_ * edx2[i] + (1.0 - rho_) * dx * dx;
      x[i] += learning_rate_ * dx;
    }
  }
}

double global_grad_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      for (auto& g : p->grad.data()) g *= s;
    }
  }
  return norm;
}

}  // namespace caplab::num
