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

#ifndef CAPLAB_NUMERICS_OPTIM_HPP
#define CAPLAB_NUMERICS_OPTIM_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "caplab/numerics/tape.hpp"

namespace caplab::num {

// AdaDelta (Zeiler, 2012):
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + lr * dx
// lr defaults to 1, which is the method as published.
class AdaDelta {
 public:
  struct Slot {
    Tensor mean_sq_grad;
    Tensor mean_sq_update;
  };

  explicit AdaDelta(double rho = 0.95, double epsilon = 1e-6,
                    double learning_rate = 1.0);

  // Updates every parameter from its grad. Throws NumericError (before
  // touching any parameter) if a gradient is NaN or infinite.
  void step(std::span<Parameter* const> params);

  double rho() const noexcept { return rho_; }
  double epsilon() const noexcept { return epsilon_; }
  const std::map<std::string, Slot>& slots() const noexcept { return slots_; }

 private:
  double rho_;
  double epsilon_;
  double learning_rate_;
  std::map<std::string, Slot> slots_;
};

double global_grad_norm(std::span<Parameter* const> params);

// Rescales all grads so their joint L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

}  // namespace caplab::num

#endif  // CAPLAB_NUMERICS_OPTIM_HPP
