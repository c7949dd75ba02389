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

#ifndef CAPLAB_NUMERICS_GRAD_CHECK_HPP
#define CAPLAB_NUMERICS_GRAD_CHECK_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "caplab/numerics/tape.hpp"

namespace caplab::num {

// Builds a scalar loss on a fresh tape from an input leaf.
using PointFn = std::function<Var(Tape&, Var)>;
// Builds a scalar loss on a fresh tape from the parameters it closes over.
using LossFn = std::function<Var(Tape&)>;

// max_i |analytic_i - central_i| / max(1, |analytic_i|), where central_i is
// (f(x + h e_i) - f(x - h e_i)) / 2h.
double grad_check(const PointFn& fn, const Tensor& point, double step = 1e-5);

struct ParamCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

// Same measure over parameter coordinates. At most max_coords coordinates per
// parameter are probed (uniformly sampled with `seed`); 0 probes all of them.
ParamCheckReport grad_check_params(const LossFn& fn,
                                   const std::vector<Parameter*>& params,
                                   std::size_t max_coords = 0,
                                   std::uint64_t seed = 0, double step = 1e-5);

}  // namespace caplab::num

#endif  // CAPLAB_NUMERICS_GRAD_CHECK_HPP
