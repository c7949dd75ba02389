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

#include "caplab/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "caplab/numerics/layers.hpp"

namespace caplab::num {

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

double eval_point(const PointFn& fn, const Tensor& x) {
  Tape tape(false);
  return fn(tape, tape.constant(x)).value()[0];
}

double eval_loss(const LossFn& fn) {
  Tape tape(false);
  return fn(tape).value()[0];
}

}  // namespace

double grad_check(const PointFn& fn, const Tensor& point, double step) {
  Tensor analytic;
  {
    Tape tape;
    Var x = tape.input(point);
    Var loss = fn(tape, x);
    tape.backward(loss);
    analytic = tape.grad(x);
  }
  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    const double up = eval_point(fn, probe);
    probe[i] = point[i] - step;
    const double down = eval_point(fn, probe);
    probe[i] = point[i];
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * step)));
  }
  return worst;
}

ParamCheckReport grad_check_params(const LossFn& fn,
                                   const std::vector<Parameter*>& params,
                                   std::size_t max_coords, std::uint64_t seed,
                                   double step) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(fn(tape));
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  Rng rng(seed);
  ParamCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords != 0 && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      coords.resize(max_coords);
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = eval_loss(fn);
      p.value[i] = saved - step;
      const double down = eval_loss(fn);
      p.value[i] = saved;
      const double err = relative_error(analytic[k][i], (up - down) / (2 * step));
      ++report.coordinates_checked;
      if (err >= report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace caplab::num
