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

// Linear verb probes measuring how much of the verb each modality reveals.
// A clip is summarized by the mean of its unpadded feature rows. Accuracy
// is two-fold cross-fitted: fit on one half, score the other, and average.

#ifndef CAPLAB_PROBE_HPP
#define CAPLAB_PROBE_HPP

#include <cstdint>
#include <vector>

#include "caplab/config.hpp"
#include "caplab/corpus.hpp"

namespace caplab {

struct ProbeReport {
  double content_only = 0.0;  // features: mean content
  double joint = 0.0;         // mean content, mean motion, and their outer product
  double chance = 0.0;        // frequency of the most common verb
  std::size_t clips = 0;
  std::size_t classes = 0;

  Json to_json() const;
};

// One-vs-rest ridge regression onto one-hot labels over standardized
// features plus a bias; predicts the arg-max score. Returns held-out
// accuracy.
double probe_accuracy(const std::vector<std::vector<double>>& fit_x,
                      const std::vector<std::size_t>& fit_y,
                      const std::vector<std::vector<double>>& eval_x,
                      const std::vector<std::size_t>& eval_y, std::size_t classes,
                      double ridge = 0.1);

// Uses latent["verb"] of each clip as the label.
ProbeReport run_verb_probe(const std::vector<ClipData>& clips, std::uint64_t seed);

}  // namespace caplab

#endif  // CAPLAB_PROBE_HPP
