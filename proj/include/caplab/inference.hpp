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

// Caption decoding: greedy, multinomial sampling and beam search. All
// decoders emit at most max_words words; the step after the last allowed
// word is forced to EOS (its log-probability still counts).

#ifndef CAPLAB_INFERENCE_HPP
#define CAPLAB_INFERENCE_HPP

#include <cstddef>
#include <vector>

#include "caplab/metrics.hpp"
#include "caplab/model.hpp"

namespace caplab {

struct Caption {
  std::vector<std::size_t> ids;  // emitted tokens, EOS included when emitted
  Tokens words;
  double logprob = 0.0;  // sum of log P over ids
  std::vector<num::Tensor> attention;  // decoder attention per emitted token

  // Log-probability per emitted token; the beam ranking score.
  double normalized_logprob() const {
    return ids.empty() ? 0.0 : logprob / static_cast<double>(ids.size());
  }
};

struct ClipEncoding {
  num::Var x;
  PosDecodeResult pos;  // empty when the model has no POS pathway
  num::Var psi;
};

// Fuses the clip and decodes its POS sequence under the overrides. psi is
// zero when config.use_pos is false.
ClipEncoding encode_clip(const CaptionModel& model, num::Tape& tape,
                         const FeatureClip& clip, const PosOverrides& overrides = {});

Caption greedy_caption(const CaptionModel& model, num::Tape& tape, num::Var x,
                       num::Var psi);

struct SampledCaption {
  Caption caption;
  std::vector<num::Var> token_logprobs;  // log pi(s_t) of drawn tokens, on the tape
};

// Draws each token from softmax(logits / temperature). Throws DomainError
// for temperature <= 0.
SampledCaption sample_caption(const CaptionModel& model, num::Tape& tape,
                              num::Var x, num::Var psi, num::Rng& rng,
                              double temperature = 1.0);

// Finished hypotheses of the fixed-width beams 1..width, merged and ranked by
// normalized_logprob, best first. The best log-probability is therefore
// monotone in width. Each beam stops once no live hypothesis can beat its best finished one. Throws
// DomainError for width 0.
std::vector<Caption> beam_caption(const CaptionModel& model, num::Tape& tape,
                                  num::Var x, num::Var psi, std::size_t width);

// Log-probability of a given continuation (ids after BOS).
double sequence_logprob(const CaptionModel& model, num::Tape& tape, num::Var x,
                        num::Var psi, const std::vector<std::size_t>& ids);

// Convenience: greedy POS and greedy caption on a value-only tape.
Caption caption_clip(const CaptionModel& model, const FeatureClip& clip,
                     std::size_t beam_width = 1);

}  // namespace caplab

#endif  // CAPLAB_INFERENCE_HPP
