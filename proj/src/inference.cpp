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

#include "caplab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "caplab/errors.hpp"

namespace caplab {

using num::Var;

namespace {

void finish_words(const CaptionModel& model, Caption& c) {
  c.words = model.vocab().decode(c.ids);
}

struct Hypothesis {
  Caption caption;
  DecoderState state;
  std::size_t last = 0;
};

}  // namespace

ClipEncoding encode_clip(const CaptionModel& model, num::Tape& tape,
                         const FeatureClip& clip, const PosOverrides& overrides) {
  ClipEncoding enc;
  enc.x = model.fused(tape, clip);
  if (model.config().use_pos) {
    enc.pos = model.pos().decode(tape, enc.x, model.config().pos_max_len(), overrides);
    enc.psi = enc.pos.psi;
  } else {
    if (!overrides.empty()) {
      throw ContractError("model has no POS pathway; overrides are not applicable");
    }
    enc.psi = tape.constant(num::Tensor({model.config().pos_hidden}));
  }
  return enc;
}

Caption greedy_caption(const CaptionModel& model, num::Tape& tape, Var x, Var psi) {
  const CaptionDecoder& dec = model.decoder();
  const AttentionKeys keys = dec.keys(tape, x);
  DecoderState state = dec.initial_state(tape);
  std::size_t prev = model.vocab().bos();
  Caption c;
  const std::size_t cap = model.config().max_words;
  for (std::size_t t = 0; t <= cap; ++t) {
    DecoderStepResult r = dec.step(tape, keys, prev, psi, state);
    const num::Tensor lp = num::log_softmax(r.logits).value();
    const std::size_t w = t == cap ? model.vocab().eos() : argmax(lp);
    c.ids.push_back(w);
    c.logprob += lp[w];
    c.attention.push_back(r.attention.value());
    state = r.state;
    prev = w;
    if (w == model.vocab().eos()) break;
  }
  finish_words(model, c);
  return c;
}

SampledCaption sample_caption(const CaptionModel& model, num::Tape& tape, Var x,
                              Var psi, num::Rng& rng, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  const CaptionDecoder& dec = model.decoder();
  const AttentionKeys keys = dec.keys(tape, x);
  DecoderState state = dec.initial_state(tape);
  std::size_t prev = model.vocab().bos();
  SampledCaption s;
  const std::size_t cap = model.config().max_words;
  for (std::size_t t = 0; t <= cap; ++t) {
    DecoderStepResult r = dec.step(tape, keys, prev, psi, state);
    Var scaled = temperature == 1.0 ? r.logits : num::scale(r.logits, 1.0 / temperature);
    Var lp = num::log_softmax(scaled);
    const num::Tensor& v = lp.value();
    std::size_t w = model.vocab().eos();
    if (t < cap) {
      const double u = rng.uniform(0.0, 1.0);
      w = v.size() - 1;
      double acc = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        acc += std::exp(v[k]);
        if (u < acc) {
          w = k;
          break;
        }
      }
      s.token_logprobs.push_back(num::pick(lp, w));
    }
    s.caption.ids.push_back(w);
    s.caption.logprob += v[w];
    s.caption.attention.push_back(r.attention.value());
    state = r.state;
    prev = w;
    if (w == model.vocab().eos()) break;
  }
  finish_words(model, s.caption);
  return s;
}

namespace {

std::vector<Caption> fixed_width_beam(const CaptionModel& model, num::Tape& tape,
                                      const AttentionKeys& keys, Var psi,
                                      std::size_t width) {
  const CaptionDecoder& dec = model.decoder();
  const std::size_t eos = model.vocab().eos();
  std::vector<Hypothesis> alive{{Caption{}, dec.initial_state(tape), model.vocab().bos()}};
  std::vector<Caption> done;

  const std::size_t cap = model.config().max_words;
  for (std::size_t t = 0; t <= cap && !alive.empty(); ++t) {
    struct Candidate {
      double score;
      std::size_t parent;
      std::size_t word;
    };
    std::vector<Candidate> pool;
    std::vector<DecoderStepResult> steps;
    std::vector<num::Tensor> lps;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      steps.push_back(dec.step(tape, keys, alive[h].last, psi, alive[h].state));
      lps.push_back(num::log_softmax(steps.back().logits).value());
      for (std::size_t w = 0; w < lps.back().size(); ++w) {
        if (t == cap && w != eos) continue;
        pool.push_back({alive[h].caption.logprob + lps.back()[w], h, w});
      }
    }
    // Ties break toward the earlier parent and smaller id, so width 1 picks
    // the greedy argmax.
    std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
      return a.score > b.score;
    });
    // Finished candidates ranked above the cut retire; live slots refill up
    // to width.
    std::vector<Hypothesis> next;
    for (const Candidate& c : pool) {
      if (next.size() >= width) break;
      Hypothesis h{alive[c.parent].caption, steps[c.parent].state, c.word};
      h.caption.ids.push_back(c.word);
      h.caption.logprob = c.score;
      h.caption.attention.push_back(steps[c.parent].attention.value());
      if (c.word == eos) {
        done.push_back(std::move(h.caption));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    // Scores only decrease along a hypothesis, so once the best finished
    // caption beats every live one the search is over.
    if (!done.empty() && !alive.empty()) {
      double best_done = -INFINITY;
      for (const Caption& c : done) best_done = std::max(best_done, c.logprob);
      bool any_better = false;
      for (const Hypothesis& h : alive) any_better |= h.caption.logprob > best_done;
      if (!any_better) alive.clear();
    }
  }
  return done;
}

}  // namespace

std::vector<Caption> beam_caption(const CaptionModel& model, num::Tape& tape, Var x,
                                  Var psi, std::size_t width) {
  if (width == 0) throw DomainError("beam width must be >= 1");
  const AttentionKeys keys = model.decoder().keys(tape, x);
  std::vector<Caption> pool;
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t k = 1; k <= width; ++k) {
    for (Caption& c : fixed_width_beam(model, tape, keys, psi, k)) {
      if (seen.insert(c.ids).second) pool.push_back(std::move(c));
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Caption& a, const Caption& b) {
    return a.normalized_logprob() > b.normalized_logprob();
  });
  for (Caption& c : pool) finish_words(model, c);
  return pool;
}

double sequence_logprob(const CaptionModel& model, num::Tape& tape, Var x, Var psi,
                        const std::vector<std::size_t>& ids) {
  const CaptionDecoder& dec = model.decoder();
  const AttentionKeys keys = dec.keys(tape, x);
  DecoderState state = dec.initial_state(tape);
  std::size_t prev = model.vocab().bos();
  double total = 0.0;
  for (std::size_t w : ids) {
    DecoderStepResult r = dec.step(tape, keys, prev, psi, state);
    total += num::log_softmax(r.logits).value()[w];
    state = r.state;
    prev = w;
  }
  return total;
}

Caption caption_clip(const CaptionModel& model, const FeatureClip& clip,
                     std::size_t beam_width) {
  num::Tape tape(false);
  const ClipEncoding enc = encode_clip(model, tape, clip);
  if (beam_width == 1) return greedy_caption(model, tape, enc.x, enc.psi);
  return beam_caption(model, tape, enc.x, enc.psi, beam_width).front();
}

}  // namespace caplab
