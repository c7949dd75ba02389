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

#ifndef CAPLAB_TESTS_FIXTURES_HPP
#define CAPLAB_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "caplab/config.hpp"
#include "caplab/fusion_encoder.hpp"
#include "caplab/numerics/layers.hpp"
#include "caplab/vocabulary.hpp"

namespace fixtures {

// Small dimensions that keep finite-difference checks fast.
inline caplab::ModelConfig tiny_config(std::size_t vocab_size = 0) {
  caplab::ModelConfig c;
  c.content_dim = 4;
  c.motion_dim = 3;
  c.pad_len = 3;
  c.content_hidden = 3;
  c.motion_hidden = 2;
  c.fused_dim = 4;
  c.pos_embed_dim = 3;
  c.pos_hidden = 5;
  c.word_embed_dim = 3;
  c.dec_hidden = 4;
  c.attn_dim = 3;
  c.max_words = 6;
  c.vocab_size = vocab_size;
  return c;
}

inline caplab::num::Tensor random_tensor(caplab::num::Shape shape,
                                         caplab::num::Rng& rng,
                                         double scale = 1.0) {
  caplab::num::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

inline caplab::FeatureClip random_clip(const caplab::ModelConfig& c,
                                       caplab::num::Rng& rng,
                                       std::size_t true_length = 0) {
  if (true_length == 0) true_length = c.pad_len;
  caplab::FeatureClip clip;
  clip.clip_id = "clip";
  clip.true_length = true_length;
  clip.content = caplab::num::Tensor({c.pad_len, c.content_dim});
  clip.motion = caplab::num::Tensor({c.pad_len, c.motion_dim});
  for (std::size_t r = 0; r < true_length; ++r) {
    for (std::size_t j = 0; j < c.content_dim; ++j) {
      clip.content.values()[r * c.content_dim + j] = rng.uniform(-1, 1);
    }
    for (std::size_t j = 0; j < c.motion_dim; ++j) {
      clip.motion.values()[r * c.motion_dim + j] = rng.uniform(-1, 1);
    }
  }
  return clip;
}

// Dimensions used for the synthetic-corpus runs.
inline caplab::ModelConfig toy_config(std::size_t content_dim, std::size_t motion_dim,
                                      std::size_t pad_len) {
  caplab::ModelConfig c;
  c.content_dim = content_dim;
  c.motion_dim = motion_dim;
  c.pad_len = pad_len;
  c.content_hidden = 24;
  c.motion_hidden = 24;
  c.fused_dim = 32;
  c.pos_embed_dim = 16;
  c.pos_hidden = 32;
  c.word_embed_dim = 24;
  c.dec_hidden = 48;
  c.attn_dim = 32;
  c.max_words = 10;
  c.mask_padding = true;
  return c;
}

inline caplab::Vocabulary tiny_vocab() {
  return caplab::Vocabulary::build({{"a", "man", "runs"}, {"two", "men", "run"}}, 1);
}

}  // namespace fixtures

#endif  // CAPLAB_TESTS_FIXTURES_HPP
