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

#include "caplab/model.hpp"

#include "caplab/errors.hpp"

namespace caplab {

ModelConfig with_vocab(ModelConfig config, const Vocabulary& vocab) {
  config.vocab_size = vocab.size();
  config.validate();
  return config;
}

CaptionModel::CaptionModel(ModelConfig config, Vocabulary vocab,
                           std::uint64_t init_seed)
    : config_(with_vocab(std::move(config), vocab)),
      vocab_(std::move(vocab)),
      init_rng_(init_seed),
      encoder_(store_, config_, init_rng_),
      pos_(store_, config_, init_rng_),
      decoder_(store_, config_, init_rng_) {}

num::Var CaptionModel::fused(num::Tape& tape, const FeatureClip& clip) const {
  clip.validate(config_);
  return fused(tape, tape.constant(clip.content), tape.constant(clip.motion),
               clip.true_length);
}

num::Var CaptionModel::fused(num::Tape& tape, num::Var content,
                             num::Var motion, std::size_t true_length) const {
  num::Var x = encoder_.fuse(tape, content, motion, config_.fusion).x;
  if (config_.mask_padding && true_length < x.value().rows()) {
    x = num::slice_rows(x, 0, true_length);
  }
  return x;
}

ParamSnapshot CaptionModel::snapshot() const {
  ParamSnapshot snap;
  for (const auto& [name, p] : store_.all()) snap.emplace(name, p.value);
  return snap;
}

void CaptionModel::restore(const ParamSnapshot& snap) {
  if (snap.size() != store_.all().size()) {
    throw ContractError("snapshot has " + std::to_string(snap.size()) +
                        " tensors, model has " +
                        std::to_string(store_.all().size()));
  }
  for (auto& [name, p] : store_.all()) {
    auto it = snap.find(name);
    if (it == snap.end()) throw ContractError("snapshot lacks " + name);
    if (it->second.shape() != p.value.shape()) {
      throw DimensionError("snapshot tensor " + name + " has shape " +
                           num::shape_string(it->second.shape()));
    }
    p.value = it->second;
  }
}

void CaptionModel::quantize_to_float() {
  for (auto& [_, p] : store_.all()) {
    for (auto& v : p.value.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::unique_ptr<CaptionModel> CaptionModel::clone() const {
  auto copy = std::make_unique<CaptionModel>(config_, vocab_, 0);
  copy->restore(snapshot());
  return copy;
}

}  // namespace caplab
