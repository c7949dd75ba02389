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

#include "caplab/fusion_encoder.hpp"

#include "caplab/errors.hpp"

namespace caplab {

using num::Var;

void FeatureClip::validate(const ModelConfig& config) const {
  auto check_block = [&](const num::Tensor& t, std::size_t dim,
                         const char* name) {
    if (t.rank() != 2 || t.rows() != config.pad_len || t.cols() != dim) {
      throw DimensionError(std::string(name) + " features of clip " + clip_id +
                           " have shape " + num::shape_string(t.shape()) +
                           ", model expects [" +
                           std::to_string(config.pad_len) + "x" +
                           std::to_string(dim) + "]");
    }
    for (std::size_t r = true_length; r < t.rows(); ++r) {
      for (double v : t.row(r)) {
        if (v != 0.0) {
          throw DomainError(std::string(name) + " row " + std::to_string(r) +
                            " of clip " + clip_id +
                            " lies past true_length but is not zero");
        }
      }
    }
  };
  if (true_length == 0 || true_length > config.pad_len) {
    throw DomainError("clip " + clip_id + " true_length " +
                      std::to_string(true_length) + " outside [1, " +
                      std::to_string(config.pad_len) + "]");
  }
  check_block(content, config.content_dim, "content");
  check_block(motion, config.motion_dim, "motion");
}

GatingParams GatingParams::create(num::ParameterStore& store,
                                  const std::string& prefix,
                                  std::size_t driver_dim,
                                  std::size_t target_dim, num::Rng& rng) {
  return GatingParams{num::Linear::create(store, prefix, driver_dim, target_dim, rng)};
}

Var cross_gate(num::Tape& tape, Var driver, Var target,
               const GatingParams& gate) {
  if (target.size() != gate.affine.out_dim() ||
      driver.size() != gate.affine.in_dim()) {
    throw DimensionError("cross_gate: driver " +
                         num::shape_string(driver.shape()) + ", target " +
                         num::shape_string(target.shape()) + " for gate " +
                         std::to_string(gate.affine.in_dim()) + "->" +
                         std::to_string(gate.affine.out_dim()));
  }
  Var g = num::relu(gate.affine(tape, driver));
  return num::add(num::mul(g, target), target);
}

Var cross_gate_rows(num::Tape& tape, Var drivers, Var targets,
                    const GatingParams& gate) {
  if (targets.value().rank() != 2 ||
      targets.value().cols() != gate.affine.out_dim() ||
      drivers.value().rank() != 2 ||
      drivers.value().cols() != gate.affine.in_dim()) {
    throw DimensionError("cross_gate_rows: drivers " +
                         num::shape_string(drivers.shape()) + ", targets " +
                         num::shape_string(targets.shape()));
  }
  Var g = num::relu(gate.affine.rows(tape, drivers));
  return num::add(num::mul(g, targets), targets);
}

Var run_lstm(num::Tape& tape, const num::LstmCell& cell, Var inputs) {
  const std::size_t steps = inputs.value().rows();
  num::LstmState state = cell.zero_state(tape);
  std::vector<Var> hidden;
  hidden.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    state = num::lstm_step(tape, cell, num::row(inputs, i), state);
    hidden.push_back(state.h);
  }
  return num::stack_rows(hidden);
}

FusionEncoder::FusionEncoder(num::ParameterStore& store,
                             const ModelConfig& config, num::Rng& rng)
    : config_(&config) {
  content_lstm_ = num::LstmCell::create(store, "enc.content_lstm",
                                        config.content_dim,
                                        config.content_hidden, rng);
  motion_lstm_ = num::LstmCell::create(store, "enc.motion_lstm",
                                       config.motion_dim, config.motion_hidden,
                                       rng);
  content_gate_ = GatingParams::create(store, "enc.content_gate",
                                       config.motion_hidden,
                                       config.content_hidden, rng);
  motion_gate_ = GatingParams::create(store, "enc.motion_gate",
                                      config.content_hidden,
                                      config.motion_hidden, rng);
  fusion_layer_ = num::Linear::create(
      store, "enc.fusion", config.content_hidden + config.motion_hidden,
      config.fused_dim, rng);
}

TemporalEncoding FusionEncoder::encode_temporal(num::Tape& tape, Var content,
                                                Var motion) const {
  if (content.value().rank() != 2 ||
      content.value().cols() != config_->content_dim) {
    throw DimensionError("content features " +
                         num::shape_string(content.shape()) +
                         " do not match content_dim " +
                         std::to_string(config_->content_dim));
  }
  if (motion.value().rank() != 2 ||
      motion.value().cols() != config_->motion_dim) {
    throw DimensionError("motion features " +
                         num::shape_string(motion.shape()) +
                         " do not match motion_dim " +
                         std::to_string(config_->motion_dim));
  }
  if (content.value().rows() != motion.value().rows()) {
    throw DimensionError("content and motion step counts differ");
  }
  return {run_lstm(tape, content_lstm_, content),
          run_lstm(tape, motion_lstm_, motion)};
}

TemporalEncoding FusionEncoder::encode_temporal(num::Tape& tape,
                                                const FeatureClip& clip) const {
  return encode_temporal(tape, tape.constant(clip.content),
                         tape.constant(clip.motion));
}

FusedSequence FusionEncoder::fuse(num::Tape& tape, Var content, Var motion,
                                  FusionMode mode) const {
  if (mode == FusionMode::elementwise_add &&
      (config_->content_hidden != config_->motion_hidden ||
       config_->content_hidden != config_->fused_dim)) {
    throw ConfigError("elementwise_add fusion needs content_hidden == "
                      "motion_hidden == fused_dim");
  }
  const TemporalEncoding enc = encode_temporal(tape, content, motion);
  FusedSequence out;
  switch (mode) {
    case FusionMode::cross_gating:
      out.content_gated = cross_gate_rows(tape, enc.motion_states,
                                          enc.content_states, content_gate_);
      out.motion_gated = cross_gate_rows(tape, enc.content_states,
                                         enc.motion_states, motion_gate_);
      out.x = fusion_layer_.rows(
          tape, num::concat_cols(out.content_gated, out.motion_gated));
      break;
    case FusionMode::concat:
      out.x = fusion_layer_.rows(
          tape, num::concat_cols(enc.content_states, enc.motion_states));
      break;
    case FusionMode::elementwise_add:
      out.x = num::add(enc.content_states, enc.motion_states);
      break;
  }
  return out;
}

FusedSequence FusionEncoder::fuse(num::Tape& tape, const FeatureClip& clip,
                                  FusionMode mode) const {
  return fuse(tape, tape.constant(clip.content), tape.constant(clip.motion),
              mode);
}

}  // namespace caplab
