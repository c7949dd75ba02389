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

// Two-stream video encoder: one LSTM per modality, then cross gating
//
//   r~_i = relu(W_r h^f_i + b_r) * h^r_i + h^r_i
//   f~_i = relu(W_f h^r_i + b_f) * h^f_i + h^f_i
//   x_i  = W_E [r~_i, f~_i] + b_E
//
// Plain concatenation (gates bypassed) and element-wise adding are kept as
// ablation modes.

#ifndef CAPLAB_FUSION_ENCODER_HPP
#define CAPLAB_FUSION_ENCODER_HPP

#include <string>

#include "caplab/config.hpp"
#include "caplab/numerics/layers.hpp"

namespace caplab {

// One video: content rows (m x d_r) and motion rows (m x d_f), zero past
// true_length.
struct FeatureClip {
  std::string clip_id;
  num::Tensor content;
  num::Tensor motion;
  std::size_t true_length = 0;

  // Throws DimensionError / DomainError when shapes disagree with the model
  // or padded rows are not exactly zero.
  void validate(const ModelConfig& config) const;
};

// Residual gate parameters: w is (target_dim x driver_dim), b is target_dim.
struct GatingParams {
  num::Linear affine;

  static GatingParams create(num::ParameterStore& store,
                             const std::string& prefix, std::size_t driver_dim,
                             std::size_t target_dim, num::Rng& rng);
};

// relu(w driver + b) * target + target.
num::Var cross_gate(num::Tape& tape, num::Var driver, num::Var target,
                    const GatingParams& gate);
// Row-wise version over (m x driver_dim) and (m x target_dim) matrices.
num::Var cross_gate_rows(num::Tape& tape, num::Var drivers, num::Var targets,
                         const GatingParams& gate);

struct TemporalEncoding {
  num::Var content_states;  // m x content_hidden
  num::Var motion_states;   // m x motion_hidden
};

struct FusedSequence {
  num::Var x;               // m x fused_dim
  num::Var content_gated;   // cross_gating mode only
  num::Var motion_gated;    // cross_gating mode only
};

class FusionEncoder {
 public:
  FusionEncoder(num::ParameterStore& store, const ModelConfig& config,
                num::Rng& rng);

  TemporalEncoding encode_temporal(num::Tape& tape, num::Var content,
                                   num::Var motion) const;
  TemporalEncoding encode_temporal(num::Tape& tape,
                                   const FeatureClip& clip) const;

  FusedSequence fuse(num::Tape& tape, num::Var content, num::Var motion,
                     FusionMode mode) const;
  FusedSequence fuse(num::Tape& tape, const FeatureClip& clip,
                     FusionMode mode) const;
  FusedSequence fuse(num::Tape& tape, const FeatureClip& clip) const {
    return fuse(tape, clip, config_->fusion);
  }

  const num::LstmCell& content_lstm() const { return content_lstm_; }
  const num::LstmCell& motion_lstm() const { return motion_lstm_; }
  const GatingParams& content_gate() const { return content_gate_; }
  const GatingParams& motion_gate() const { return motion_gate_; }
  const num::Linear& fusion_layer() const { return fusion_layer_; }

 private:
  const ModelConfig* config_;
  num::LstmCell content_lstm_;
  num::LstmCell motion_lstm_;
  GatingParams content_gate_;  // driver: motion, target: content
  GatingParams motion_gate_;   // driver: content, target: motion
  num::Linear fusion_layer_;
};

// Runs an LSTM from zero state over every row of `inputs`; returns the
// stacked hidden states.
num::Var run_lstm(num::Tape& tape, const num::LstmCell& cell, num::Var inputs);

}  // namespace caplab

#endif  // CAPLAB_FUSION_ENCODER_HPP
