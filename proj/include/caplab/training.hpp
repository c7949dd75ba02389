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

// Three training stages over one CaptionModel:
//
//   pos         encoder + POS generator on teacher-forced tag NLL
//   caption_xe  encoder + decoder on word NLL, psi from the frozen POS
//               generator (greedy decode, computed once per clip)
//   caption_rl  encoder + decoder on the self-critical surrogate
//               -(r(S) - r(S_greedy)) * sum_t log pi(s_t), reward CIDEr-D
//
// Every stage uses AdaDelta with global-norm clipping, validates once per
// epoch and keeps the best-validation parameters.

#ifndef CAPLAB_TRAINING_HPP
#define CAPLAB_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "caplab/corpus.hpp"
#include "caplab/inference.hpp"
#include "caplab/metrics.hpp"
#include "caplab/model.hpp"

namespace caplab {

enum class TrainStage { pos, caption_xe, caption_rl };

std::string_view train_stage_name(TrainStage stage);
TrainStage parse_train_stage(std::string_view name);

struct TrainConfig {
  TrainStage stage = TrainStage::pos;
  std::size_t epochs = 60;
  std::size_t batch_size = 8;
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;
  double clip_norm = 5.0;
  std::size_t patience = 30;  // validations without improvement
  std::uint64_t seed = 1;
  bool train_encoder = true;  // also update the fusion encoder
  bool refresh_psi = false;   // caption_xe: recompute psi every epoch
  std::size_t max_steps = 0;  // optimizer steps; 0 = unlimited

  void validate() const;
  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const Json& j);
};

// Parameter-name prefixes updated by a stage.
std::vector<std::string> trainable_prefixes(TrainStage stage, bool train_encoder);

// Append-only JSON-lines log. A default-constructed log discards records.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(const std::filesystem::path& path);
  void write(const Json& record);
  const std::vector<Json>& records() const noexcept { return records_; }

 private:
  std::optional<std::ofstream> out_;
  std::vector<Json> records_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps so far
  double loss = 0.0;     // mean per-token training loss
  double val_metric = 0.0;
  double best_metric = 0.0;
  std::optional<double> advantage_mean;  // caption_rl only
};

struct TrainResult {
  ParamSnapshot best;
  double best_metric = 0.0;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
  bool early_stopped = false;
  std::vector<EpochRecord> history;
};

struct PosAccuracy {
  double tag_accuracy = 0.0;       // position-wise against the gold tags
  double sequence_accuracy = 0.0;  // whole sequence identical
};

// Greedy POS decode against the tags of each clip's first caption.
PosAccuracy pos_accuracy(const CaptionModel& model, const std::vector<ClipData>& clips);
// Argmax under teacher forcing on the first caption of each clip,
// counted over every target token including EOS.
double teacher_forced_accuracy(const CaptionModel& model,
                               const std::vector<ClipData>& clips);
// Greedy psi of every clip (zeros without a POS pathway).
std::map<std::string, num::Tensor> greedy_psi(const CaptionModel& model,
                                              const std::vector<ClipData>& clips);
std::map<std::string, Tokens> greedy_captions(const CaptionModel& model,
                                              const std::vector<ClipData>& clips,
                                              std::size_t beam_width = 1);
// Mean CIDEr-D of greedy captions against `refs`.
double validation_cider(const CaptionModel& model, const std::vector<ClipData>& clips,
                        const RefCorpus& refs);

struct RewardRecord {
  Tokens sampled;
  double sampled_reward = 0.0;
  Tokens greedy;
  double greedy_reward = 0.0;
  double advantage = 0.0;  // sampled_reward - greedy_reward
};

struct ScstStep {
  num::Var loss;  // un-normalized surrogate on the caller's tape
  std::vector<std::size_t> sample_ids;  // drawn tokens (no forced EOS)
  std::size_t tokens = 0;
  RewardRecord record;
};

// Draws one sample on `tape` and decodes the greedy baseline on a separate
// value-only tape, both from the un-edited greedy psi.
ScstStep scst_step(const CaptionModel& model, num::Tape& tape, const FeatureClip& clip,
                   const RefCorpus& refs, num::Rng& rng);

// Each returns with the model holding the best-validation parameters.
TrainResult train_stage1_pos(CaptionModel& model, const std::vector<ClipData>& train,
                             const std::vector<ClipData>& val, const TrainConfig& config,
                             TrainLog& log);
TrainResult train_stage2_xe(CaptionModel& model, const std::vector<ClipData>& train,
                            const std::vector<ClipData>& val, const TrainConfig& config,
                            TrainLog& log);
TrainResult train_stage3_rl(CaptionModel& model, const std::vector<ClipData>& train,
                            const std::vector<ClipData>& val, const TrainConfig& config,
                            TrainLog& log);
TrainResult train_stage(CaptionModel& model, const std::vector<ClipData>& train,
                        const std::vector<ClipData>& val, const TrainConfig& config,
                        TrainLog& log);

}  // namespace caplab

#endif  // CAPLAB_TRAINING_HPP
