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

#include "caplab/training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "caplab/errors.hpp"
#include "caplab/numerics/optim.hpp"

namespace caplab {

using num::Var;

std::string_view train_stage_name(TrainStage stage) {
  switch (stage) {
    case TrainStage::pos:
      return "pos";
    case TrainStage::caption_xe:
      return "caption_xe";
    case TrainStage::caption_rl:
      return "caption_rl";
  }
  return "?";
}

TrainStage parse_train_stage(std::string_view name) {
  for (TrainStage s : {TrainStage::pos, TrainStage::caption_xe, TrainStage::caption_rl}) {
    if (train_stage_name(s) == name) return s;
  }
  throw ConfigError("unknown training stage \"" + std::string(name) +
                    "\" (expected pos, caption_xe or caption_rl)");
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train config: ") + what);
  };
  need(epochs >= 1, "epochs must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(rho > 0.0 && rho < 1.0, "rho must be in (0, 1)");
  need(epsilon > 0.0, "epsilon must be > 0");
  need(learning_rate > 0.0, "learning_rate must be > 0");
  need(clip_norm > 0.0, "clip_norm must be > 0");
  need(patience >= 1, "patience must be >= 1");
}

Json TrainConfig::to_json() const {
  return Json{{"stage", train_stage_name(stage)},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"rho", rho},
              {"epsilon", epsilon},
              {"learning_rate", learning_rate},
              {"clip_norm", clip_norm},
              {"patience", patience},
              {"seed", seed},
              {"train_encoder", train_encoder},
              {"refresh_psi", refresh_psi},
              {"max_steps", max_steps}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  static const std::set<std::string> known{
      "stage",     "epochs", "batch_size", "rho",          "epsilon",     "learning_rate",
      "clip_norm", "patience", "seed",     "train_encoder", "refresh_psi",
      "max_steps"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown train config key \"" + key + "\"");
  }
  try {
    if (j.contains("stage")) c.stage = parse_train_stage(j.at("stage").get<std::string>());
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("epochs", c.epochs);
    read("batch_size", c.batch_size);
    read("rho", c.rho);
    read("epsilon", c.epsilon);
    read("learning_rate", c.learning_rate);
    read("clip_norm", c.clip_norm);
    read("patience", c.patience);
    read("seed", c.seed);
    read("train_encoder", c.train_encoder);
    read("refresh_psi", c.refresh_psi);
    read("max_steps", c.max_steps);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::string> trainable_prefixes(TrainStage stage, bool train_encoder) {
  switch (stage) {
    case TrainStage::pos:
      if (train_encoder) return {kEncoderPrefix, kPosPrefix};
      return {kPosPrefix};
    case TrainStage::caption_xe:
    case TrainStage::caption_rl:
      if (train_encoder) return {kEncoderPrefix, kDecoderPrefix};
      return {kDecoderPrefix};
  }
  return {};
}

TrainLog::TrainLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.emplace(path, std::ios::app);
  if (!*out_) throw LookupError("cannot open training log " + path.string());
}

void TrainLog::write(const Json& record) {
  records_.push_back(record);
  if (out_) {
    *out_ << record.dump() << '\n';
    out_->flush();
  }
}

PosAccuracy pos_accuracy(const CaptionModel& model, const std::vector<ClipData>& clips) {
  if (clips.empty()) throw DomainError("pos_accuracy needs clips");
  std::size_t hits = 0, positions = 0, exact = 0;
  for (const ClipData& c : clips) {
    num::Tape tape(false);
    Var x = model.fused(tape, c.clip);
    const PosSequence pred =
        model.pos().decode(tape, x, model.config().pos_max_len()).tags;
    const PosSequence& gold = c.record.captions.front().tags;
    const std::size_t n = std::max(pred.size(), gold.size());
    for (std::size_t i = 0; i < std::min(pred.size(), gold.size()); ++i) {
      hits += pred.tags[i] == gold.tags[i] ? 1 : 0;
    }
    positions += n;
    exact += pred == gold ? 1 : 0;
  }
  return {static_cast<double>(hits) / static_cast<double>(positions),
          static_cast<double>(exact) / static_cast<double>(clips.size())};
}

std::map<std::string, num::Tensor> greedy_psi(const CaptionModel& model,
                                              const std::vector<ClipData>& clips) {
  std::map<std::string, num::Tensor> out;
  for (const ClipData& c : clips) {
    num::Tape tape(false);
    out[c.record.clip_id] = encode_clip(model, tape, c.clip).psi.value();
  }
  return out;
}

double teacher_forced_accuracy(const CaptionModel& model,
                               const std::vector<ClipData>& clips) {
  if (clips.empty()) throw DomainError("teacher_forced_accuracy needs clips");
  std::size_t hits = 0, total = 0;
  for (const ClipData& c : clips) {
    num::Tape tape(false);
    const ClipEncoding enc = encode_clip(model, tape, c.clip);
    const auto ids = model.vocab().encode(c.record.captions.front().tokens);
    const AttentionKeys keys = model.decoder().keys(tape, enc.x);
    DecoderState state = model.decoder().initial_state(tape);
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
      DecoderStepResult r = model.decoder().step(tape, keys, ids[t], enc.psi, state);
      hits += argmax(r.logits.value()) == ids[t + 1] ? 1 : 0;
      ++total;
      state = r.state;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::map<std::string, Tokens> greedy_captions(const CaptionModel& model,
                                              const std::vector<ClipData>& clips,
                                              std::size_t beam_width) {
  std::map<std::string, Tokens> out;
  for (const ClipData& c : clips) {
    out[c.record.clip_id] = caption_clip(model, c.clip, beam_width).words;
  }
  return out;
}

double validation_cider(const CaptionModel& model, const std::vector<ClipData>& clips,
                        const RefCorpus& refs) {
  if (clips.empty()) throw DomainError("validation needs clips");
  double total = 0.0;
  for (const ClipData& c : clips) {
    total += refs.cider_d(caption_clip(model, c.clip).words, c.record.clip_id);
  }
  return total / static_cast<double>(clips.size());
}

ScstStep scst_step(const CaptionModel& model, num::Tape& tape, const FeatureClip& clip,
                   const RefCorpus& refs, num::Rng& rng) {
  num::Tape baseline(false);
  const ClipEncoding greedy_enc = encode_clip(model, baseline, clip);
  const Caption greedy = greedy_caption(model, baseline, greedy_enc.x, greedy_enc.psi);

  Var x = model.fused(tape, clip);
  Var psi = tape.constant(greedy_enc.psi.value());
  SampledCaption sample = sample_caption(model, tape, x, psi, rng);

  ScstStep out;
  out.record.sampled = sample.caption.words;
  out.record.greedy = greedy.words;
  out.record.sampled_reward = refs.cider_d(out.record.sampled, clip.clip_id);
  out.record.greedy_reward = refs.cider_d(out.record.greedy, clip.clip_id);
  out.record.advantage = out.record.sampled_reward - out.record.greedy_reward;
  Var total = sample.token_logprobs.front();
  for (std::size_t t = 1; t < sample.token_logprobs.size(); ++t) {
    total = num::add(total, sample.token_logprobs[t]);
  }
  out.loss = num::scale(total, -out.record.advantage);
  out.tokens = sample.token_logprobs.size();
  out.sample_ids.assign(sample.caption.ids.begin(),
                        sample.caption.ids.begin() + static_cast<std::ptrdiff_t>(out.tokens));
  return out;
}

namespace {

struct BatchLoss {
  Var loss;  // summed over the batch
  std::size_t tokens = 0;
};

using ExampleFn = std::function<BatchLoss(num::Tape&, const ClipData&, std::size_t ref)>;

struct Loop {
  CaptionModel& model;
  const std::vector<ClipData>& train;
  const TrainConfig& config;
  TrainLog& log;
  ExampleFn example;
  std::function<double()> validate;
  std::function<void(std::size_t epoch)> before_epoch = [](std::size_t) {};
  std::function<std::optional<double>()> epoch_advantage = [] {
    return std::optional<double>();
  };
  // Scores the starting parameters as the initial best.
  bool score_initial = false;
};

TrainResult run(Loop& loop, num::Rng& rng) {
  const TrainConfig& cfg = loop.config;
  cfg.validate();
  if (loop.train.empty()) throw DomainError("training split is empty");
  CaptionModel& model = loop.model;
  const std::string stage(train_stage_name(cfg.stage));

  std::vector<std::size_t> ref_offset;
  for (const ClipData& c : loop.train) {
    if (c.record.captions.empty()) {
      throw FormatError("clip " + c.record.clip_id + " has no captions");
    }
    ref_offset.push_back(rng.index(c.record.captions.size()));
  }
  std::vector<num::Parameter*> trainable =
      model.params().with_prefix(trainable_prefixes(cfg.stage, cfg.train_encoder));
  num::AdaDelta opt(cfg.rho, cfg.epsilon, cfg.learning_rate);

  TrainResult result;
  result.best_metric = -INFINITY;
  if (loop.score_initial) {
    result.best_metric = loop.validate();
    result.best = model.snapshot();
  }
  std::size_t since_best = 0;
  std::vector<std::size_t> order(loop.train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    loop.before_epoch(epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    bool out_of_steps = false;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      for (auto& [_, p] : model.params().all()) p.zero_grad();
      num::Tape tape;
      std::optional<Var> total;
      std::size_t tokens = 0;
      std::string ids;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const ClipData& c = loop.train[i];
        const std::size_t ref = (ref_offset[i] + epoch) % c.record.captions.size();
        BatchLoss l = loop.example(tape, c, ref);
        total = total ? num::add(*total, l.loss) : l.loss;
        tokens += l.tokens;
        ids += (ids.empty() ? "" : ", ") + c.record.clip_id;
      }
      Var loss = num::scale(*total, 1.0 / static_cast<double>(std::max<std::size_t>(tokens, 1)));
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw NumericError("stage " + stage + " epoch " + std::to_string(epoch) +
                           " step " + std::to_string(result.steps) + ": loss is " +
                           std::to_string(value) + " on clips " + ids);
      }
      tape.backward(loss);
      num::clip_grad_norm(trainable, cfg.clip_norm);
      opt.step(trainable);
      ++result.steps;
      loss_sum += value;
      ++batches;
      if (cfg.max_steps != 0 && result.steps >= cfg.max_steps) {
        out_of_steps = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = result.steps;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.val_metric = loop.validate();
    rec.advantage_mean = loop.epoch_advantage();
    if (rec.val_metric > result.best_metric) {
      result.best_metric = rec.val_metric;
      result.best_epoch = epoch;
      result.best = model.snapshot();
      since_best = 0;
    } else {
      ++since_best;
    }
    rec.best_metric = result.best_metric;
    result.history.push_back(rec);
    Json line{{"stage", stage},       {"epoch", epoch},
              {"step", rec.step},     {"loss", rec.loss},
              {"val_metric", rec.val_metric},
              {"best_metric", rec.best_metric},
              {"advantage_mean", nullptr},
              {"seed", cfg.seed}};
    if (rec.advantage_mean) line["advantage_mean"] = *rec.advantage_mean;
    loop.log.write(line);
    if (since_best >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
    if (out_of_steps) break;
  }
  model.restore(result.best);
  return result;
}

}  // namespace

TrainResult train_stage1_pos(CaptionModel& model, const std::vector<ClipData>& train,
                             const std::vector<ClipData>& val, const TrainConfig& config,
                             TrainLog& log) {
  if (config.stage != TrainStage::pos) throw ConfigError("expected a pos train config");
  if (!model.config().use_pos) throw ConfigError("model has no POS pathway to train");
  if (val.empty()) throw DomainError("validation split is empty");
  num::Rng rng(config.seed);
  Loop loop{model, train, config, log,
            [&](num::Tape& tape, const ClipData& c, std::size_t ref) {
              const PosSequence& gold = c.record.captions[ref].tags;
              Var x = model.fused(tape, c.clip);
              return BatchLoss{model.pos().xe_loss(tape, x, gold), gold.size()};
            },
            [&] { return pos_accuracy(model, val).tag_accuracy; }};
  return run(loop, rng);
}

TrainResult train_stage2_xe(CaptionModel& model, const std::vector<ClipData>& train,
                            const std::vector<ClipData>& val, const TrainConfig& config,
                            TrainLog& log) {
  if (config.stage != TrainStage::caption_xe) {
    throw ConfigError("expected a caption_xe train config");
  }
  if (val.empty()) throw DomainError("validation split is empty");
  const RefCorpus val_refs = reference_corpus(val);
  std::map<std::string, num::Tensor> psi;
  num::Rng rng(config.seed);
  Loop loop{model, train, config, log,
            [&](num::Tape& tape, const ClipData& c, std::size_t ref) {
              const auto ids = model.vocab().encode(c.record.captions[ref].tokens);
              Var x = model.fused(tape, c.clip);
              Var p = tape.constant(psi.at(c.record.clip_id));
              return BatchLoss{model.decoder().xe_loss(tape, x, p, ids), ids.size() - 1};
            },
            [&] { return validation_cider(model, val, val_refs); }};
  loop.before_epoch = [&](std::size_t epoch) {
    if (epoch == 0 || config.refresh_psi) psi = greedy_psi(model, train);
  };
  return run(loop, rng);
}

TrainResult train_stage3_rl(CaptionModel& model, const std::vector<ClipData>& train,
                            const std::vector<ClipData>& val, const TrainConfig& config,
                            TrainLog& log) {
  if (config.stage != TrainStage::caption_rl) {
    throw ConfigError("expected a caption_rl train config");
  }
  if (val.empty()) throw DomainError("validation split is empty");
  const RefCorpus train_refs = reference_corpus(train);
  const RefCorpus val_refs = reference_corpus(val);
  num::Rng rng(config.seed);
  double advantage_sum = 0.0;
  std::size_t samples = 0;
  Loop loop{model, train, config, log,
            [&](num::Tape& tape, const ClipData& c, std::size_t) {
              ScstStep s = scst_step(model, tape, c.clip, train_refs, rng);
              advantage_sum += s.record.advantage;
              ++samples;
              return BatchLoss{s.loss, s.tokens};
            },
            [&] { return validation_cider(model, val, val_refs); }};
  loop.before_epoch = [&](std::size_t) {
    advantage_sum = 0.0;
    samples = 0;
  };
  loop.epoch_advantage = [&]() -> std::optional<double> {
    if (samples == 0) return std::nullopt;
    return advantage_sum / static_cast<double>(samples);
  };
  // The starting model competes for "best", so the result never falls below
  // the stage-2 parameters on validation.
  loop.score_initial = true;
  return run(loop, rng);
}

TrainResult train_stage(CaptionModel& model, const std::vector<ClipData>& train,
                        const std::vector<ClipData>& val, const TrainConfig& config,
                        TrainLog& log) {
  switch (config.stage) {
    case TrainStage::pos:
      return train_stage1_pos(model, train, val, config, log);
    case TrainStage::caption_xe:
      return train_stage2_xe(model, train, val, config, log);
    case TrainStage::caption_rl:
      return train_stage3_rl(model, train, val, config, log);
  }
  throw ConfigError("unknown stage");
}

}  // namespace caplab
