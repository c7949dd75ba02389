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

#include <cmath>
#include <filesystem>

#include "caplab/errors.hpp"
#include "caplab/formats.hpp"
#include "caplab/numerics/grad_check.hpp"
#include "caplab/training.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace caplab;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, PosTag> kLexicon{
    {"a", PosTag::ART},   {"man", PosTag::NOUN}, {"runs", PosTag::VERB},
    {"two", PosTag::NUM}, {"men", PosTag::NOUN}, {"run", PosTag::VERB}};

ClipData make_clip(const ModelConfig& config, num::Rng& rng, const std::string& id,
                   const std::vector<Tokens>& captions) {
  ClipData d;
  d.clip = fixtures::random_clip(config, rng);
  d.clip.clip_id = id;
  d.record.clip_id = id;
  d.record.true_length = d.clip.true_length;
  const ToyTagger tagger(kLexicon);
  for (const auto& c : captions) d.record.captions.push_back({c, tagger.tag(c)});
  return d;
}

struct TinyWorld {
  Vocabulary vocab = fixtures::tiny_vocab();
  ModelConfig config = with_vocab(fixtures::tiny_config(), vocab);
  std::vector<ClipData> train, val;

  explicit TinyWorld(std::uint64_t seed = 5) {
    num::Rng rng(seed);
    train.push_back(make_clip(config, rng, "t0", {{"a", "man", "runs"}}));
    train.push_back(make_clip(config, rng, "t1", {{"two", "men", "run"}}));
    train.push_back(make_clip(config, rng, "t2", {{"a", "man", "runs"}, {"two", "men", "run"}}));
    val.push_back(make_clip(config, rng, "v0", {{"a", "man", "runs"}}));
    val.push_back(make_clip(config, rng, "v1", {{"two", "men", "run"}}));
  }
};

ParamSnapshot with_prefix(const ParamSnapshot& s, const std::string& prefix) {
  ParamSnapshot out;
  for (const auto& [k, v] : s) {
    if (k.rfind(prefix, 0) == 0) out[k] = v;
  }
  return out;
}

TrainConfig stage_config(TrainStage stage, std::size_t epochs) {
  TrainConfig c;
  c.stage = stage;
  c.epochs = epochs;
  c.batch_size = 2;
  c.seed = 3;
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("caplab_train_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("train config JSON") {
  TrainConfig c = stage_config(TrainStage::caption_rl, 7);
  c.refresh_psi = true;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(TrainConfig{}.patience == 30);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"patience", 0}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"optimizer", "sgd"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(Json{{"stage", "warmup"}}), ConfigError);
}

TEST_CASE("stage 1 fits a one-clip corpus") {
  const Vocabulary vocab = fixtures::tiny_vocab();
  ModelConfig config = with_vocab(fixtures::tiny_config(), vocab);
  num::Rng rng(1);
  std::vector<ClipData> one{make_clip(config, rng, "only", {{"a", "man", "runs"}})};
  CaptionModel model(config, vocab, 2);
  TrainConfig tc = stage_config(TrainStage::pos, 500);
  tc.batch_size = 1;
  tc.patience = 500;
  TrainLog log;
  const TrainResult r = train_stage1_pos(model, one, one, tc, log);
  std::size_t first_below = 0;
  for (const auto& h : r.history) {
    if (h.loss < 0.05) {
      first_below = h.step;
      break;
    }
  }
  MESSAGE("loss below 0.05 after " << first_below << " steps");
  CHECK(first_below > 0);
  CHECK(first_below <= 500);
}

TEST_CASE("stage 1 step-0 loss is ln 14 per tag with a zero output layer") {
  TinyWorld w;
  CaptionModel model(w.config, w.vocab, 4);
  auto& out = model.params().get("pos.out.w");
  out.value = num::Tensor(out.value.shape());
  auto& b = model.params().get("pos.out.b");
  b.value = num::Tensor(b.value.shape());
  TrainConfig tc = stage_config(TrainStage::pos, 1);
  tc.max_steps = 1;
  TrainLog log;
  const TrainResult r = train_stage1_pos(model, w.train, w.val, tc, log);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].loss == doctest::Approx(std::log(14.0)).epsilon(1e-12));
}

TEST_CASE("freeze contracts") {
  TinyWorld w;
  SUBCASE("stage 1 leaves the decoder untouched") {
    CaptionModel model(w.config, w.vocab, 4);
    const ParamSnapshot before = model.snapshot();
    TrainLog log;
    train_stage1_pos(model, w.train, w.val, stage_config(TrainStage::pos, 3), log);
    const ParamSnapshot after = model.snapshot();
    CHECK(with_prefix(after, "dec.") == with_prefix(before, "dec."));
    CHECK(with_prefix(after, "pos.") != with_prefix(before, "pos."));
  }
  SUBCASE("stage 1 with a frozen encoder") {
    CaptionModel model(w.config, w.vocab, 4);
    const ParamSnapshot before = model.snapshot();
    TrainConfig tc = stage_config(TrainStage::pos, 3);
    tc.train_encoder = false;
    TrainLog log;
    train_stage1_pos(model, w.train, w.val, tc, log);
    CHECK(with_prefix(model.snapshot(), "enc.") == with_prefix(before, "enc."));
  }
  SUBCASE("stages 2 and 3 leave the POS generator untouched") {
    for (TrainStage stage : {TrainStage::caption_xe, TrainStage::caption_rl}) {
      CaptionModel model(w.config, w.vocab, 4);
      const ParamSnapshot before = model.snapshot();
      TrainConfig tc = stage_config(stage, 3);
      tc.patience = 100;
      TrainLog log;
      const TrainResult r = train_stage(model, w.train, w.val, tc, log);
      CHECK(r.steps == 6);
      CHECK(with_prefix(r.best, "pos.") == with_prefix(before, "pos."));
      CHECK(with_prefix(model.snapshot(), "pos.") == with_prefix(before, "pos."));
    }
  }
  SUBCASE("stages 2 and 3 with a frozen encoder") {
    for (TrainStage stage : {TrainStage::caption_xe, TrainStage::caption_rl}) {
      CaptionModel model(w.config, w.vocab, 4);
      const ParamSnapshot before = model.snapshot();
      TrainConfig tc = stage_config(stage, 3);
      tc.train_encoder = false;
      tc.patience = 100;
      TrainLog log;
      train_stage(model, w.train, w.val, tc, log);
      CHECK(with_prefix(model.snapshot(), "enc.") == with_prefix(before, "enc."));
    }
  }
}

TEST_CASE("best-validation bookkeeping") {
  TinyWorld w;
  CaptionModel model(w.config, w.vocab, 6);
  TrainConfig tc = stage_config(TrainStage::caption_xe, 12);
  tc.patience = 4;
  const fs::path dir = scratch("log");
  TrainLog log(dir / "train.jsonl");
  const TrainResult r = train_stage2_xe(model, w.train, w.val, tc, log);
  double running = -INFINITY;
  for (const auto& h : r.history) {
    running = std::max(running, h.val_metric);
    CHECK(h.best_metric == running);
  }
  CHECK(r.best_metric == running);
  CHECK(r.history[r.best_epoch].val_metric == r.best_metric);
  if (r.early_stopped) CHECK(r.history.size() - 1 - r.best_epoch == tc.patience);
  // The model is left at the best parameters.
  const RefCorpus refs = reference_corpus(w.val);
  CHECK(validation_cider(model, w.val, refs) == r.best_metric);

  const std::string text = read_file(dir / "train.jsonl");
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == r.history.size());
  const Json first = Json::parse(text.substr(0, text.find('\n')));
  for (const char* key : {"stage", "step", "loss", "val_metric", "advantage_mean", "seed"}) {
    CHECK(first.contains(key));
  }
  CHECK(first.at("stage") == "caption_xe");
  CHECK(first.at("advantage_mean").is_null());
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  TinyWorld w;
  CaptionModel model(w.config, w.vocab, 4);
  model.params().get("pos.out.b").value[0] = NAN;
  TrainLog log;
  try {
    train_stage1_pos(model, w.train, w.val, stage_config(TrainStage::pos, 1), log);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stage pos") != std::string::npos);
    CHECK(msg.find("clips") != std::string::npos);
  }
}

TEST_CASE("SCST: sample equal to the baseline gives exactly zero gradients") {
  TinyWorld w;
  CaptionModel model(w.config, w.vocab, 8);
  // Degenerate decoder: EOS dominates, so sample and greedy are both empty.
  model.params().get("dec.out.b").value[w.vocab.eos()] = 60.0;
  const RefCorpus refs = reference_corpus(w.train);
  num::Rng rng(1);
  for (auto& [_, p] : model.params().all()) p.zero_grad();
  num::Tape tape;
  ScstStep s = scst_step(model, tape, w.train[0].clip, refs, rng);
  CHECK(s.record.sampled.empty());
  CHECK(s.record.greedy.empty());
  CHECK(s.record.sampled_reward == 0.0);
  CHECK(s.record.advantage == 0.0);
  CHECK(s.tokens == 1);
  tape.backward(s.loss);
  std::size_t nonzero = 0;
  for (const auto& [_, p] : model.params().all()) {
    for (double g : p.grad.values()) nonzero += g != 0.0 ? 1 : 0;
  }
  CHECK(nonzero == 0);
}

TEST_CASE("SCST: advantage sign moves the sample's log-probability") {
  TinyWorld w;
  const RefCorpus refs = reference_corpus(w.train);
  std::size_t positive = 0, negative = 0;
  for (std::uint64_t seed = 0; seed < 200 && (positive < 3 || negative < 3); ++seed) {
    CaptionModel model(w.config, w.vocab, 11);
    num::Rng rng(seed);
    for (auto& [_, p] : model.params().all()) p.zero_grad();
    num::Tape tape;
    ScstStep s = scst_step(model, tape, w.train[2].clip, refs, rng);
    CHECK(s.record.advantage == s.record.sampled_reward - s.record.greedy_reward);
    if (s.record.advantage == 0.0) continue;
    tape.backward(s.loss);

    auto logprob = [&] {
      num::Tape t(false);
      num::Var x = model.fused(t, w.train[2].clip);
      const num::Tensor psi = greedy_psi(model, {w.train[2]}).at("t2");
      return sequence_logprob(model, t, x, t.constant(psi), s.sample_ids);
    };
    const double before = logprob();
    for (auto& [name, p] : model.params().all()) {
      if (name.rfind("pos.", 0) == 0) continue;
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= 1e-3 * p.grad[i];
    }
    const double after = logprob();
    if (s.record.advantage > 0) {
      ++positive;
      CHECK(after > before);
    } else {
      ++negative;
      CHECK(after < before);
    }
  }
  CHECK(positive >= 1);
  CHECK(negative >= 1);
}

TEST_CASE("SCST surrogate gradient matches finite differences") {
  TinyWorld w;
  const RefCorpus refs = reference_corpus(w.train);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CaptionModel model(w.config, w.vocab, 100 + seed);
    num::Rng rng(seed);
    num::Tape tape;
    ScstStep s = scst_step(model, tape, w.train[seed % 3].clip, refs, rng);
    // Freeze the sample, the advantage and psi; the surrogate is then a
    // smooth function of the encoder and decoder parameters.
    const double adv = s.record.advantage != 0.0 ? s.record.advantage : 0.7;
    const std::vector<std::size_t> ids = s.sample_ids;
    const num::Tensor psi = greedy_psi(model, {w.train[seed % 3]}).at(w.train[seed % 3].record.clip_id);
    const FeatureClip& clip = w.train[seed % 3].clip;
    auto loss = [&](num::Tape& t) {
      num::Var x = model.fused(t, clip);
      num::Var p = t.constant(psi);
      const AttentionKeys keys = model.decoder().keys(t, x);
      DecoderState state = model.decoder().initial_state(t);
      std::size_t prev = w.vocab.bos();
      std::optional<num::Var> total;
      for (std::size_t id : ids) {
        DecoderStepResult r = model.decoder().step(t, keys, prev, p, state);
        num::Var lp = num::pick(num::log_softmax(r.logits), id);
        total = total ? num::add(*total, lp) : lp;
        state = r.state;
        prev = id;
      }
      return num::scale(*total, -adv);
    };
    const auto report = num::grad_check_params(
        loss, model.params().with_prefix({kEncoderPrefix, kDecoderPrefix}), 6, seed);
    worst = std::max(worst, report.max_relative_error);

    if (s.record.advantage != 0.0) {
      // scst_step's own graph yields the same gradient as the frozen surrogate.
      for (auto& [_, p] : model.params().all()) p.zero_grad();
      tape.backward(s.loss);
      const ParamSnapshot from_step = [&] {
        ParamSnapshot g;
        for (auto& [n, p] : model.params().all()) g[n] = p.grad;
        return g;
      }();
      for (auto& [_, p] : model.params().all()) p.zero_grad();
      num::Tape t2;
      t2.backward(loss(t2));
      for (auto& [n, p] : model.params().all()) {
        for (std::size_t i = 0; i < p.grad.size(); ++i) {
          CHECK(std::abs(p.grad[i] - from_step.at(n)[i]) <= 1e-12);
        }
      }
    }
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("stage 2 reaches 95% teacher-forced accuracy on 20 clips") {
  const fs::path dir = scratch("tf20");
  ToyGrammarSpec spec;
  spec.refs_per_clip = 1;
  const DatasetManifest m = synth_corpus(spec, 20, 4, 0, 21, dir);
  const auto train = load_split(m, "train");
  const auto val = load_split(m, "val");
  const Vocabulary vocab = build_vocab(m);
  ModelConfig config =
      with_vocab(fixtures::toy_config(m.content_dim, m.motion_dim, m.pad_len), vocab);
  CaptionModel model(config, vocab, 21);
  TrainLog log;
  TrainConfig t1 = stage_config(TrainStage::pos, 30);
  train_stage1_pos(model, train, val, t1, log);
  TrainConfig t2 = stage_config(TrainStage::caption_xe, 150);
  t2.patience = 150;
  train_stage2_xe(model, train, train, t2, log);
  const double acc = teacher_forced_accuracy(model, train);
  MESSAGE("teacher-forced accuracy " << acc);
  CHECK(acc >= 0.95);
}

TEST_CASE("training is deterministic under a fixed seed") {
  TinyWorld w;
  auto run = [&](TrainStage stage) {
    CaptionModel model(w.config, w.vocab, 4);
    TrainLog log;
    train_stage1_pos(model, w.train, w.val, stage_config(TrainStage::pos, 3), log);
    if (stage != TrainStage::pos) {
      train_stage2_xe(model, w.train, w.val, stage_config(TrainStage::caption_xe, 3), log);
    }
    if (stage == TrainStage::caption_rl) {
      train_stage3_rl(model, w.train, w.val, stage_config(TrainStage::caption_rl, 3), log);
    }
    model.quantize_to_float();
    CheckpointData data{model.snapshot(), Json{{"seed", 3}}};
    return std::make_pair(encode_checkpoint(data), log.records());
  };
  for (TrainStage stage : {TrainStage::pos, TrainStage::caption_rl}) {
    const auto a = run(stage), b = run(stage);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("stage 3 records a finite mean advantage per epoch") {
  TinyWorld w;
  CaptionModel model(w.config, w.vocab, 4);
  TrainLog log;
  const TrainResult r =
      train_stage3_rl(model, w.train, w.val, stage_config(TrainStage::caption_rl, 4), log);
  REQUIRE(r.history.size() == 4);
  for (const auto& h : r.history) {
    REQUIRE(h.advantage_mean.has_value());
    CHECK(std::isfinite(*h.advantage_mean));
  }
  for (const auto& rec : log.records()) CHECK(rec.at("advantage_mean").is_number());
}
