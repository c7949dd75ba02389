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

#include "caplab/pipeline.hpp"

#include <set>

#include "caplab/errors.hpp"

namespace caplab {

namespace {

constexpr TrainStage kStages[] = {TrainStage::pos, TrainStage::caption_xe,
                                  TrainStage::caption_rl};

Json toy_model_json() {
  return Json{{"content_hidden", 24}, {"motion_hidden", 24}, {"fused_dim", 32},
              {"pos_embed_dim", 16},  {"pos_hidden", 32},    {"word_embed_dim", 24},
              {"dec_hidden", 16},     {"attn_dim", 32},      {"max_words", 10},
              {"mask_padding", true}};
}

void require_object(const Json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

void reject_unknown(const Json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown " + where + " key \"" + key + "\"");
  }
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig r;
  r.model = toy_model_json();
  TrainConfig pos;
  pos.stage = TrainStage::pos;
  pos.epochs = 100;
  TrainConfig xe = pos;
  xe.stage = TrainStage::caption_xe;
  xe.epochs = 300;
  TrainConfig rl = pos;
  rl.stage = TrainStage::caption_rl;
  rl.epochs = 30;
  rl.learning_rate = 0.1;
  r.stages = {{TrainStage::pos, pos}, {TrainStage::caption_xe, xe}, {TrainStage::caption_rl, rl}};
  r.set_seed(r.seed);
  return r;
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  for (auto& [_, c] : stages) c.seed = s;
}

const TrainConfig& RunConfig::stage(TrainStage s) const {
  auto it = stages.find(s);
  if (it == stages.end()) {
    throw ConfigError("run config has no \"" + std::string(train_stage_name(s)) + "\" stage");
  }
  return it->second;
}

RunConfig RunConfig::from_json(const Json& j) {
  require_object(j, "run config");
  reject_unknown(j, {"seed", "grammar", "corpus", "model", "stages", "beam_width"},
                 "run config");
  RunConfig r = defaults();
  try {
    if (j.contains("seed")) r.set_seed(j.at("seed").get<std::uint64_t>());
    if (j.contains("grammar")) {
      Json g = r.grammar.to_json();
      g.update(j.at("grammar"));
      r.grammar = ToyGrammarSpec::from_json(g);
    }
    if (j.contains("corpus")) {
      const Json& c = j.at("corpus");
      require_object(c, "corpus");
      reject_unknown(c, {"n_train", "n_val", "n_test"}, "corpus");
      if (c.contains("n_train")) r.n_train = c.at("n_train").get<std::size_t>();
      if (c.contains("n_val")) r.n_val = c.at("n_val").get<std::size_t>();
      if (c.contains("n_test")) r.n_test = c.at("n_test").get<std::size_t>();
    }
    if (j.contains("model")) {
      require_object(j.at("model"), "model");
      r.model.update(j.at("model"));
      ModelConfig::from_json(r.model);  // validates the keys
    }
    if (j.contains("stages")) {
      const Json& st = j.at("stages");
      require_object(st, "stages");
      for (const auto& [name, body] : st.items()) {
        const TrainStage s = parse_train_stage(name);
        Json merged = r.stages.at(s).to_json();
        merged.update(body);
        merged["stage"] = name;
        r.stages[s] = TrainConfig::from_json(merged);
      }
      // An explicit top-level seed wins over stage seeds.
      if (j.contains("seed")) r.set_seed(r.seed);
    }
    if (j.contains("beam_width")) r.beam_width = j.at("beam_width").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  if (r.beam_width == 0) throw ConfigError("beam_width must be >= 1");
  for (const auto& [_, c] : r.stages) c.validate();
  return r;
}

Json RunConfig::to_json() const {
  Json st = Json::object();
  for (const auto& [s, c] : stages) st[std::string(train_stage_name(s))] = c.to_json();
  return Json{{"seed", seed},
              {"grammar", grammar.to_json()},
              {"corpus", {{"n_train", n_train}, {"n_val", n_val}, {"n_test", n_test}}},
              {"model", model},
              {"stages", st},
              {"beam_width", beam_width}};
}

ModelConfig RunConfig::model_config(const DatasetManifest& manifest,
                                    const Vocabulary& vocab) const {
  Json j = model;
  j["content_dim"] = manifest.content_dim;
  j["motion_dim"] = manifest.motion_dim;
  j["pad_len"] = manifest.pad_len;
  ModelConfig c = with_vocab(ModelConfig::from_json(j), vocab);
  c.validate();
  return c;
}

void save_stage_checkpoint(const CaptionModel& model, TrainStage stage, const RunConfig& run,
                           const DatasetManifest& manifest,
                           const std::filesystem::path& path) {
  save_checkpoint(model,
                  Json{{"stage", train_stage_name(stage)},
                       {"seed", run.seed},
                       {"run_config", run.to_json()},
                       {"data_hash", manifest.hash()}},
                  path);
}

std::unique_ptr<CaptionModel> model_for_stage(
    TrainStage stage, const std::optional<std::filesystem::path>& init_from,
    const RunConfig& run, const DatasetManifest& manifest, bool force) {
  std::unique_ptr<CaptionModel> model;
  std::string prior;
  if (init_from) {
    const CheckpointData data = load_checkpoint(*init_from);
    model = model_from_checkpoint(data);
    prior = data.meta.value("stage", "");
    const std::string data_hash = data.meta.value("data_hash", "");
    if (!force && !data_hash.empty() && data_hash != manifest.hash()) {
      throw ConfigError("checkpoint " + init_from->string() + " was trained on data " +
                        data_hash + " but the dataset hash is " + manifest.hash() +
                        " (pass --force to continue anyway)");
    }
  } else {
    const Vocabulary vocab = build_vocab(manifest);
    model = std::make_unique<CaptionModel>(run.model_config(manifest, vocab), vocab, run.seed);
  }
  check_compatible(model->config(), manifest);
  if (force) return model;
  const std::string name(train_stage_name(stage));
  if (stage == TrainStage::caption_xe && model->config().use_pos && prior != "pos" &&
      prior != "caption_xe") {
    throw ContractError("stage " + name + " needs a pos checkpoint (--init-from) first; got " +
                        (prior.empty() ? std::string("a fresh model") : "stage " + prior) +
                        " (pass --force to skip)");
  }
  if (stage == TrainStage::caption_rl && prior != "caption_xe" && prior != "caption_rl") {
    throw ContractError("stage " + name + " needs a caption_xe checkpoint (--init-from); got " +
                        (prior.empty() ? std::string("a fresh model") : "stage " + prior) +
                        " (pass --force to skip)");
  }
  return model;
}

EvaluationReport evaluate_split(const CaptionModel& model, const std::vector<ClipData>& clips,
                                std::size_t beam_width) {
  return evaluate(greedy_captions(model, clips, beam_width), reference_corpus(clips));
}

}  // namespace caplab
