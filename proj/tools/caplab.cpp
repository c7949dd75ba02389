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

// caplab command-line entry point. Settings resolve as built-in defaults,
// then --config, then explicit flags. Errors go to stderr as one JSON object
// and exit non-zero. CAPLAB_LOG=quiet|info|debug sets stderr verbosity.

#include <csignal>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "caplab/control.hpp"
#include "caplab/errors.hpp"
#include "caplab/pipeline.hpp"
#include "caplab/service.hpp"
#include "httplib.h"

namespace fs = std::filesystem;
using namespace caplab;

namespace {

enum class Verbosity { quiet, info, debug };

Verbosity verbosity() {
  const char* v = std::getenv("CAPLAB_LOG");
  if (!v) return Verbosity::info;
  const std::string s(v);
  if (s == "quiet") return Verbosity::quiet;
  if (s == "debug") return Verbosity::debug;
  return Verbosity::info;
}

void log(Verbosity level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(verbosity())) {
    std::cerr << "[caplab] " << msg << "\n";
  }
}

void fail_json(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve(const Common& c) {
  RunConfig run = c.config.empty() ? RunConfig::defaults()
                                   : RunConfig::from_json(read_json(c.config));
  if (c.seed) run.set_seed(*c.seed);
  return run;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "seed for corpus synthesis and training");
}

const ClipData& find_clip(const std::vector<ClipData>& clips, const std::string& id) {
  for (const ClipData& c : clips) {
    if (c.clip.clip_id == id) return c;
  }
  throw LookupError("unknown clip '" + id + "'");
}

std::vector<ClipData> load_all(const DatasetManifest& m) {
  std::vector<ClipData> all;
  for (const auto& [split, _] : m.splits) {
    for (ClipData& d : load_split(m, split)) all.push_back(std::move(d));
  }
  return all;
}

PosEdit parse_edit_arg(EditOp op, const std::string& arg) {
  const auto at = arg.find('@');
  if (at == std::string::npos) throw DomainError("expected POS@IDX, got '" + arg + "'");
  const auto tag = parse_pos_tag(arg.substr(0, at));
  if (!tag) throw DomainError("unknown POS tag '" + arg.substr(0, at) + "'");
  std::size_t used = 0;
  const std::string idx = arg.substr(at + 1);
  std::size_t pos = 0;
  try {
    pos = std::stoul(idx, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != idx.size()) throw DomainError("bad position in '" + arg + "'");
  return {op, pos, *tag};
}

std::unique_ptr<CaptionModel> open_model(const std::string& ckpt,
                                         const DatasetManifest& manifest) {
  auto model = load_model(ckpt);
  check_compatible(model->config(), manifest);
  return model;
}

Json caption_json(const std::string& clip_id, const PosSequence& tags, const Caption& c) {
  std::string text;
  for (const auto& w : c.words) text += (text.empty() ? "" : " ") + w;
  return Json{{"clip_id", clip_id},
              {"tags", tags.to_string()},
              {"caption", text},
              {"logprob", c.logprob}};
}

// ---- commands -----------------------------------------------------------

struct SynthArgs {
  Common common;
  std::string spec, out;
  std::optional<std::size_t> n_train, n_val, n_test;
};

int cmd_synth(const SynthArgs& a) {
  RunConfig run = resolve(a.common);
  if (!a.spec.empty()) {
    Json g = run.grammar.to_json();
    g.update(read_json(a.spec));
    run.grammar = ToyGrammarSpec::from_json(g);
  }
  if (a.n_train) run.n_train = *a.n_train;
  if (a.n_val) run.n_val = *a.n_val;
  if (a.n_test) run.n_test = *a.n_test;
  const DatasetManifest m =
      synth_corpus(run.grammar, run.n_train, run.n_val, run.n_test, run.seed, a.out);
  write_json(fs::path(a.out) / "run_config.json", run.to_json());
  std::cout << Json{{"out", a.out}, {"data_hash", m.hash()}, {"seed", run.seed}}.dump() << "\n";
  return 0;
}

struct TrainArgs {
  Common common;
  std::string data, init_from, out, log_path;
  std::optional<std::size_t> epochs;
  bool force = false;
};

int cmd_train(TrainStage stage, const TrainArgs& a) {
  RunConfig run = resolve(a.common);
  if (a.epochs) run.stages[stage].epochs = *a.epochs;
  const DatasetManifest m = load_manifest(a.data);
  std::optional<fs::path> init;
  if (!a.init_from.empty()) init = a.init_from;
  auto model = model_for_stage(stage, init, run, m, a.force);
  const auto train = load_split(m, "train");
  const auto val = load_split(m, "val");
  TrainLog tlog(a.log_path.empty() ? fs::path(a.out + ".log.jsonl") : fs::path(a.log_path));
  log(Verbosity::info, "training " + std::string(train_stage_name(stage)) + " on " +
                           std::to_string(train.size()) + " clips");
  const TrainResult r = train_stage(*model, train, val, run.stage(stage), tlog);
  if (verbosity() == Verbosity::debug) {
    for (const Json& rec : tlog.records()) log(Verbosity::debug, rec.dump());
  }
  save_stage_checkpoint(*model, stage, run, m, a.out);
  std::cout << Json{{"stage", train_stage_name(stage)},
                    {"checkpoint", a.out},
                    {"best_metric", r.best_metric},
                    {"best_epoch", r.best_epoch},
                    {"steps", r.steps},
                    {"early_stopped", r.early_stopped}}
                   .dump()
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string data, ckpt, split = "test";
  std::size_t beam = 5;
};

int cmd_eval(const EvalArgs& a) {
  const DatasetManifest m = load_manifest(a.data);
  auto model = open_model(a.ckpt, m);
  const EvaluationReport rep = evaluate_split(*model, load_split(m, a.split), a.beam);
  Json out = rep.to_json(1);
  out["split"] = a.split;
  out["beam_width"] = a.beam;
  out["checkpoint"] = a.ckpt;
  const CheckpointData data = load_checkpoint(a.ckpt);
  if (data.meta.contains("run_config")) out["run_config"] = data.meta["run_config"];
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct CaptionArgs {
  std::string data, ckpt, clip;
  std::size_t beam = 1;
  std::vector<std::string> overrides, inserts;
};

int cmd_caption(const CaptionArgs& a) {
  const DatasetManifest m = load_manifest(a.data);
  auto model = open_model(a.ckpt, m);
  const auto clips = load_all(m);
  const ClipData& clip = find_clip(clips, a.clip);
  if (!model->config().use_pos) {
    if (!a.overrides.empty() || !a.inserts.empty()) {
      throw ContractError("model has no POS pathway; --override/--insert are not applicable");
    }
    std::cout << caption_json(a.clip, {}, caption_clip(*model, clip.clip, a.beam)).dump()
              << "\n";
    return 0;
  }
  ControlSession session(*model, clip.clip, a.beam);
  for (const auto& s : a.overrides) session.apply(parse_edit_arg(EditOp::set, s));
  for (const auto& s : a.inserts) session.apply(parse_edit_arg(EditOp::insert, s));
  std::cout << caption_json(a.clip, session.state().tags, session.state().caption).dump()
            << "\n";
  return 0;
}

struct ControlArgs {
  std::string data, ckpt, clip;
};

void print_state(const ControlState& s) {
  std::string tags, words;
  for (std::size_t i = 0; i < s.tags.size(); ++i) {
    tags += (i ? " " : "") + std::to_string(i) + ":" + std::string(pos_tag_name(s.tags.tags[i])) +
            (s.edited[i] ? "*" : "");
  }
  for (const auto& w : s.caption.words) words += (words.empty() ? "" : " ") + w;
  std::cout << "tags: " << tags << "\ncaption: " << words << "\n";
}

int cmd_control(const ControlArgs& a) {
  const DatasetManifest m = load_manifest(a.data);
  auto model = open_model(a.ckpt, m);
  const auto clips = load_all(m);
  ControlSession session(*model, find_clip(clips, a.clip).clip);
  print_state(session.state());
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    try {
      if (cmd.empty()) continue;
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "show") {
        print_state(session.state());
      } else if (cmd == "reset") {
        print_state(session.reset());
      } else if (cmd == "history") {
        for (const auto& h : session.history()) std::cout << h.to_json().dump() << "\n";
      } else if (cmd == "edit" || cmd == "insert") {
        std::size_t idx = 0;
        std::string tag;
        if (!(in >> idx >> tag)) throw DomainError("usage: " + cmd + " IDX TAG");
        const auto t = parse_pos_tag(tag);
        if (!t) throw DomainError("unknown POS tag '" + tag + "'");
        print_state(session.apply({cmd == "edit" ? EditOp::set : EditOp::insert, idx, *t}));
      } else {
        throw DomainError("unknown command '" + cmd +
                          "' (show, edit IDX TAG, insert IDX TAG, reset, history, quit)");
      }
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

struct ServeArgs {
  std::string data, ckpt, addr = "127.0.0.1";
  int port = 8080;
  std::size_t ttl_minutes = 30;
};

httplib::Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  const DatasetManifest m = load_manifest(a.data);
  ServiceOptions opts;
  opts.session_ttl = std::chrono::minutes(a.ttl_minutes);
  Service service(open_model(a.ckpt, m), m, fnv1a_hex(read_file(a.ckpt)), opts);
  httplib::Server server;
  service.bind(server);
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  log(Verbosity::info, "serving on http://" + a.addr + ":" + std::to_string(a.port));
  if (!server.listen(a.addr, a.port)) {
    throw ConfigError("cannot listen on " + a.addr + ":" + std::to_string(a.port));
  }
  return 0;
}

struct AblateArgs {
  Common common;
  std::string data;
  std::vector<std::string> modes{"cross_gating", "concat", "elementwise_add"};
  bool use_pos = false;
};

int cmd_ablate(const AblateArgs& a) {
  const RunConfig run = resolve(a.common);
  const DatasetManifest m = load_manifest(a.data);
  const auto train = load_split(m, "train");
  const auto val = load_split(m, "val");
  const auto test = load_split(m, "test");
  const Vocabulary vocab = build_vocab(m);
  Json rows = Json::array();
  for (const std::string& name : a.modes) {
    ModelConfig mc = run.model_config(m, vocab);
    mc.fusion = parse_fusion_mode(name);
    mc.use_pos = a.use_pos;
    CaptionModel model(mc, vocab, run.seed);
    TrainLog tlog;
    if (mc.use_pos) train_stage(model, train, val, run.stage(TrainStage::pos), tlog);
    const TrainResult r =
        train_stage(model, train, val, run.stage(TrainStage::caption_xe), tlog);
    const Json val_rep = evaluate_split(model, val, 1).to_json(1);
    const Json test_rep = evaluate_split(model, test, run.beam_width).to_json(1);
    log(Verbosity::info, name + ": val CIDEr-D " + val_rep["cider_d"].dump());
    rows.push_back({{"fusion", name},
                    {"best_epoch", r.best_epoch},
                    {"val", val_rep},
                    {"test", test_rep}});
  }
  std::cout << Json{{"use_pos", a.use_pos}, {"rows", rows}, {"run_config", run.to_json()}}.dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caplab: controllable video captioning on synthetic corpora"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic grammar corpus");
  add_common(s, synth.common);
  s->add_option("--spec", synth.spec, "grammar JSON merged over the config's grammar")
      ->check(CLI::ExistingFile);
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--n-train", synth.n_train);
  s->add_option("--n-val", synth.n_val);
  s->add_option("--n-test", synth.n_test);

  std::map<TrainStage, TrainArgs> train_args;
  std::map<TrainStage, CLI::App*> train_cmds;
  for (TrainStage st : {TrainStage::pos, TrainStage::caption_xe, TrainStage::caption_rl}) {
    const char* name = st == TrainStage::pos          ? "train-pos"
                       : st == TrainStage::caption_xe ? "train-xe"
                                                      : "train-rl";
    TrainArgs& t = train_args[st];
    auto* c = app.add_subcommand(name, "train stage " + std::string(train_stage_name(st)));
    add_common(c, t.common);
    c->add_option("--data", t.data, "dataset directory")->required();
    c->add_option("--init-from", t.init_from, "checkpoint to start from")
        ->check(CLI::ExistingFile);
    c->add_option("--out", t.out, "checkpoint to write")->required();
    c->add_option("--log", t.log_path, "JSON-lines log (default OUT.log.jsonl)");
    c->add_option("--epochs", t.epochs);
    c->add_flag("--force", t.force, "allow stage skipping and data mismatch");
    train_cmds[st] = c;
  }

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a checkpoint on a split");
  e->add_option("--data", ev.data)->required();
  e->add_option("--ckpt", ev.ckpt)->required()->check(CLI::ExistingFile);
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--beam", ev.beam)->check(CLI::PositiveNumber);

  CaptionArgs cap;
  auto* c = app.add_subcommand("caption", "caption one clip");
  c->add_option("--data", cap.data)->required();
  c->add_option("--ckpt", cap.ckpt)->required()->check(CLI::ExistingFile);
  c->add_option("--clip", cap.clip)->required();
  c->add_option("--beam", cap.beam)->check(CLI::PositiveNumber);
  c->add_option("--override", cap.overrides, "force TAG at IDX, as TAG@IDX");
  c->add_option("--insert", cap.inserts, "insert TAG at IDX, as TAG@IDX");

  ControlArgs ctl;
  auto* k = app.add_subcommand("control", "interactive POS editing on stdin");
  k->add_option("--data", ctl.data)->required();
  k->add_option("--ckpt", ctl.ckpt)->required()->check(CLI::ExistingFile);
  k->add_option("--clip", ctl.clip)->required();

  ServeArgs srv;
  auto* v = app.add_subcommand("serve", "HTTP service");
  v->add_option("--data", srv.data)->required();
  v->add_option("--ckpt", srv.ckpt)->required()->check(CLI::ExistingFile);
  v->add_option("--addr", srv.addr);
  v->add_option("--port", srv.port);
  v->add_option("--ttl-minutes", srv.ttl_minutes);

  AblateArgs abl;
  auto* b = app.add_subcommand("ablate", "train and score each fusion mode");
  add_common(b, abl.common);
  b->add_option("--data", abl.data)->required();
  b->add_option("--modes", abl.modes)->delimiter(',');
  b->add_flag("--use-pos", abl.use_pos, "train the POS pathway too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    fail_json("usage", err.what());
    return 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    for (auto& [st, cmd] : train_cmds) {
      if (cmd->parsed()) return cmd_train(st, train_args[st]);
    }
    if (e->parsed()) return cmd_eval(ev);
    if (c->parsed()) return cmd_caption(cap);
    if (k->parsed()) return cmd_control(ctl);
    if (v->parsed()) return cmd_serve(srv);
    if (b->parsed()) return cmd_ablate(abl);
  } catch (const Error& err) {
    fail_json(err.kind(), err.what());
    return 1;
  } catch (const std::exception& err) {
    fail_json("internal", err.what());
    return 1;
  }
  return 0;
}
