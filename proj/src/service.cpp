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

#include "caplab/service.hpp"

#include <regex>

#include "caplab/errors.hpp"
#include "httplib.h"

namespace caplab {

namespace {

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, std::string kind, const std::string& what)
      : std::runtime_error(what), status(status), kind(std::move(kind)) {}
  int status;
  std::string kind;
};

Json valid_tags() {
  Json j = Json::array();
  for (auto name : pos_tag_names()) j.push_back(std::string(name));
  return j;
}

Response error_response(int status, const std::string& kind, const std::string& message) {
  Json body{{"error", {{"kind", kind}, {"message", message}}}};
  if (status == 422) body["valid_tags"] = valid_tags();
  return {status, body};
}

Json attention_rows(const std::vector<num::Tensor>& rows) {
  Json out = Json::array();
  for (const num::Tensor& r : rows) {
    out.push_back(std::vector<double>(r.values().begin(), r.values().end()));
  }
  return out;
}

Json tag_names(const PosSequence& tags) {
  Json out = Json::array();
  for (PosTag t : tags.tags) out.push_back(std::string(pos_tag_name(t)));
  return out;
}

const Json& field(const Json& req, const char* name) {
  if (!req.is_object() || !req.contains(name)) {
    throw HttpError(422, "request", std::string("missing field '") + name + "'");
  }
  return req.at(name);
}

PosEdit parse_edit(const Json& j) {
  PosEdit e;
  try {
    e.op = parse_edit_op(field(j, "op").get<std::string>());
    const Json& p = field(j, "position");
    if (!p.is_number_integer() || p.get<long long>() < 0) {
      throw DomainError("position must be a non-negative integer");
    }
    e.position = p.get<std::size_t>();
    const std::string name = field(j, "tag").get<std::string>();
    const auto tag = parse_pos_tag(name);
    if (!tag) throw DomainError("unknown POS tag '" + name + "'");
    e.tag = *tag;
  } catch (const Json::type_error& err) {
    throw HttpError(422, "request", std::string("malformed edit: ") + err.what());
  }
  return e;
}

Json session_body(const std::string& id, const ControlState& state) {
  Json j = state.to_json();
  j["session_id"] = id;
  return j;
}

}  // namespace

Service::Service(std::unique_ptr<CaptionModel> model, const DatasetManifest& manifest,
                 std::string checkpoint_hash, ServiceOptions options)
    : model_(std::move(model)),
      checkpoint_hash_(std::move(checkpoint_hash)),
      config_hash_(model_->config().hash()),
      options_(std::move(options)) {
  check_compatible(model_->config(), manifest);
  for (const auto& [split, _] : manifest.splits) {
    for (ClipData& d : load_split(manifest, split)) {
      split_of_[d.clip.clip_id] = split;
      clips_.emplace(d.clip.clip_id, std::move(d.clip));
    }
  }
}

std::size_t Service::session_count() {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::string& body) {
  static const std::regex session_re("^/v1/sessions/([A-Za-z0-9_-]+)(/edits|/reset)?$");
  try {
    expire_sessions();
    Json req = Json::object();
    if (!body.empty()) {
      req = Json::parse(body, nullptr, false);
      if (req.is_discarded()) return error_response(400, "request", "body is not valid JSON");
    }
    if (method == "GET" && path == "/v1/health") return health();
    if (method == "GET" && path == "/v1/clips") return clips();
    if (method == "POST" && path == "/v1/pos") return pos(req);
    if (method == "POST" && path == "/v1/caption") return caption(req);
    if (method == "POST" && path == "/v1/sessions") return create_session(req);
    std::smatch m;
    if (std::regex_match(path, m, session_re)) {
      const std::string id = m[1];
      const std::string tail = m[2];
      if (method == "POST" && tail == "/edits") return edit_session(id, req);
      if (method == "POST" && tail == "/reset") return reset_session(id);
      if (method == "DELETE" && tail.empty()) return delete_session(id);
      return error_response(405, "request", method + " not allowed on " + path);
    }
    return error_response(404, "lookup", "no route for " + method + " " + path);
  } catch (const HttpError& e) {
    return error_response(e.status, e.kind, e.what());
  } catch (const LookupError& e) {
    return error_response(404, e.kind(), e.what());
  } catch (const DomainError& e) {
    return error_response(422, e.kind(), e.what());
  } catch (const ContractError& e) {
    return error_response(409, e.kind(), e.what());
  } catch (const ConfigError& e) {
    return error_response(409, e.kind(), e.what());
  } catch (const Error& e) {
    return error_response(500, e.kind(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

void Service::check_config(const Json& req) const {
  if (req.is_object() && req.contains("config_hash") &&
      req.at("config_hash") != config_hash_) {
    throw ConfigError("request expects config " + req.at("config_hash").dump() +
                      " but the service runs " + config_hash_);
  }
}

const FeatureClip& Service::clip(const Json& req) const {
  check_config(req);
  const Json& id = field(req, "clip_id");
  if (!id.is_string()) throw HttpError(422, "request", "clip_id must be a string");
  auto it = clips_.find(id.get<std::string>());
  if (it == clips_.end()) throw LookupError("unknown clip '" + id.get<std::string>() + "'");
  return it->second;
}

Response Service::health() const {
  return {200, Json{{"status", "ok"},
                    {"checkpoint_hash", checkpoint_hash_},
                    {"config_hash", config_hash_},
                    {"model_config", model_->config().to_json()}}};
}

Response Service::clips() const {
  Json list = Json::array();
  for (const auto& [id, split] : split_of_) list.push_back({{"clip_id", id}, {"split", split}});
  return {200, Json{{"clips", list}}};
}

Response Service::pos(const Json& req) const {
  const FeatureClip& c = clip(req);
  if (!model_->config().use_pos) throw ContractError("model has no POS pathway");
  num::Tape tape(false);
  const ClipEncoding enc = encode_clip(*model_, tape, c);
  return {200, Json{{"tags", tag_names(enc.pos.tags)},
                    {"per_step_attention", attention_rows(enc.pos.attention)}}};
}

Response Service::caption(const Json& req) const {
  const FeatureClip& c = clip(req);
  std::size_t beam = 1;
  if (req.contains("beam_width")) {
    const Json& b = req.at("beam_width");
    if (!b.is_number_integer() || b.get<long long>() < 1) {
      throw DomainError("beam_width must be a positive integer");
    }
    beam = b.get<std::size_t>();
  }
  std::vector<PosEdit> edits;
  if (req.contains("overrides")) {
    if (!req.at("overrides").is_array()) throw HttpError(422, "request", "overrides must be a list");
    for (const Json& e : req.at("overrides")) edits.push_back(parse_edit(e));
  }
  Caption cap;
  PosSequence tags;
  if (model_->config().use_pos) {
    ControlSession session(*model_, c, beam);
    for (const PosEdit& e : edits) session.apply(e);
    cap = session.state().caption;
    tags = session.state().tags;
  } else {
    if (!edits.empty()) throw ContractError("model has no POS pathway; overrides are not applicable");
    cap = caption_clip(*model_, c, beam);
  }
  return {200, Json{{"tokens", cap.words},
                    {"tags_used", tag_names(tags)},
                    {"logprob", cap.logprob},
                    {"per_step_attention", attention_rows(cap.attention)}}};
}

Response Service::create_session(const Json& req) {
  const FeatureClip& c = clip(req);
  auto s = std::make_shared<Session>(*model_, c.clip_id, c);
  s->last_used = options_.clock();
  std::lock_guard lock(sessions_mu_);
  const std::string id = "s" + std::to_string(next_session_++);
  sessions_[id] = s;
  return {201, session_body(id, s->control.history().front().state)};
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw LookupError("unknown session '" + id + "'");
  it->second->last_used = options_.clock();
  return it->second;
}

Response Service::edit_session(const std::string& id, const Json& req) {
  check_config(req);
  const PosEdit edit = parse_edit(req);
  auto s = find_session(id);
  std::lock_guard lock(s->mu);
  s->control.apply(edit);
  Json body = session_body(id, s->control.state());
  body["history"] = s->control.to_json()["history"];
  return {200, body};
}

Response Service::reset_session(const std::string& id) {
  auto s = find_session(id);
  std::lock_guard lock(s->mu);
  return {200, session_body(id, s->control.reset())};
}

Response Service::delete_session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  if (sessions_.erase(id) == 0) throw LookupError("unknown session '" + id + "'");
  return {200, Json{{"deleted", id}}};
}

void Service::expire_sessions() {
  const auto now = options_.clock();
  std::lock_guard lock(sessions_mu_);
  std::erase_if(sessions_, [&](const auto& kv) {
    return now - kv.second->last_used > options_.session_ttl;
  });
}

void Service::bind(httplib::Server& server) {
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const std::string origin = options_.cors_origin;
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Get(R"(/v1/.*)", dispatch);
  server.Post(R"(/v1/.*)", dispatch);
  server.Delete(R"(/v1/.*)", dispatch);
}

}  // namespace caplab
