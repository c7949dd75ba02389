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

// JSON-over-HTTP front end for captioning and POS control sessions over one
// frozen checkpoint. docs/openapi.json describes the endpoints.
//
// The request handlers are plain functions of (method, path, body) so they
// can be exercised without a socket; bind() mounts them on an httplib
// server.

#ifndef CAPLAB_SERVICE_HPP
#define CAPLAB_SERVICE_HPP

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "caplab/control.hpp"
#include "caplab/corpus.hpp"

namespace httplib {
class Server;
}

namespace caplab {

struct ServiceOptions {
  std::chrono::seconds session_ttl{30 * 60};
  std::string cors_origin = "*";
  // Injected for tests.
  std::function<std::chrono::steady_clock::time_point()> clock =
      [] { return std::chrono::steady_clock::now(); };
};

struct Response {
  int status = 200;
  Json body;
};

class Service {
 public:
  // Loads every split of the manifest. Throws ConfigError when the model and
  // dataset disagree.
  Service(std::unique_ptr<CaptionModel> model, const DatasetManifest& manifest,
          std::string checkpoint_hash, ServiceOptions options = {});

  Response handle(const std::string& method, const std::string& path,
                  const std::string& body);
  void bind(httplib::Server& server);

  std::size_t session_count();

 private:
  struct Session {
    std::mutex mu;
    std::string clip_id;
    ControlSession control;
    std::chrono::steady_clock::time_point last_used;
    Session(const CaptionModel& model, std::string id, FeatureClip clip)
        : clip_id(std::move(id)), control(model, std::move(clip)) {}
  };

  Response health() const;
  Response clips() const;
  Response pos(const Json& req) const;
  Response caption(const Json& req) const;
  Response create_session(const Json& req);
  Response edit_session(const std::string& id, const Json& req);
  Response reset_session(const std::string& id);
  Response delete_session(const std::string& id);

  const FeatureClip& clip(const Json& req) const;
  void check_config(const Json& req) const;
  std::shared_ptr<Session> find_session(const std::string& id);
  void expire_sessions();

  std::unique_ptr<CaptionModel> model_;
  std::string checkpoint_hash_;
  std::string config_hash_;
  ServiceOptions options_;
  std::map<std::string, FeatureClip> clips_;
  std::map<std::string, std::string> split_of_;

  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_session_ = 1;
};

}  // namespace caplab

#endif  // CAPLAB_SERVICE_HPP
