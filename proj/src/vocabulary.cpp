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

#include "caplab/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "caplab/errors.hpp"

namespace caplab {

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < 4) throw FormatError("vocabulary lacks special tokens");
  const std::size_t n = tokens_.size();
  if (tokens_[n - 4] != kBosToken || tokens_[n - 3] != kEosToken ||
      tokens_[n - 2] != kPadToken || tokens_[n - 1] != kUnkToken) {
    throw FormatError("vocabulary must end with <bos> <eos> <pad> <unk>");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!ids_.emplace(tokens_[i], i).second) {
      throw FormatError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
  bos_ = n - 4;
  eos_ = n - 3;
  pad_ = n - 2;
  unk_ = n - 1;
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& sentences,
    std::size_t min_count) {
  if (sentences.empty()) {
    throw ConfigError("cannot build a vocabulary from an empty training split");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) entries.emplace_back(w, c);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size() + 4);
  for (auto& [w, _] : entries) tokens.push_back(w);
  for (auto sp : {kBosToken, kEosToken, kPadToken, kUnkToken}) {
    tokens.emplace_back(sp);
  }
  return Vocabulary(std::move(tokens));
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_ : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw DomainError("token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode(
    const std::vector<std::string>& words) const {
  std::vector<std::size_t> ids;
  ids.reserve(words.size() + 2);
  ids.push_back(bos_);
  for (const auto& w : words) ids.push_back(id(w));
  ids.push_back(eos_);
  return ids;
}

std::vector<std::string> Vocabulary::decode(
    const std::vector<std::size_t>& ids) const {
  std::vector<std::string> words;
  for (auto i : ids) {
    if (i == bos_ || i == eos_ || i == pad_) continue;
    words.push_back(token(i));
  }
  return words;
}

Json Vocabulary::to_json() const { return Json{{"tokens", tokens_}}; }

Vocabulary Vocabulary::from_json(const Json& j) {
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>());
}

std::string Vocabulary::hash() const { return fnv1a_hex(to_json().dump()); }

}  // namespace caplab
