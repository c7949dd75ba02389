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

#ifndef CAPLAB_VOCABULARY_HPP
#define CAPLAB_VOCABULARY_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "caplab/config.hpp"

namespace caplab {

inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Dense token <-> id map. Word ids come first (frequency descending, then
// lexicographic); the four specials are appended as BOS, EOS, PAD, UNK.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Takes tokens in id order; the last four must be the specials.
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences,
                          std::size_t min_count = 1);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t bos() const noexcept { return bos_; }
  std::size_t eos() const noexcept { return eos_; }
  std::size_t pad() const noexcept { return pad_; }
  std::size_t unk() const noexcept { return unk_; }

  std::size_t id(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // BOS + ids + EOS.
  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;
  // Drops BOS, EOS and PAD; UNK stays visible.
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  Json to_json() const;
  static Vocabulary from_json(const Json& j);
  std::string hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t bos_ = 0, eos_ = 0, pad_ = 0, unk_ = 0;
};

}  // namespace caplab

#endif  // CAPLAB_VOCABULARY_HPP
