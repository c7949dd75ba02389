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

#ifndef CAPLAB_POS_TAG_HPP
#define CAPLAB_POS_TAG_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caplab {

// The 14 syntactic categories predicted by the POS generator. EOS closes
// every sequence.
enum class PosTag : std::uint8_t {
  VERB,
  NOUN,
  ADJ,
  ADV,
  CONJ,
  PRON,
  PREP,
  ART,
  AUX,
  PRT,
  NUM,
  SYM,
  UNK,
  EOS,
};

inline constexpr std::size_t kPosTagCount = 14;
// Embedding row of the begin-of-sequence input; never predicted.
inline constexpr std::size_t kPosBeginRow = kPosTagCount;

std::string_view pos_tag_name(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view name);
const std::array<std::string_view, kPosTagCount>& pos_tag_names();

inline std::size_t pos_index(PosTag tag) { return static_cast<std::size_t>(tag); }
inline PosTag pos_from_index(std::size_t i) { return static_cast<PosTag>(i); }

// Tags ending with exactly one EOS.
struct PosSequence {
  std::vector<PosTag> tags;

  std::size_t size() const noexcept { return tags.size(); }
  // Number of tags before EOS.
  std::size_t word_count() const noexcept {
    return tags.empty() ? 0 : tags.size() - 1;
  }
  bool valid() const;
  std::string to_string() const;  // space separated names
  friend bool operator==(const PosSequence&, const PosSequence&) = default;
};

// Parses "ART NOUN VERB EOS"; a trailing EOS is appended when missing.
PosSequence parse_pos_sequence(std::string_view text);

}  // namespace caplab

#endif  // CAPLAB_POS_TAG_HPP
