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

#include "caplab/pos_tag.hpp"

#include <sstream>

#include "caplab/errors.hpp"

namespace caplab {

const std::array<std::string_view, kPosTagCount>& pos_tag_names() {
  static constexpr std::array<std::string_view, kPosTagCount> names = {
      "VERB", "NOUN", "ADJ", "ADV", "CONJ", "PRON", "PREP",
      "ART",  "AUX",  "PRT", "NUM", "SYM",  "UNK",  "EOS"};
  return names;
}

std::string_view pos_tag_name(PosTag tag) {
  return pos_tag_names()[pos_index(tag)];
}

std::optional<PosTag> parse_pos_tag(std::string_view name) {
  const auto& names = pos_tag_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return pos_from_index(i);
  }
  return std::nullopt;
}

bool PosSequence::valid() const {
  if (tags.empty() || tags.back() != PosTag::EOS) return false;
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) {
    if (tags[i] == PosTag::EOS) return false;
  }
  return true;
}

std::string PosSequence::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i) out += ' ';
    out += pos_tag_name(tags[i]);
  }
  return out;
}

PosSequence parse_pos_sequence(std::string_view text) {
  std::istringstream in{std::string(text)};
  PosSequence seq;
  std::string word;
  while (in >> word) {
    auto tag = parse_pos_tag(word);
    if (!tag) throw DomainError("unknown POS tag '" + word + "'");
    seq.tags.push_back(*tag);
  }
  if (seq.tags.empty() || seq.tags.back() != PosTag::EOS) {
    seq.tags.push_back(PosTag::EOS);
  }
  if (!seq.valid()) throw DomainError("EOS may appear only at the end");
  return seq;
}

}  // namespace caplab
