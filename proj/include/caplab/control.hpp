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

// Interactive POS control over one clip. Each edit rewrites the override
// map, re-decodes the POS sequence from scratch (tags before the edit are
// reproduced exactly because their inputs are unchanged), and regenerates
// the whole caption from the new psi.
//
//   set p TAG     keep overrides before p, force p, drop overrides after p
//   insert p TAG  force p, then force p+1.. to the previous tags p..
//
// Positions run from 0 to the current word count; the EOS slot is
// editable, which lengthens (or with EOS, shortens) the sequence.

#ifndef CAPLAB_CONTROL_HPP
#define CAPLAB_CONTROL_HPP

#include <map>
#include <string>
#include <vector>

#include "caplab/inference.hpp"

namespace caplab {

enum class EditOp { set, insert };

std::string_view edit_op_name(EditOp op);
// Throws DomainError for anything but "set" or "insert".
EditOp parse_edit_op(std::string_view name);

struct PosEdit {
  EditOp op = EditOp::set;
  std::size_t position = 0;
  PosTag tag = PosTag::UNK;
};

struct ControlState {
  PosSequence tags;
  std::vector<bool> edited;  // per tag: forced by a user edit
  std::vector<num::Tensor> pos_hidden;
  num::Tensor psi;
  Caption caption;

  Json to_json() const;  // {tags, edited, words, caption}
};

struct HistoryEntry {
  std::size_t index = 0;
  std::string op;  // initial, set, insert or reset
  std::optional<PosEdit> edit;
  ControlState state;

  Json to_json() const;
};

class ControlSession {
 public:
  // The model must outlive the session and stay unchanged.
  ControlSession(const CaptionModel& model, FeatureClip clip, std::size_t beam_width = 1);

  const ControlState& state() const noexcept { return state_; }
  const std::vector<HistoryEntry>& history() const noexcept { return history_; }
  const FeatureClip& clip() const noexcept { return clip_; }

  // Throws DomainError, with the current length, for an out-of-range
  // position, and when the edit would exceed the POS length limit.
  const ControlState& apply(const PosEdit& edit);
  // Back to the unedited state; the history keeps growing.
  const ControlState& reset();

  Json to_json() const;  // state plus history

 private:
  struct Forced {
    PosTag tag;
    bool user = false;
  };
  ControlState regenerate() const;
  void record(std::string op, std::optional<PosEdit> edit);

  const CaptionModel& model_;
  FeatureClip clip_;
  std::size_t beam_width_;
  std::map<std::size_t, Forced> forced_;
  ControlState state_;
  std::vector<HistoryEntry> history_;
};

}  // namespace caplab

#endif  // CAPLAB_CONTROL_HPP
