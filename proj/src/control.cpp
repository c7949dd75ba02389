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

#include "caplab/control.hpp"

#include "caplab/errors.hpp"

namespace caplab {

std::string_view edit_op_name(EditOp op) {
  return op == EditOp::set ? "set" : "insert";
}

EditOp parse_edit_op(std::string_view name) {
  if (name == "set") return EditOp::set;
  if (name == "insert") return EditOp::insert;
  throw DomainError("unknown edit op '" + std::string(name) +
                    "' (expected set or insert)");
}

Json ControlState::to_json() const {
  Json tag_names = Json::array();
  for (PosTag t : tags.tags) tag_names.push_back(std::string(pos_tag_name(t)));
  Json words = caption.words;
  std::string text;
  for (const auto& w : caption.words) text += (text.empty() ? "" : " ") + w;
  return Json{{"tags", tag_names}, {"edited", edited}, {"words", words}, {"caption", text}};
}

Json HistoryEntry::to_json() const {
  Json j{{"index", index}, {"op", op}};
  if (edit) {
    j["position"] = edit->position;
    j["tag"] = std::string(pos_tag_name(edit->tag));
  }
  const Json s = state.to_json();
  j["tags"] = s["tags"];
  j["caption"] = s["caption"];
  return j;
}

ControlSession::ControlSession(const CaptionModel& model, FeatureClip clip,
                               std::size_t beam_width)
    : model_(model), clip_(std::move(clip)), beam_width_(beam_width) {
  if (!model_.config().use_pos) {
    throw ContractError("POS control needs a model with a POS pathway");
  }
  if (beam_width_ == 0) throw DomainError("beam width must be >= 1");
  state_ = regenerate();
  record("initial", std::nullopt);
}

ControlState ControlSession::regenerate() const {
  PosOverrides overrides;
  for (const auto& [p, f] : forced_) overrides[p] = f.tag;
  num::Tape tape(false);
  ClipEncoding enc = encode_clip(model_, tape, clip_, overrides);
  ControlState s;
  s.tags = enc.pos.tags;
  s.pos_hidden = enc.pos.hidden;
  s.psi = enc.psi.value();
  s.edited.assign(s.tags.size(), false);
  for (const auto& [p, f] : forced_) {
    if (p < s.edited.size()) s.edited[p] = f.user;
  }
  s.caption = beam_width_ == 1
                  ? greedy_caption(model_, tape, enc.x, enc.psi)
                  : beam_caption(model_, tape, enc.x, enc.psi, beam_width_).front();
  return s;
}

const ControlState& ControlSession::apply(const PosEdit& edit) {
  const std::size_t len = state_.tags.word_count();
  const std::size_t max_len = model_.config().pos_max_len();
  if (edit.position > len) {
    throw DomainError("edit position " + std::to_string(edit.position) +
                      " is past the end of the current POS sequence (length " +
                      std::to_string(len) + ")");
  }
  std::map<std::size_t, Forced> next;
  if (edit.op == EditOp::set) {
    if (edit.tag != PosTag::EOS && edit.position + 1 >= max_len) {
      throw DomainError("position " + std::to_string(edit.position) +
                        " is the final EOS slot (maximum length " +
                        std::to_string(max_len - 1) + " tags)");
    }
    for (const auto& [p, f] : forced_) {
      if (p < edit.position) next.emplace(p, f);
    }
  } else {
    if (edit.tag != PosTag::EOS && len + 2 > max_len) {
      throw DomainError("insert would exceed the maximum of " +
                        std::to_string(max_len - 1) + " tags (length " +
                        std::to_string(len) + ")");
    }
    for (std::size_t p = 0; p < len; ++p) {
      auto it = forced_.find(p);
      const bool user = it != forced_.end() && it->second.user;
      if (p < edit.position) {
        if (it != forced_.end()) next.emplace(p, it->second);
      } else {
        next.emplace(p + 1, Forced{state_.tags.tags[p], user});
      }
    }
  }
  next[edit.position] = Forced{edit.tag, true};
  forced_ = std::move(next);
  state_ = regenerate();
  // Overrides past the new EOS never apply; drop them so later edits start
  // from what is visible.
  std::erase_if(forced_, [&](const auto& kv) { return kv.first >= state_.tags.size(); });
  record(std::string(edit_op_name(edit.op)), edit);
  return state_;
}

const ControlState& ControlSession::reset() {
  forced_.clear();
  state_ = regenerate();
  record("reset", std::nullopt);
  return state_;
}

void ControlSession::record(std::string op, std::optional<PosEdit> edit) {
  history_.push_back(HistoryEntry{history_.size(), std::move(op), edit, state_});
}

Json ControlSession::to_json() const {
  Json j = state_.to_json();
  Json h = Json::array();
  for (const auto& e : history_) h.push_back(e.to_json());
  j["history"] = h;
  return j;
}

}  // namespace caplab
