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

#include <memory>

#include "caplab/control.hpp"
#include "caplab/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace caplab;

namespace {

struct World {
  Vocabulary vocab = fixtures::tiny_vocab();
  ModelConfig config = with_vocab(fixtures::tiny_config(), vocab);
  std::unique_ptr<CaptionModel> model;
  FeatureClip clip;

  explicit World(std::uint64_t seed) {
    model = std::make_unique<CaptionModel>(config, vocab, seed);
    // Sharpen the POS generator so its decode is far from uniform.
    for (auto& [name, p] : model->params().all()) {
      if (name.rfind(kPosPrefix, 0) == 0) {
        for (double& v : p.value.values()) v *= 3.0;
      }
    }
    num::Rng rng(seed + 1000);
    clip = fixtures::random_clip(config, rng);
  }
};

bool same_state(const ControlState& a, const ControlState& b) {
  return a.tags == b.tags && a.edited == b.edited && a.caption.ids == b.caption.ids &&
         a.caption.logprob == b.caption.logprob && a.psi == b.psi;
}

}  // namespace

TEST_CASE("zero edits match greedy captioning") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    World w(s);
    ControlSession session(*w.model, w.clip);
    const Caption g = caption_clip(*w.model, w.clip);
    CHECK(session.state().caption.ids == g.ids);
    CHECK(session.state().caption.logprob == g.logprob);
    CHECK(session.history().size() == 1);
    CHECK(session.history()[0].op == "initial");
  }
}

TEST_CASE("edit then reset restores the initial state") {
  World w(3);
  ControlSession session(*w.model, w.clip);
  const ControlState initial = session.state();
  session.apply({EditOp::set, 0, PosTag::NUM});
  session.apply({EditOp::set, 2, PosTag::EOS});
  session.apply({EditOp::insert, 1, PosTag::ADJ});
  session.reset();
  CHECK(same_state(session.state(), initial));
  CHECK(session.state().to_json().dump() == initial.to_json().dump());
  REQUIRE(session.history().size() == 5);
  for (std::size_t i = 0; i < session.history().size(); ++i) {
    CHECK(session.history()[i].index == i);
  }
  CHECK(session.history()[4].op == "reset");
}

TEST_CASE("set edits leave the prefix bit-identical") {
  std::size_t cases = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    World w(s);
    num::Rng rng(s);
    ControlSession session(*w.model, w.clip);
    for (int k = 0; k < 4; ++k) {
      const ControlState before = session.state();
      const std::size_t len = before.tags.word_count();
      const std::size_t p = rng.index(len + 1);
      const PosTag tag = pos_from_index(rng.index(kPosTagCount - 1));
      if (p + 1 >= w.config.pos_max_len()) continue;
      const ControlState& after = session.apply({EditOp::set, p, tag});
      REQUIRE(after.tags.size() > p);
      CHECK(after.tags.tags[p] == tag);
      CHECK(after.edited[p]);
      for (std::size_t i = 0; i < p; ++i) {
        CHECK(after.tags.tags[i] == before.tags.tags[i]);
        CHECK(after.edited[i] == before.edited[i]);
        CHECK(after.pos_hidden[i] == before.pos_hidden[i]);
      }
      ++cases;
    }
  }
  CHECK(cases > 40);
}

TEST_CASE("insert shifts the tail right") {
  World w(5);
  ControlSession session(*w.model, w.clip);
  // Shorten first so there is room to insert within the length limit.
  session.apply({EditOp::set, 2, PosTag::EOS});
  const PosSequence before = session.state().tags;
  REQUIRE(before.word_count() == 2);
  const ControlState& after = session.apply({EditOp::insert, 1, PosTag::ADJ});
  REQUIRE(after.tags.size() >= 4);
  CHECK(after.tags.tags[0] == before.tags[0]);
  CHECK(after.tags.tags[1] == PosTag::ADJ);
  CHECK(after.tags.tags[2] == before.tags[1]);
  CHECK(after.edited[1]);
  CHECK(!after.edited[2]);
}

TEST_CASE("out-of-range edits are rejected with the current length") {
  World w(1);
  ControlSession session(*w.model, w.clip);
  const std::size_t len = session.state().tags.word_count();
  try {
    session.apply({EditOp::set, len + 1, PosTag::NOUN});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("length " + std::to_string(len)) !=
          std::string::npos);
  }
  CHECK(session.history().size() == 1);
  CHECK_THROWS_AS(parse_edit_op("delete"), DomainError);
}

TEST_CASE("the length limit holds for set and insert") {
  World w(2);
  ControlSession session(*w.model, w.clip);
  const std::size_t max_len = w.config.pos_max_len();
  // Fill the sequence to the limit by forcing non-EOS tags.
  while (session.state().tags.word_count() + 1 < max_len) {
    session.apply({EditOp::set, session.state().tags.word_count(), PosTag::NOUN});
  }
  const std::size_t len = session.state().tags.word_count();
  CHECK(len == max_len - 1);
  CHECK_THROWS_AS(session.apply({EditOp::set, len, PosTag::NOUN}), DomainError);
  CHECK_THROWS_AS(session.apply({EditOp::insert, 0, PosTag::NOUN}), DomainError);
  CHECK(session.state().tags.word_count() == len);
}

TEST_CASE("replaying the history reproduces every caption") {
  World w(7);
  ControlSession a(*w.model, w.clip);
  a.apply({EditOp::set, 0, PosTag::NUM});
  a.apply({EditOp::set, 3, PosTag::EOS});
  a.apply({EditOp::insert, 1, PosTag::ADJ});
  a.reset();
  a.apply({EditOp::set, 1, PosTag::VERB});
  ControlSession b(*w.model, w.clip);
  for (const HistoryEntry& e : a.history()) {
    if (e.op == "reset") b.reset();
    if (e.edit) b.apply(*e.edit);
  }
  REQUIRE(b.history().size() == a.history().size());
  for (std::size_t i = 0; i < a.history().size(); ++i) {
    CHECK(b.history()[i].to_json() == a.history()[i].to_json());
  }
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("models without a POS pathway refuse control") {
  World w(0);
  ModelConfig c = w.config;
  c.use_pos = false;
  CaptionModel plain(c, w.vocab, 0);
  CHECK_THROWS_AS(ControlSession(plain, w.clip), ContractError);
}
