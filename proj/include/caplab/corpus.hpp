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

// Synthetic grammar corpus, dataset manifests and caption preprocessing.
//
// A toy clip has latent attributes (subject, object, motion, count, and an
// optional adjective). Content features are a sum of subject, object, count
// and adjective prototypes; motion features carry only the motion
// prototype. The verb is rule[object][motion], so naming it needs both
// streams, and the object is only spoken after the verb. Captions follow
//
//   count == 1:  ART NOUN AUX VERB ART [ADJ] NOUN     "a man is kicking a ball"
//   count >= 2:  NUM NOUN AUX VERB ART [ADJ] NOUN     "two men are kicking a ball"

#ifndef CAPLAB_CORPUS_HPP
#define CAPLAB_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "caplab/config.hpp"
#include "caplab/fusion_encoder.hpp"
#include "caplab/metrics.hpp"
#include "caplab/pos_tag.hpp"
#include "caplab/vocabulary.hpp"

namespace caplab {

inline constexpr std::size_t kMaxCaptionWords = 28;

struct SubjectEntry {
  std::string singular;
  std::string plural;
};

struct ToyGrammarSpec {
  std::vector<SubjectEntry> subjects{{"man", "men"}, {"woman", "women"},
                                     {"dog", "dogs"}, {"cat", "cats"}};
  std::vector<std::string> objects{"ball", "box", "car", "kite"};
  std::vector<std::string> verbs{"kicking", "pushing", "chasing", "carrying"};
  // rule[object][motion] indexes verbs. Empty means the Latin square
  // (object + motion) mod |verbs| with |verbs| motion classes.
  std::vector<std::vector<std::size_t>> rule;
  std::vector<std::string> articles{"a", "the"};
  std::vector<std::string> numbers{"two", "three"};  // counts 2, 3, ...
  std::vector<std::string> adjectives;
  std::string aux_singular = "is";
  std::string aux_plural = "are";
  double plural_prob = 0.3;
  double adj_prob = 0.0;
  std::size_t refs_per_clip = 3;
  double feature_noise = 0.1;
  std::size_t content_dim = 16;
  std::size_t motion_dim = 12;
  std::size_t pad_len = 10;
  std::size_t min_length = 6;
  std::size_t max_length = 10;

  std::size_t motion_count() const;
  std::size_t verb_for(std::size_t object, std::size_t motion) const;
  // Throws ConfigError when a lexicon cannot fill the templates.
  void validate() const;
  // Word -> tag for every lexeme of the grammar.
  std::map<std::string, PosTag> lexicon() const;

  Json to_json() const;
  static ToyGrammarSpec from_json(const Json& j);
};

// Lexicon lookup tagger; unknown tokens get UNK.
class ToyTagger {
 public:
  ToyTagger() = default;
  explicit ToyTagger(std::map<std::string, PosTag> lexicon)
      : lexicon_(std::move(lexicon)) {}
  PosSequence tag(const Tokens& tokens) const;

 private:
  std::map<std::string, PosTag> lexicon_;
};

// Lowercases, turns punctuation into spaces, splits on whitespace and keeps
// at most max_words tokens.
Tokens normalize_caption(const std::string& text,
                         std::size_t max_words = kMaxCaptionWords);

struct CaptionRecord {
  Tokens tokens;
  PosSequence tags;  // one tag per token, then EOS
};

struct ClipRecord {
  std::string clip_id;
  std::string content_path;  // relative to the manifest directory
  std::string motion_path;
  std::size_t true_length = 0;
  std::vector<CaptionRecord> captions;
  Json latent;  // generator attributes; null for ingested data
};

struct DatasetManifest {
  std::size_t content_dim = 16;
  std::size_t motion_dim = 12;
  std::size_t pad_len = 0;
  Json grammar;  // the ToyGrammarSpec, when synthesized
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<ClipRecord>> splits;
  std::filesystem::path root;  // directory of manifest.json; not serialized

  const std::vector<ClipRecord>& split(const std::string& name) const;
  const ClipRecord& clip(const std::string& clip_id) const;
  std::optional<std::string> split_of(const std::string& clip_id) const;

  Json to_json() const;
  // Captions may be given as {"tokens", "tags"} or as {"text"}; text is
  // normalized and tagged with the grammar lexicon (UNK without one).
  static DatasetManifest from_json(const Json& j);
  std::string hash() const;
};

inline constexpr const char* kManifestName = "manifest.json";

DatasetManifest load_manifest(const std::filesystem::path& dir_or_file);
// Writes features for every clip, then manifest.json last. Deterministic
// in (spec, sizes, seed).
DatasetManifest synth_corpus(const ToyGrammarSpec& spec, std::size_t n_train,
                             std::size_t n_val, std::size_t n_test,
                             std::uint64_t seed,
                             const std::filesystem::path& out_dir);

// From the train split only.
Vocabulary build_vocab(const DatasetManifest& manifest, std::size_t min_count = 1);

struct ClipData {
  ClipRecord record;
  FeatureClip clip;
};

// Loads the FSEQ blocks of a split and checks the padding invariant.
std::vector<ClipData> load_split(const DatasetManifest& manifest,
                                 const std::string& split);

RefCorpus reference_corpus(const std::vector<ClipData>& clips);

// Throws ConfigError when the model's feature dimensions disagree with the
// dataset.
void check_compatible(const ModelConfig& config, const DatasetManifest& manifest);

}  // namespace caplab

#endif  // CAPLAB_CORPUS_HPP
