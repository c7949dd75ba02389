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

#include "caplab/corpus.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "caplab/errors.hpp"
#include "caplab/formats.hpp"
#include "caplab/numerics/layers.hpp"

namespace caplab {

namespace {

constexpr std::uint64_t kPrototypeStream = 0x9e3779b97f4a7c15ull;
const std::vector<std::string> kSplitNames{"train", "val", "test"};

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::size_t ToyGrammarSpec::motion_count() const {
  return rule.empty() ? verbs.size() : rule.front().size();
}

std::size_t ToyGrammarSpec::verb_for(std::size_t object,
                                     std::size_t motion) const {
  if (rule.empty()) return (object + motion) % verbs.size();
  return rule.at(object).at(motion);
}

void ToyGrammarSpec::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("grammar: " + what);
  };
  need(!subjects.empty(), "needs at least one subject noun");
  need(!objects.empty(), "needs at least one object noun");
  need(!verbs.empty(), "needs at least one verb");
  need(!articles.empty(), "needs at least one article");
  need(plural_prob >= 0.0 && plural_prob <= 1.0, "plural_prob outside [0,1]");
  need(adj_prob >= 0.0 && adj_prob <= 1.0, "adj_prob outside [0,1]");
  need(plural_prob == 0.0 || !numbers.empty(),
       "plural subjects need at least one number word");
  need(adj_prob == 0.0 || !adjectives.empty(),
       "adjective slots need at least one adjective");
  need(refs_per_clip >= 1, "refs_per_clip must be >= 1");
  need(feature_noise >= 0.0, "feature_noise must be >= 0");
  need(content_dim >= 1 && motion_dim >= 1, "feature dims must be positive");
  need(min_length >= 1 && min_length <= max_length && max_length <= pad_len,
       "needs 1 <= min_length <= max_length <= pad_len");
  if (!rule.empty()) {
    need(rule.size() == objects.size(), "rule needs one row per object");
    for (const auto& row : rule) {
      need(!row.empty() && row.size() == rule.front().size(),
           "rule rows must have equal, positive length");
      for (std::size_t v : row) need(v < verbs.size(), "rule names an unknown verb");
    }
  }
  std::set<std::string> seen;
  for (const auto& [word, _] : lexicon()) seen.insert(word);
  std::size_t total = 2 * subjects.size() + objects.size() + verbs.size() +
                      articles.size() + numbers.size() + adjectives.size() + 2;
  if (aux_singular == aux_plural) --total;
  need(seen.size() == total, "every lexeme must be distinct across classes");
}

std::map<std::string, PosTag> ToyGrammarSpec::lexicon() const {
  std::map<std::string, PosTag> lex;
  for (const auto& s : subjects) {
    lex[s.singular] = PosTag::NOUN;
    lex[s.plural] = PosTag::NOUN;
  }
  for (const auto& o : objects) lex[o] = PosTag::NOUN;
  for (const auto& v : verbs) lex[v] = PosTag::VERB;
  for (const auto& a : articles) lex[a] = PosTag::ART;
  for (const auto& n : numbers) lex[n] = PosTag::NUM;
  for (const auto& a : adjectives) lex[a] = PosTag::ADJ;
  lex[aux_singular] = PosTag::AUX;
  lex[aux_plural] = PosTag::AUX;
  return lex;
}

Json ToyGrammarSpec::to_json() const {
  Json subj = Json::array();
  for (const auto& s : subjects) subj.push_back({{"singular", s.singular}, {"plural", s.plural}});
  return Json{{"subjects", subj},
              {"objects", objects},
              {"verbs", verbs},
              {"rule", rule},
              {"articles", articles},
              {"numbers", numbers},
              {"adjectives", adjectives},
              {"aux_singular", aux_singular},
              {"aux_plural", aux_plural},
              {"plural_prob", plural_prob},
              {"adj_prob", adj_prob},
              {"refs_per_clip", refs_per_clip},
              {"feature_noise", feature_noise},
              {"content_dim", content_dim},
              {"motion_dim", motion_dim},
              {"pad_len", pad_len},
              {"min_length", min_length},
              {"max_length", max_length}};
}

ToyGrammarSpec ToyGrammarSpec::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("grammar spec must be a JSON object");
  ToyGrammarSpec s;
  const Json known = s.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown grammar key '" + key + "'");
  }
  try {
    if (j.contains("subjects")) {
      s.subjects.clear();
      for (const auto& e : j.at("subjects")) {
        s.subjects.push_back({e.at("singular").get<std::string>(),
                              e.at("plural").get<std::string>()});
      }
    }
    read_field(j, "objects", s.objects);
    read_field(j, "verbs", s.verbs);
    read_field(j, "rule", s.rule);
    read_field(j, "articles", s.articles);
    read_field(j, "numbers", s.numbers);
    read_field(j, "adjectives", s.adjectives);
    read_field(j, "aux_singular", s.aux_singular);
    read_field(j, "aux_plural", s.aux_plural);
    read_field(j, "plural_prob", s.plural_prob);
    read_field(j, "adj_prob", s.adj_prob);
    read_field(j, "refs_per_clip", s.refs_per_clip);
    read_field(j, "feature_noise", s.feature_noise);
    read_field(j, "content_dim", s.content_dim);
    read_field(j, "motion_dim", s.motion_dim);
    read_field(j, "pad_len", s.pad_len);
    read_field(j, "min_length", s.min_length);
    read_field(j, "max_length", s.max_length);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("grammar spec: ") + e.what());
  }
  s.validate();
  return s;
}

PosSequence ToyTagger::tag(const Tokens& tokens) const {
  PosSequence seq;
  for (const auto& t : tokens) {
    auto it = lexicon_.find(t);
    seq.tags.push_back(it == lexicon_.end() ? PosTag::UNK : it->second);
  }
  seq.tags.push_back(PosTag::EOS);
  return seq;
}

Tokens normalize_caption(const std::string& text, std::size_t max_words) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && out.size() < max_words) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (ch >= 0x80) {
      cur.push_back(static_cast<char>(ch));  // keep UTF-8 bytes intact
    } else {
      flush();
    }
  }
  flush();
  return out;
}

const std::vector<ClipRecord>& DatasetManifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw LookupError("dataset has no split '" + name + "'");
  return it->second;
}

const ClipRecord& DatasetManifest::clip(const std::string& clip_id) const {
  for (const auto& [_, records] : splits) {
    for (const auto& r : records) {
      if (r.clip_id == clip_id) return r;
    }
  }
  throw LookupError("unknown clip '" + clip_id + "'");
}

std::optional<std::string> DatasetManifest::split_of(const std::string& clip_id) const {
  for (const auto& [name, records] : splits) {
    for (const auto& r : records) {
      if (r.clip_id == clip_id) return name;
    }
  }
  return std::nullopt;
}

Json DatasetManifest::to_json() const {
  Json js = Json::object();
  for (const auto& [name, records] : splits) {
    Json arr = Json::array();
    for (const auto& r : records) {
      Json caps = Json::array();
      for (const auto& c : r.captions) {
        std::vector<std::string> tags;
        for (PosTag t : c.tags.tags) tags.emplace_back(pos_tag_name(t));
        caps.push_back({{"tokens", c.tokens}, {"tags", tags}});
      }
      arr.push_back({{"clip_id", r.clip_id},
                     {"content", r.content_path},
                     {"motion", r.motion_path},
                     {"true_length", r.true_length},
                     {"captions", caps},
                     {"latent", r.latent}});
    }
    js[name] = arr;
  }
  return Json{{"version", 1},
              {"feature_dims",
               {{"content", content_dim}, {"motion", motion_dim}, {"pad_len", pad_len}}},
              {"grammar", grammar},
              {"seed", seed},
              {"splits", js}};
}

DatasetManifest DatasetManifest::from_json(const Json& j) {
  DatasetManifest m;
  try {
    if (j.value("version", 0) != 1) throw FormatError("manifest version must be 1");
    const Json& dims = j.at("feature_dims");
    m.content_dim = dims.at("content").get<std::size_t>();
    m.motion_dim = dims.at("motion").get<std::size_t>();
    m.pad_len = dims.at("pad_len").get<std::size_t>();
    m.grammar = j.value("grammar", Json());
    m.seed = j.value("seed", std::uint64_t{0});
    ToyTagger tagger;
    if (!m.grammar.is_null()) tagger = ToyTagger(ToyGrammarSpec::from_json(m.grammar).lexicon());
    std::set<std::string> ids;
    for (const auto& [name, arr] : j.at("splits").items()) {
      auto& records = m.splits[name];
      for (const auto& c : arr) {
        ClipRecord r;
        r.clip_id = c.at("clip_id").get<std::string>();
        if (!ids.insert(r.clip_id).second) {
          throw FormatError("duplicate clip_id '" + r.clip_id + "'");
        }
        r.content_path = c.at("content").get<std::string>();
        r.motion_path = c.at("motion").get<std::string>();
        r.true_length = c.value("true_length", m.pad_len);
        r.latent = c.value("latent", Json());
        for (const auto& cap : c.at("captions")) {
          CaptionRecord rec;
          if (cap.contains("text")) {
            rec.tokens = normalize_caption(cap.at("text").get<std::string>());
            rec.tags = tagger.tag(rec.tokens);
          } else {
            rec.tokens = cap.at("tokens").get<Tokens>();
            if (rec.tokens.size() > kMaxCaptionWords) rec.tokens.resize(kMaxCaptionWords);
            if (cap.contains("tags")) {
              for (const auto& name_j : cap.at("tags")) {
                const auto tag = parse_pos_tag(name_j.get<std::string>());
                if (!tag) throw FormatError("unknown POS tag '" + name_j.get<std::string>() + "'");
                rec.tags.tags.push_back(*tag);
              }
              if (rec.tags.size() > rec.tokens.size() + 1) {
                // Truncated tokens: keep the aligned prefix and re-close.
                rec.tags.tags.resize(rec.tokens.size());
                rec.tags.tags.push_back(PosTag::EOS);
              }
            } else {
              rec.tags = tagger.tag(rec.tokens);
            }
          }
          if (rec.tags.size() != rec.tokens.size() + 1 || !rec.tags.valid()) {
            throw FormatError("clip " + r.clip_id + ": caption tags must align with "
                              "tokens and end with a single EOS");
          }
          r.captions.push_back(std::move(rec));
        }
        if (r.captions.empty()) throw FormatError("clip " + r.clip_id + " has no captions");
        records.push_back(std::move(r));
      }
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string DatasetManifest::hash() const { return fnv1a_hex(to_json().dump()); }

DatasetManifest load_manifest(const std::filesystem::path& dir_or_file) {
  std::filesystem::path file = dir_or_file;
  if (std::filesystem::is_directory(file)) file /= kManifestName;
  DatasetManifest m = DatasetManifest::from_json(read_json(file));
  m.root = file.parent_path();
  return m;
}

DatasetManifest synth_corpus(const ToyGrammarSpec& spec, std::size_t n_train,
                             std::size_t n_val, std::size_t n_test,
                             std::uint64_t seed,
                             const std::filesystem::path& out_dir) {
  spec.validate();
  if (n_train == 0) throw ConfigError("synth needs n_train >= 1");

  num::Rng proto_rng(seed ^ kPrototypeStream);
  auto prototypes = [&](std::size_t count, std::size_t dim) {
    std::vector<std::vector<double>> p(count, std::vector<double>(dim));
    for (auto& row : p) {
      for (double& v : row) v = proto_rng.normal(0.0, 1.0);
    }
    return p;
  };
  const auto subject_p = prototypes(spec.subjects.size(), spec.content_dim);
  const auto object_p = prototypes(spec.objects.size(), spec.content_dim);
  const auto count_p = prototypes(spec.numbers.size() + 1, spec.content_dim);
  const auto adj_p = prototypes(spec.adjectives.size(), spec.content_dim);
  const auto motion_p = prototypes(spec.motion_count(), spec.motion_dim);

  num::Rng rng(seed);
  DatasetManifest m;
  m.content_dim = spec.content_dim;
  m.motion_dim = spec.motion_dim;
  m.pad_len = spec.pad_len;
  m.grammar = spec.to_json();
  m.seed = seed;

  const std::size_t sizes[] = {n_train, n_val, n_test};
  for (std::size_t s = 0; s < 3; ++s) {
    auto& records = m.splits[kSplitNames[s]];
    for (std::size_t i = 0; i < sizes[s]; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04zu", kSplitNames[s].c_str(), i);
      const std::size_t subject = rng.index(spec.subjects.size());
      const std::size_t object = rng.index(spec.objects.size());
      const std::size_t motion = rng.index(spec.motion_count());
      const bool plural = rng.uniform(0.0, 1.0) < spec.plural_prob;
      const std::size_t count = plural ? 2 + rng.index(spec.numbers.size()) : 1;
      const bool has_adj = spec.adj_prob > 0.0 && rng.uniform(0.0, 1.0) < spec.adj_prob;
      const long adjective = has_adj ? static_cast<long>(rng.index(spec.adjectives.size())) : -1;
      const std::size_t length =
          spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
      const std::size_t verb = spec.verb_for(object, motion);

      num::Tensor content({spec.pad_len, spec.content_dim});
      num::Tensor motion_f({spec.pad_len, spec.motion_dim});
      for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t d = 0; d < spec.content_dim; ++d) {
          double v = subject_p[subject][d] + object_p[object][d] + count_p[count - 1][d];
          if (adjective >= 0) v += adj_p[static_cast<std::size_t>(adjective)][d];
          content.values()[t * spec.content_dim + d] =
              v + spec.feature_noise * rng.normal(0.0, 1.0);
        }
        const double wave = 1.0 + 0.25 * std::sin(0.9 * static_cast<double>(t));
        for (std::size_t d = 0; d < spec.motion_dim; ++d) {
          motion_f.values()[t * spec.motion_dim + d] =
              wave * motion_p[motion][d] + spec.feature_noise * rng.normal(0.0, 1.0);
        }
      }

      ClipRecord r;
      r.clip_id = id;
      r.content_path = "features/" + r.clip_id + ".content.fseq";
      r.motion_path = "features/" + r.clip_id + ".motion.fseq";
      r.true_length = length;
      r.latent = Json{{"subject", subject}, {"object", object},  {"motion", motion},
                      {"count", count},     {"adjective", adjective}, {"verb", verb}};
      for (std::size_t k = 0; k < spec.refs_per_clip; ++k) {
        CaptionRecord cap;
        const auto& subj = spec.subjects[subject];
        if (plural) {
          cap.tokens = {spec.numbers[count - 2], subj.plural, spec.aux_plural};
          cap.tags.tags = {PosTag::NUM, PosTag::NOUN, PosTag::AUX};
        } else {
          cap.tokens = {spec.articles[rng.index(spec.articles.size())], subj.singular,
                        spec.aux_singular};
          cap.tags.tags = {PosTag::ART, PosTag::NOUN, PosTag::AUX};
        }
        cap.tokens.push_back(spec.verbs[verb]);
        cap.tokens.push_back(spec.articles[rng.index(spec.articles.size())]);
        cap.tags.tags.insert(cap.tags.tags.end(), {PosTag::VERB, PosTag::ART});
        if (adjective >= 0) {
          cap.tokens.push_back(spec.adjectives[static_cast<std::size_t>(adjective)]);
          cap.tags.tags.push_back(PosTag::ADJ);
        }
        cap.tokens.push_back(spec.objects[object]);
        cap.tags.tags.push_back(PosTag::NOUN);
        cap.tags.tags.push_back(PosTag::EOS);
        if (cap.tags != ToyTagger(spec.lexicon()).tag(cap.tokens)) {
          throw ContractError("generated caption disagrees with the lexicon: " +
                              cap.tags.to_string());
        }
        r.captions.push_back(std::move(cap));
      }
      save_features(content, out_dir / r.content_path);
      save_features(motion_f, out_dir / r.motion_path);
      records.push_back(std::move(r));
    }
  }
  write_json(out_dir / kManifestName, m.to_json());
  m.root = out_dir;
  return m;
}

Vocabulary build_vocab(const DatasetManifest& manifest, std::size_t min_count) {
  std::vector<Tokens> sentences;
  auto it = manifest.splits.find("train");
  if (it != manifest.splits.end()) {
    for (const auto& r : it->second) {
      for (const auto& c : r.captions) sentences.push_back(c.tokens);
    }
  }
  return Vocabulary::build(sentences, min_count);
}

std::vector<ClipData> load_split(const DatasetManifest& manifest,
                                 const std::string& split) {
  ModelConfig dims;
  dims.content_dim = manifest.content_dim;
  dims.motion_dim = manifest.motion_dim;
  dims.pad_len = manifest.pad_len;
  std::vector<ClipData> out;
  for (const auto& r : manifest.split(split)) {
    FeatureClip clip;
    clip.clip_id = r.clip_id;
    clip.content = load_features(manifest.root / r.content_path);
    clip.motion = load_features(manifest.root / r.motion_path);
    clip.true_length = r.true_length;
    clip.validate(dims);
    out.push_back({r, std::move(clip)});
  }
  return out;
}

RefCorpus reference_corpus(const std::vector<ClipData>& clips) {
  std::map<std::string, std::vector<Tokens>> refs;
  for (const auto& c : clips) {
    for (const auto& cap : c.record.captions) refs[c.record.clip_id].push_back(cap.tokens);
  }
  return RefCorpus(std::move(refs));
}

void check_compatible(const ModelConfig& config, const DatasetManifest& manifest) {
  if (config.content_dim != manifest.content_dim ||
      config.motion_dim != manifest.motion_dim || config.pad_len != manifest.pad_len) {
    throw ConfigError(
        "model expects features " + std::to_string(config.pad_len) + "x(" +
        std::to_string(config.content_dim) + ", " + std::to_string(config.motion_dim) +
        ") but the dataset has " + std::to_string(manifest.pad_len) + "x(" +
        std::to_string(manifest.content_dim) + ", " +
        std::to_string(manifest.motion_dim) + ")");
  }
}

}  // namespace caplab
