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

// Caption metrics over whitespace tokens: BLEU@1-4, ROUGE-L and CIDEr-D.
// Scores are on the natural scale ([0,1], or [0,10] for CIDEr-D); reports
// multiply by 100.

#ifndef CAPLAB_METRICS_HPP
#define CAPLAB_METRICS_HPP

#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "caplab/config.hpp"

namespace caplab {

using Tokens = std::vector<std::string>;
using BleuScores = std::array<double, 4>;  // BLEU@1 .. BLEU@4

inline constexpr double kBleuSmoothing = 1e-9;

// Sufficient statistics of BLEU for one or more candidates.
struct BleuStats {
  std::array<double, 4> matches{};  // clipped n-gram matches
  std::array<double, 4> totals{};   // candidate n-gram counts
  double candidate_length = 0.0;
  double reference_length = 0.0;    // closest reference length, ties shorter

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& candidate,
                     const std::vector<Tokens>& references);
// With smoothing > 0, every zero precision m/t becomes smoothing/t.
BleuScores bleu_from_stats(const BleuStats& stats, double smoothing = 0.0);
// Sentence-level BLEU against a reference set.
BleuScores bleu(const Tokens& candidate, const std::vector<Tokens>& references,
                double smoothing = 0.0);

// max over references of (1 + b^2) P R / (R + b^2 P) with P, R from the LCS.
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references,
               double beta = 1.2);

// Reference captions per clip with n-gram document frequencies (n = 1..4).
// A clip's references count as one document.
class RefCorpus {
 public:
  RefCorpus() = default;
  explicit RefCorpus(std::map<std::string, std::vector<Tokens>> refs);

  std::size_t size() const noexcept { return refs_.size(); }
  bool contains(const std::string& clip_id) const;
  const std::vector<Tokens>& references(const std::string& clip_id) const;
  const std::map<std::string, std::vector<Tokens>>& all() const noexcept {
    return refs_;
  }
  // Number of clips whose references contain the n-gram (tokens joined by
  // single spaces).
  double document_frequency(const std::string& ngram) const;

  // 10 * mean over references and n = 1..4 of the clipped TF-IDF cosine
  // times exp(-(len_c - len_r)^2 / (2 sigma^2)). Throws LookupError for an
  // unknown clip.
  double cider_d(const Tokens& candidate, const std::string& clip_id) const;

 private:
  struct NgramVector {
    std::unordered_map<std::string, double> weights;
    double norm = 0.0;
  };
  struct RefVectors {
    std::array<NgramVector, 4> by_order;
    std::size_t length = 0;
  };

  std::array<NgramVector, 4> vectorize(const Tokens& tokens) const;

  std::map<std::string, std::vector<Tokens>> refs_;
  std::unordered_map<std::string, double> df_;
  std::map<std::string, std::vector<RefVectors>> ref_vectors_;
  double log_clips_ = 0.0;
};

inline constexpr double kCiderSigma = 6.0;

struct EvaluationReport {
  BleuScores bleu{};  // corpus BLEU
  double rouge_l = 0.0;
  double cider_d = 0.0;
  std::size_t clips = 0;

  // Keys bleu_1..bleu_4, rouge_l, cider_d (all x100, rounded) and clips.
  Json to_json(int decimals = 2) const;
};

// Scores every candidate against `corpus`, whose document frequencies are
// used for CIDEr-D. Every candidate clip must exist in the corpus.
EvaluationReport evaluate(const std::map<std::string, Tokens>& candidates,
                          const RefCorpus& corpus);

double round_to(double value, int decimals);

}  // namespace caplab

#endif  // CAPLAB_METRICS_HPP
