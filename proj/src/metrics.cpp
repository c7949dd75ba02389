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

#include "caplab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "caplab/errors.hpp"

namespace caplab {

namespace {

using NgramCounts = std::unordered_map<std::string, double>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    counts[key] += 1.0;
  }
  return counts;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& candidate,
                     const std::vector<Tokens>& references) {
  if (references.empty()) throw DomainError("BLEU needs at least one reference");
  BleuStats s;
  s.candidate_length = static_cast<double>(candidate.size());
  std::size_t best = references.front().size();
  for (const Tokens& r : references) {
    const auto d = [&](std::size_t len) {
      return std::llabs(static_cast<long long>(len) -
                        static_cast<long long>(candidate.size()));
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
      best = r.size();
    }
  }
  s.reference_length = static_cast<double>(best);
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    NgramCounts max_ref;
    for (const Tokens& r : references) {
      for (const auto& [g, c] : count_ngrams(r, n)) {
        max_ref[g] = std::max(max_ref[g], c);
      }
    }
    for (const auto& [g, c] : cand) {
      auto it = max_ref.find(g);
      if (it != max_ref.end()) s.matches[n - 1] += std::min(c, it->second);
      s.totals[n - 1] += c;
    }
  }
  return s;
}

BleuScores bleu_from_stats(const BleuStats& s, double smoothing) {
  BleuScores out{};
  if (s.candidate_length == 0.0) return out;
  const double bp = s.candidate_length > s.reference_length
                        ? 1.0
                        : std::exp(1.0 - s.reference_length / s.candidate_length);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    double p = 0.0;
    if (s.totals[n] > 0.0) {
      p = s.matches[n] > 0.0 ? s.matches[n] / s.totals[n]
                             : smoothing / s.totals[n];
    } else if (smoothing > 0.0) {
      p = smoothing;
    }
    if (p <= 0.0) zero = true;
    if (!zero) log_sum += std::log(p);
    out[n] = zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n + 1));
  }
  return out;
}

BleuScores bleu(const Tokens& candidate, const std::vector<Tokens>& references,
                double smoothing) {
  return bleu_from_stats(bleu_stats(candidate, references), smoothing);
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references,
               double beta) {
  if (references.empty()) throw DomainError("ROUGE-L needs at least one reference");
  double best = 0.0;
  if (candidate.empty()) return best;
  const double b2 = beta * beta;
  for (const Tokens& r : references) {
    if (r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(candidate, r));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double rec = lcs / static_cast<double>(r.size());
    best = std::max(best, (1.0 + b2) * p * rec / (rec + b2 * p));
  }
  return best;
}

RefCorpus::RefCorpus(std::map<std::string, std::vector<Tokens>> refs)
    : refs_(std::move(refs)) {
  if (refs_.empty()) throw DomainError("reference corpus is empty");
  for (const auto& [id, list] : refs_) {
    if (list.empty()) throw DomainError("clip " + id + " has no references");
    std::set<std::string> seen;
    for (const Tokens& r : list) {
      for (std::size_t n = 1; n <= 4; ++n) {
        for (const auto& [g, _] : count_ngrams(r, n)) seen.insert(g);
      }
    }
    for (const std::string& g : seen) df_[g] += 1.0;
  }
  log_clips_ = std::log(static_cast<double>(refs_.size()));
  for (const auto& [id, list] : refs_) {
    auto& vecs = ref_vectors_[id];
    for (const Tokens& r : list) vecs.push_back({vectorize(r), r.size()});
  }
}

bool RefCorpus::contains(const std::string& clip_id) const {
  return refs_.count(clip_id) != 0;
}

const std::vector<Tokens>& RefCorpus::references(const std::string& clip_id) const {
  auto it = refs_.find(clip_id);
  if (it == refs_.end()) throw LookupError("clip " + clip_id + " not in reference corpus");
  return it->second;
}

double RefCorpus::document_frequency(const std::string& ngram) const {
  auto it = df_.find(ngram);
  return it == df_.end() ? 0.0 : it->second;
}

std::array<RefCorpus::NgramVector, 4> RefCorpus::vectorize(
    const Tokens& tokens) const {
  std::array<NgramVector, 4> out;
  for (std::size_t n = 1; n <= 4; ++n) {
    NgramVector& v = out[n - 1];
    double sq = 0.0;
    for (const auto& [g, tf] : count_ngrams(tokens, n)) {
      const double idf =
          log_clips_ - std::log(std::max(1.0, document_frequency(g)));
      const double w = tf * idf;
      v.weights.emplace(g, w);
      sq += w * w;
    }
    v.norm = std::sqrt(sq);
  }
  return out;
}

double RefCorpus::cider_d(const Tokens& candidate,
                          const std::string& clip_id) const {
  auto it = ref_vectors_.find(clip_id);
  if (it == ref_vectors_.end()) {
    throw LookupError("clip " + clip_id + " not in reference corpus");
  }
  const std::array<NgramVector, 4> cand = vectorize(candidate);
  double total = 0.0;
  for (const RefVectors& ref : it->second) {
    const double delta = static_cast<double>(candidate.size()) -
                         static_cast<double>(ref.length);
    const double penalty =
        std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
    double per_ref = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
      const NgramVector& c = cand[n];
      const NgramVector& r = ref.by_order[n];
      if (c.norm == 0.0 || r.norm == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, w] : c.weights) {
        auto rw = r.weights.find(g);
        if (rw != r.weights.end()) dot += std::min(w, rw->second) * rw->second;
      }
      per_ref += dot / (c.norm * r.norm) * penalty;
    }
    total += per_ref / 4.0;
  }
  return 10.0 * total / static_cast<double>(it->second.size());
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

Json EvaluationReport::to_json(int decimals) const {
  Json j;
  for (std::size_t n = 0; n < 4; ++n) {
    j["bleu_" + std::to_string(n + 1)] = round_to(100.0 * bleu[n], decimals);
  }
  j["rouge_l"] = round_to(100.0 * rouge_l, decimals);
  j["cider_d"] = round_to(100.0 * cider_d, decimals);
  j["clips"] = clips;
  return j;
}

EvaluationReport evaluate(const std::map<std::string, Tokens>& candidates,
                          const RefCorpus& corpus) {
  EvaluationReport report;
  if (candidates.empty()) return report;
  BleuStats stats;
  double rouge = 0.0, cider = 0.0;
  for (const auto& [id, cand] : candidates) {
    const auto& refs = corpus.references(id);
    stats += bleu_stats(cand, refs);
    rouge += rouge_l(cand, refs);
    cider += corpus.cider_d(cand, id);
  }
  const double n = static_cast<double>(candidates.size());
  report.bleu = bleu_from_stats(stats);
  report.rouge_l = rouge / n;
  report.cider_d = cider / n;
  report.clips = candidates.size();
  return report;
}

}  // namespace caplab
