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

// Brute-force metric implementations: n-grams are token vectors compared
// element by element, LCS is found by enumerating candidate subsequences,
// and CIDEr-D vectors are dense over an explicit n-gram list.

#ifndef CAPLAB_TESTS_METRIC_ORACLES_HPP
#define CAPLAB_TESTS_METRIC_ORACLES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace metric_oracle {

using Sentence = std::vector<std::string>;
using Gram = std::vector<std::string>;

inline std::vector<Gram> grams(const Sentence& s, std::size_t n) {
  std::vector<Gram> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    out.emplace_back(s.begin() + static_cast<long>(i),
                     s.begin() + static_cast<long>(i + n));
  }
  return out;
}

inline double occurrences(const Gram& g, const Sentence& s) {
  double c = 0;
  for (const Gram& h : grams(s, g.size())) c += (h == g) ? 1 : 0;
  return c;
}

inline std::vector<Gram> distinct(std::vector<Gram> all) {
  std::vector<Gram> out;
  for (Gram& g : all) {
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

struct Bleu {
  std::array<double, 4> matches{}, totals{};
  double c = 0, r = 0;
};

inline Bleu bleu_counts(const Sentence& cand, const std::vector<Sentence>& refs) {
  Bleu b;
  b.c = static_cast<double>(cand.size());
  // Closest length; on ties the shorter one.
  std::vector<std::size_t> lens;
  for (const auto& r : refs) lens.push_back(r.size());
  std::sort(lens.begin(), lens.end());
  double best_d = 1e300;
  for (std::size_t len : lens) {
    const double d = std::abs(static_cast<double>(len) - b.c);
    if (d < best_d) {
      best_d = d;
      b.r = static_cast<double>(len);
    }
  }
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const Gram& g : distinct(grams(cand, n))) {
      double cap = 0;
      for (const auto& r : refs) cap = std::max(cap, occurrences(g, r));
      b.matches[n - 1] += std::min(occurrences(g, cand), cap);
    }
    b.totals[n - 1] = static_cast<double>(grams(cand, n).size());
  }
  return b;
}

inline std::array<double, 4> bleu_scores(const Bleu& b) {
  std::array<double, 4> out{};
  if (b.c == 0) return out;
  const double bp = b.c > b.r ? 1.0 : std::exp(1.0 - b.r / b.c);
  for (std::size_t n = 1; n <= 4; ++n) {
    double prod = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      prod *= b.totals[k] > 0 ? b.matches[k] / b.totals[k] : 0.0;
    }
    out[n - 1] = bp * std::pow(prod, 1.0 / static_cast<double>(n));
  }
  return out;
}

inline bool is_subsequence(const Sentence& sub, const Sentence& s) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < s.size() && j < sub.size(); ++i) {
    if (s[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

inline std::size_t lcs(const Sentence& a, const Sentence& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    Sentence sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline double rouge_l(const Sentence& cand, const std::vector<Sentence>& refs,
                      double beta = 1.2) {
  double best = 0;
  for (const auto& r : refs) {
    const double l = static_cast<double>(lcs(cand, r));
    if (l == 0) continue;
    const double p = l / static_cast<double>(cand.size());
    const double q = l / static_cast<double>(r.size());
    best = std::max(best, (1 + beta * beta) * p * q / (q + beta * beta * p));
  }
  return best;
}

using Corpus = std::map<std::string, std::vector<Sentence>>;

inline double cider_d(const Sentence& cand, const std::string& clip,
                      const Corpus& corpus, double sigma = 6.0) {
  const double n_docs = static_cast<double>(corpus.size());
  const auto& refs = corpus.at(clip);
  double score = 0;
  for (const Sentence& ref : refs) {
    double per_ref = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<Gram> keys = grams(cand, n);
      for (const Gram& g : grams(ref, n)) keys.push_back(g);
      keys = distinct(keys);
      std::vector<double> vc, vr;
      for (const Gram& g : keys) {
        double df = 0;
        for (const auto& [_, rs] : corpus) {
          bool hit = false;
          for (const auto& r : rs) hit = hit || occurrences(g, r) > 0;
          df += hit ? 1 : 0;
        }
        const double idf = std::log(n_docs) - std::log(std::max(1.0, df));
        vc.push_back(occurrences(g, cand) * idf);
        vr.push_back(occurrences(g, ref) * idf);
      }
      double dot = 0, nc = 0, nr = 0;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        dot += std::min(vc[i], vr[i]) * vr[i];
        nc += vc[i] * vc[i];
        nr += vr[i] * vr[i];
      }
      if (nc == 0 || nr == 0) continue;
      const double delta = static_cast<double>(cand.size()) - static_cast<double>(ref.size());
      per_ref += dot / (std::sqrt(nc) * std::sqrt(nr)) *
                 std::exp(-delta * delta / (2 * sigma * sigma));
    }
    score += per_ref / 4.0;
  }
  return 10.0 * score / static_cast<double>(refs.size());
}

// Random sentences over a small vocabulary, so n-gram overlaps are common.
inline Sentence random_sentence(std::mt19937_64& rng, std::size_t min_len,
                                std::size_t max_len, std::size_t vocab = 6) {
  static const char* words[] = {"a", "man", "dog", "runs", "the", "ball",
                                "two", "is", "red", "on"};
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> w(0, vocab - 1);
  Sentence s(len(rng));
  for (auto& t : s) t = words[w(rng)];
  return s;
}

inline Corpus random_corpus(std::mt19937_64& rng, std::size_t clips) {
  Corpus c;
  std::uniform_int_distribution<std::size_t> nref(1, 4);
  for (std::size_t i = 0; i < clips; ++i) {
    auto& refs = c["clip" + std::to_string(i)];
    const std::size_t k = nref(rng);
    for (std::size_t r = 0; r < k; ++r) refs.push_back(random_sentence(rng, 1, 9));
  }
  return c;
}

}  // namespace metric_oracle

#endif  // CAPLAB_TESTS_METRIC_ORACLES_HPP
