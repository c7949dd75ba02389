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

#include "caplab/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "caplab/errors.hpp"
#include "caplab/numerics/layers.hpp"

namespace caplab {

namespace {

using Matrix = std::vector<std::vector<double>>;

std::vector<double> mean_rows(const num::Tensor& t, std::size_t rows) {
  std::vector<double> m(t.cols(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[c] += t.at(r, c);
  }
  for (double& v : m) v /= static_cast<double>(rows);
  return m;
}

}  // namespace

Json ProbeReport::to_json() const {
  return Json{{"content_only_accuracy", content_only},
              {"joint_accuracy", joint},
              {"chance", chance},
              {"clips", clips},
              {"classes", classes}};
}

double probe_accuracy(const Matrix& fit_x, const std::vector<std::size_t>& fit_y,
                      const Matrix& eval_x, const std::vector<std::size_t>& eval_y,
                      std::size_t classes, double ridge) {
  if (fit_x.empty() || eval_x.empty()) throw DomainError("probe needs samples");
  if (fit_x.size() != fit_y.size() || eval_x.size() != eval_y.size()) {
    throw DimensionError("probe features and labels differ in count");
  }
  const auto d = static_cast<Eigen::Index>(fit_x.front().size());
  auto to_matrix = [d](const Matrix& xs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), d + 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (static_cast<Eigen::Index>(xs[i].size()) != d) {
        throw DimensionError("probe rows differ in width");
      }
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index k = 0; k < d; ++k) m(r, k) = xs[i][static_cast<std::size_t>(k)];
      m(r, d) = 1.0;
    }
    return m;
  };
  Eigen::MatrixXd a = to_matrix(fit_x), b = to_matrix(eval_x);
  const Eigen::RowVectorXd mu = a.leftCols(d).colwise().mean();
  const Eigen::RowVectorXd sd =
      ((a.leftCols(d).rowwise() - mu).array().square().colwise().mean().sqrt() + 1e-8)
          .matrix();
  for (Eigen::MatrixXd* m : {&a, &b}) {
    m->leftCols(d) =
        ((m->leftCols(d).rowwise() - mu).array().rowwise() / sd.array()).matrix();
  }
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(a.rows(), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < fit_y.size(); ++i) {
    if (fit_y[i] >= classes) throw DomainError("probe label out of range");
    targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(fit_y[i])) = 1.0;
  }
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd w = gram.ldlt().solve(a.transpose() * targets);
  const Eigen::MatrixXd scores = b * w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    correct += static_cast<std::size_t>(best) == eval_y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

ProbeReport run_verb_probe(const std::vector<ClipData>& clips, std::uint64_t seed) {
  if (clips.size() < 4) throw DomainError("probe needs at least 4 clips");
  Matrix content, joint;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  for (const auto& c : clips) {
    if (!c.record.latent.is_object() || !c.record.latent.contains("verb")) {
      throw LookupError("clip " + c.record.clip_id + " has no latent verb label");
    }
    const auto y = c.record.latent.at("verb").get<std::size_t>();
    labels.push_back(y);
    classes = std::max(classes, y + 1);
    const auto mc = mean_rows(c.clip.content, c.clip.true_length);
    const auto mm = mean_rows(c.clip.motion, c.clip.true_length);
    content.push_back(mc);
    std::vector<double> j = mc;
    j.insert(j.end(), mm.begin(), mm.end());
    for (double a : mc) {
      for (double b : mm) j.push_back(a * b);
    }
    joint.push_back(std::move(j));
  }

  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), 0);
  num::Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t half = order.size() / 2;

  auto cross_fit = [&](const Matrix& xs) {
    double acc = 0.0;
    for (int fold = 0; fold < 2; ++fold) {
      Matrix fx, ex;
      std::vector<std::size_t> fy, ey;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const bool first = i < half;
        auto& x = (first == (fold == 0)) ? fx : ex;
        auto& y = (first == (fold == 0)) ? fy : ey;
        x.push_back(xs[order[i]]);
        y.push_back(labels[order[i]]);
      }
      acc += probe_accuracy(fx, fy, ex, ey, classes);
    }
    return acc / 2.0;
  };

  ProbeReport report;
  report.clips = clips.size();
  report.classes = classes;
  std::vector<std::size_t> freq(classes, 0);
  for (std::size_t y : labels) ++freq[y];
  report.chance = static_cast<double>(*std::max_element(freq.begin(), freq.end())) /
                  static_cast<double>(labels.size());
  report.content_only = cross_fit(content);
  report.joint = cross_fit(joint);
  return report;
}

}  // namespace caplab
