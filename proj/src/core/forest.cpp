// Copyright 2026 The hsfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/rng.hpp"

namespace hsf {

namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // sum over children of sum_k n_k^2 / n; larger is purer
};

class TreeGrower {
 public:
  TreeGrower(const TrainingSet& set, std::size_t mtry, Rng& rng)
      : set_(set), mtry_(mtry), rng_(rng), features_(set.dims()) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  void grow(DecisionTree& tree, std::vector<std::size_t> sample) {
    tree.nodes.clear();
    tree.nodes.emplace_back();
    struct Job {
      std::uint32_t node;
      std::vector<std::size_t> rows;
    };
    std::vector<Job> stack;
    stack.push_back({0, std::move(sample)});
    while (!stack.empty()) {
      Job job = std::move(stack.back());
      stack.pop_back();
      const auto counts = class_counts(job.rows);
      tree.nodes[job.node].label = majority(counts);
      const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
      if (pure || job.rows.size() < 2) continue;
      const Split s = best_split(job.rows);
      if (!s.found) continue;
      std::vector<std::size_t> left, right;
      for (auto r : job.rows)
        (value(r, s.feature) <= s.threshold ? left : right).push_back(r);
      const auto l = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[job.node];
      node.feature = static_cast<std::int32_t>(s.feature);
      node.threshold = s.threshold;
      node.left = l;
      node.right = l + 1;
      // Right first so the left subtree is expanded next (depth-first order).
      stack.push_back({l + 1, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
  }

 private:
  double value(std::size_t row, std::size_t f) const {
    return set_.x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(f));
  }

  std::vector<double> class_counts(const std::vector<std::size_t>& rows) const {
    std::vector<double> c(static_cast<std::size_t>(set_.classes), 0.0);
    for (auto r : rows) c[static_cast<std::size_t>(set_.y[r] - 1)] += 1.0;
    return c;
  }

  static std::int32_t majority(const std::vector<double>& counts) {
    return static_cast<std::int32_t>(argmax_first(counts)) + 1;
  }

  Split split_on(const std::vector<std::size_t>& rows, std::size_t f) {
    order_.assign(rows.begin(), rows.end());
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return value(a, f) < value(b, f); });
    const auto k = static_cast<std::size_t>(set_.classes);
    right_.assign(k, 0.0);
    left_.assign(k, 0.0);
    for (auto r : order_) right_[static_cast<std::size_t>(set_.y[r] - 1)] += 1.0;
    double left_sq = 0.0, right_sq = 0.0;
    for (double c : right_) right_sq += c * c;
    const double n = static_cast<double>(order_.size());
    Split best;
    for (std::size_t t = 0; t + 1 < order_.size(); ++t) {
      const auto cls = static_cast<std::size_t>(set_.y[order_[t]] - 1);
      // Incremental update of the sums of squared counts.
      left_sq += 2.0 * left_[cls] + 1.0;
      left_[cls] += 1.0;
      right_sq -= 2.0 * right_[cls] - 1.0;
      right_[cls] -= 1.0;
      const double a = value(order_[t], f), b = value(order_[t + 1], f);
      if (!(a < b)) continue;
      const double nl = static_cast<double>(t + 1);
      const double score = left_sq / nl + right_sq / (n - nl);
      if (!best.found || score > best.score) {
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        best = {true, f, thr, score};
      }
    }
    return best;
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    rng_.partial_shuffle(features_, mtry_);
    Split best;
    auto consider = [&](std::size_t f) {
      const Split s = split_on(rows, f);
      if (s.found && (!best.found || s.score > best.score)) best = s;
    };
    for (std::size_t i = 0; i < mtry_; ++i) consider(features_[i]);
    // Every sampled feature is constant here: fall back to the rest.
    for (std::size_t i = mtry_; !best.found && i < features_.size(); ++i) consider(features_[i]);
    return best;
  }

  const TrainingSet& set_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> order_;
  std::vector<double> left_, right_;
};

}  // namespace

ForestModel rf_train(const TrainingSet& set, const ForestParams& params, std::uint64_t seed) {
  if (set.size() < 2) throw DataError("random forest needs at least two samples");
  if (params.trees == 0) throw UsageError("random forest needs at least one tree");
  const std::size_t d = set.dims();
  std::size_t mtry = params.mtry;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  mtry = std::clamp<std::size_t>(mtry, 1, d);

  ForestModel model;
  model.classes = set.classes;
  model.dims = d;
  model.trees.resize(params.trees);
  const std::size_t n = set.size();
  parallel_for(params.trees, [&](std::size_t t) {
    auto& tree = model.trees[t];
    tree.seed = derive_seed(seed, "rf.tree", t);
    Rng rng(tree.seed);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng.below(n);
    std::sort(sample.begin(), sample.end());
    TreeGrower(set, mtry, rng).grow(tree, std::move(sample));
  });
  return model;
}

std::int32_t tree_predict(const DecisionTree& tree, std::span<const double> x) {
  std::uint32_t i = 0;
  while (tree.nodes[i].feature >= 0) {
    const auto& n = tree.nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[i].label;
}

Eigen::MatrixXi rf_votes(const ForestModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.dims)
    throw DataError("forest expects " + std::to_string(model.dims) + " features, got " +
                    std::to_string(x.cols()));
  Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(x.rows(), model.classes);
  const auto d = model.dims;
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t r) {
    const std::span<const double> row(x.data() + r * d, d);
    for (const auto& tree : model.trees) votes(static_cast<Eigen::Index>(r), tree_predict(tree, row) - 1) += 1;
  });
  return votes;
}

Labels rf_predict(const ForestModel& model, const Matrix& x) {
  const Eigen::MatrixXi votes = rf_votes(model, x);
  Labels out(static_cast<std::size_t>(x.rows()));
  std::vector<double> v(static_cast<std::size_t>(model.classes));
  for (Eigen::Index r = 0; r < votes.rows(); ++r) {
    for (Eigen::Index k = 0; k < votes.cols(); ++k) v[static_cast<std::size_t>(k)] = votes(r, k);
    out[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(argmax_first(v)) + 1;
  }
  return out;
}

}  // namespace hsf
