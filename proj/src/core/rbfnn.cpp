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
#include <limits>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/rng.hpp"

namespace hsf {

namespace {

constexpr double kMinWidth = 1e-6;

double sqdist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace

KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations, double tolerance) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k == 0 || k > n) throw UsageError("k-means needs 1 <= k <= samples");
  Rng rng(seed);
  KMeansResult res;
  res.centers.resize(static_cast<Eigen::Index>(k), x.cols());

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      pick = n;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] <= 0.0) continue;
          pick = i;
          target -= d2[i];
          if (target < 0.0) break;
        }
      }
      if (pick == n)  // remaining samples duplicate chosen centers
        pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    chosen[pick] = 1;
    res.centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sqdist(x, static_cast<Eigen::Index>(i), res.centers, static_cast<Eigen::Index>(c)));
  }

  res.assignment.assign(n, 0);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iterations, 1); ++it) {
    res.iterations = it + 1;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double v = sqdist(x, static_cast<Eigen::Index>(i), res.centers, static_cast<Eigen::Index>(c));
        if (v < best) {
          best = v;
          res.assignment[i] = c;
        }
      }
    }
    if (it + 1 == max_iterations) break;
    Matrix next = Matrix::Zero(res.centers.rows(), res.centers.cols());
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(res.assignment[i])) += x.row(static_cast<Eigen::Index>(i));
      ++members[res.assignment[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (members[c] == 0) {
        next.row(ci) = res.centers.row(ci);
        continue;
      }
      next.row(ci) /= static_cast<double>(members[c]);
      shift = std::max(shift, std::sqrt(sqdist(next, ci, res.centers, ci)));
    }
    res.centers = std::move(next);
    if (shift <= tolerance) {
      // Re-assign against the final centers.
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          const double v = sqdist(x, static_cast<Eigen::Index>(i), res.centers, static_cast<Eigen::Index>(c));
          if (v < best) {
            best = v;
            res.assignment[i] = c;
          }
        }
      }
      break;
    }
  }
  return res;
}

Eigen::MatrixXd rbfnn_activations(const RbfnnModel& model, const Matrix& x) {
  const auto c = model.centers.rows();
  if (x.cols() != model.centers.cols())
    throw DataError("rbf network expects " + std::to_string(model.centers.cols()) + " features, got " +
                    std::to_string(x.cols()));
  Eigen::MatrixXd a(x.rows(), c + 1);
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t r) {
    const auto ri = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < c; ++j) {
      const double w = model.widths[static_cast<std::size_t>(j)];
      a(ri, j) = std::exp(-sqdist(x, ri, model.centers, j) / (2.0 * w * w));
    }
    a(ri, c) = 1.0;
  });
  return a;
}

RbfnnModel rbfnn_train(const TrainingSet& set, const RbfnnParams& params, std::uint64_t seed) {
  if (params.centers_per_class == 0) throw UsageError("rbf network needs at least one center per class");
  if (static_cast<std::size_t>(set.classes) > set.size())
    throw DataError("rbf network needs at least one sample per class");
  RbfnnModel model;
  model.classes = set.classes;

  std::vector<Matrix> centers;
  std::vector<double> widths;
  std::vector<char> singleton;
  for (std::int32_t k = 1; k <= set.classes; ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set.y[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    Matrix xs(static_cast<Eigen::Index>(rows.size()), set.x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = set.x.row(rows[i]);
    const std::size_t kc = std::min(params.centers_per_class, rows.size());
    auto km = kmeans(xs, kc, derive_seed(seed, "rbfnn.class", static_cast<std::uint64_t>(k)),
                     params.max_iterations, params.tolerance);
    std::vector<double> sum(kc, 0.0);
    std::vector<std::size_t> members(kc, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto c = km.assignment[i];
      sum[c] += sqdist(xs, static_cast<Eigen::Index>(i), km.centers, static_cast<Eigen::Index>(c));
      ++members[c];
    }
    for (std::size_t c = 0; c < kc; ++c) {
      // Spread of the member samples around their center.
      const double w = members[c] > 0 ? std::sqrt(sum[c] / static_cast<double>(members[c])) : 0.0;
      widths.push_back(std::max(w, kMinWidth));
      singleton.push_back(members[c] <= 1);
      model.center_class.push_back(k);
    }
    centers.push_back(std::move(km.centers));
  }

  Eigen::Index total = 0;
  for (const auto& m : centers) total += m.rows();
  model.centers.resize(total, set.x.cols());
  Eigen::Index at = 0;
  for (const auto& m : centers) {
    model.centers.middleRows(at, m.rows()) = m;
    at += m.rows();
  }

  std::vector<double> regular;
  for (std::size_t c = 0; c < widths.size(); ++c)
    if (!singleton[c]) regular.push_back(widths[c]);
  double fallback = 0.0;
  if (!regular.empty()) {
    std::sort(regular.begin(), regular.end());
    const std::size_t m = regular.size();
    fallback = m % 2 ? regular[m / 2] : 0.5 * (regular[m / 2 - 1] + regular[m / 2]);
  } else if (total > 1) {
    // Every cluster is a single sample: use the mean nearest-center spacing.
    double s = 0.0;
    for (Eigen::Index i = 0; i < total; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < total; ++j)
        if (j != i) best = std::min(best, sqdist(model.centers, i, model.centers, j));
      s += std::sqrt(best);
    }
    fallback = s / static_cast<double>(total);
  }
  fallback = std::max(fallback, kMinWidth);
  if (regular.empty() && total <= 1) fallback = 1.0;
  for (std::size_t c = 0; c < widths.size(); ++c)
    if (singleton[c]) widths[c] = fallback;
  model.widths = std::move(widths);

  const Eigen::MatrixXd a = rbfnn_activations(model, set.x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(a.rows(), set.classes);
  for (std::size_t i = 0; i < set.size(); ++i) t(static_cast<Eigen::Index>(i), set.y[i] - 1) = 1.0;
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += params.ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericError("rbf network normal equations are not solvable");
  model.weights = ldlt.solve(a.transpose() * t);
  if (!model.weights.allFinite()) throw NumericError("rbf network output weights are not finite");
  return model;
}

Labels rbfnn_predict(const RbfnnModel& model, const Matrix& x) {
  const Eigen::MatrixXd out = rbfnn_activations(model, x) * model.weights;
  Labels labels(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(model.classes));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index k = 0; k < out.cols(); ++k) row[static_cast<std::size_t>(k)] = out(r, k);
    labels[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(argmax_first(row)) + 1;
  }
  return labels;
}

}  // namespace hsf
