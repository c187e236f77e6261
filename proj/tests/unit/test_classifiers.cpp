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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"
#include "hsfuse/rng.hpp"

using namespace hsf;

namespace {

// Gaussian blobs around well separated centers.
TrainingSet blobs(Rng& rng, std::int32_t classes, std::size_t per_class, Eigen::Index dims, double spread) {
  Matrix x(static_cast<Eigen::Index>(classes) * static_cast<Eigen::Index>(per_class), dims);
  Labels y;
  Eigen::Index r = 0;
  for (std::int32_t k = 1; k <= classes; ++k)
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      for (Eigen::Index j = 0; j < dims; ++j) x(r, j) = rng.normal((j == (k - 1) % dims ? 4.0 : 0.0) * (1 + (k - 1) / dims), spread);
      y.push_back(k);
    }
  return TrainingSet::make(std::move(x), std::move(y));
}

TrainingSet xor_set(Rng& rng, std::size_t n) {
  Matrix x(static_cast<Eigen::Index>(n), 2);
  Labels y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    x(static_cast<Eigen::Index>(i), 0) = a;
    x(static_cast<Eigen::Index>(i), 1) = b;
    y.push_back((a > 0) == (b > 0) ? 1 : 2);
  }
  return TrainingSet::make(std::move(x), std::move(y));
}

double accuracy(const Labels& a, const Labels& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
  return static_cast<double>(ok) / static_cast<double>(a.size());
}

double rbf(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j, double gamma) {
  return std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
}

}  // namespace

TEST_CASE("training sets are validated") {
  Matrix x = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(TrainingSet::make(x, {1, 2}), DataError);
  CHECK_THROWS_AS(TrainingSet::make(x, {1, 0, 2}), DataError);
  CHECK_THROWS_AS(TrainingSet::make(x, {1, 3, 3}), DataError);  // class 2 absent
  x(1, 1) = NAN;
  CHECK_THROWS_AS(TrainingSet::make(x, {1, 2, 2}), DataError);
  const auto ok = TrainingSet::make(Matrix::Zero(3, 2), {2, 1, 2});
  CHECK(ok.classes == 2);
  CHECK(ok.counts() == std::vector<std::size_t>{1, 2});
}

TEST_CASE("argmax_first prefers the lowest index on ties") {
  CHECK(argmax_first(std::vector<double>{1, 3, 3, 2}) == 1);
  CHECK(argmax_first(std::vector<double>{0, 0}) == 0);
}

TEST_CASE("default SVM grids") {
  const auto c = SvmParams::default_c_grid();
  const auto g = SvmParams::default_gamma_grid();
  CHECK(c.size() == 7);
  CHECK(c.front() == 0.25);
  CHECK(c.back() == 1024);
  CHECK(g.size() == 7);
  CHECK(g.front() == std::ldexp(1.0, -10));
  CHECK(g.back() == 4);
}

TEST_CASE("SMO solution satisfies the box, equality and KKT conditions") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto set = xor_set(rng, 40 + rng.below(40));
    const double gamma = rng.uniform(0.5, 4), c = std::ldexp(1.0, static_cast<int>(rng.below(8)) - 2);
    const Matrix k = rbf_gram(set.x, gamma);
    std::vector<std::size_t> rows(set.size());
    std::vector<int> sign(set.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i] = i;
      sign[i] = set.y[i] == 1 ? 1 : -1;
    }
    const auto res = smo_solve(k, rows, sign, c, 1e-6, 10'000'000);
    REQUIRE(res.converged);
    double eq = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(res.alpha[i] >= 0.0);
      CHECK(res.alpha[i] <= c);
      eq += res.alpha[i] * sign[i];
    }
    CHECK(std::abs(eq) <= 1e-9 * c * static_cast<double>(rows.size()));
    const double tol = 1e-4;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double f = -res.rho;
      for (std::size_t j = 0; j < rows.size(); ++j) f += res.alpha[j] * sign[j] * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double margin = sign[i] * f;
      if (res.alpha[i] <= 1e-12) CHECK(margin >= 1 - tol);
      else if (res.alpha[i] >= c - 1e-12) CHECK(margin <= 1 + tol);
      else CHECK(std::abs(margin - 1) <= tol);
    }
  }
}

TEST_CASE("RBF Gram matrix") {
  Matrix x(2, 2);
  x << 0, 0, 1, 2;
  const auto k = rbf_gram(x, 0.5);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-2.5)));
  CHECK(k(1, 0) == k(0, 1));
}

TEST_CASE("SVM decision values and votes match a direct evaluation") {
  Rng rng(9);
  const auto set = blobs(rng, 4, 15, 3, 1.2);
  const auto model = svm_train_fixed(set, 4.0, 0.3);
  CHECK(model.machines.size() == 6);
  Matrix probe(30, 3);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.normal(1.0, 3.0);
  const auto labels = svm_predict(model, probe);
  for (Eigen::Index r = 0; r < probe.rows(); ++r) {
    std::vector<double> votes(4, 0.0);
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
      const auto& mc = model.machines[m];
      CHECK(mc.positive < mc.negative);
      double s = -mc.rho;
      for (std::size_t t = 0; t < mc.index.size(); ++t)
        s += mc.coef[t] * rbf(model.support, mc.index[t], probe, r, model.gamma);
      const std::span<const double> row(probe.data() + r * 3, 3);
      CHECK(svm_decision(model, m, row) == doctest::Approx(s).epsilon(1e-12));
      votes[static_cast<std::size_t>((s >= 0 ? mc.positive : mc.negative) - 1)] += 1;
    }
    CHECK(labels[static_cast<std::size_t>(r)] == static_cast<std::int32_t>(argmax_first(votes)) + 1);
  }
}

TEST_CASE("SVM memorizes distinct points with a large C") {
  Rng rng(2);
  const auto set = xor_set(rng, 60);
  const auto model = svm_train_fixed(set, 1e4, 8.0);
  CHECK(model.converged());
  CHECK(svm_predict(model, set.x) == set.y);
}

TEST_CASE("SVM grid search separates blobs and XOR") {
  Rng rng(3);
  const auto set = blobs(rng, 3, 20, 4, 0.8);
  SvmParams p;
  const auto model = svm_train(set, p, 17);
  CHECK(model.cv_accuracy >= 0.9);
  const auto test = blobs(rng, 3, 30, 4, 0.8);
  CHECK(accuracy(svm_predict(model, test.x), test.y) >= 0.9);

  const auto xs = xor_set(rng, 120);
  const auto xm = svm_train(xs, p, 17);
  const auto xt = xor_set(rng, 300);
  CHECK(accuracy(svm_predict(xm, xt.x), xt.y) >= 0.85);
  // Same seed, same model.
  const auto again = svm_train(xs, p, 17);
  CHECK(again.c == xm.c);
  CHECK(again.gamma == xm.gamma);
  CHECK(svm_predict(again, xt.x) == svm_predict(xm, xt.x));
}

TEST_CASE("a single grid point skips cross-validation") {
  Rng rng(3);
  const auto set = blobs(rng, 2, 10, 2, 0.5);
  SvmParams p;
  p.c_grid = {2.0};
  p.gamma_grid = {0.5};
  const auto model = svm_train(set, p, 1);
  CHECK(model.c == 2.0);
  CHECK(model.gamma == 0.5);
}

TEST_CASE("stratified folds balance every class") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Labels y;
    const std::int32_t classes = 2 + static_cast<std::int32_t>(rng.below(5));
    for (std::int32_t k = 1; k <= classes; ++k)
      for (std::size_t i = 0, n = 1 + rng.below(30); i < n; ++i) y.push_back(k);
    const std::size_t folds = 2 + rng.below(5);
    const auto f = stratified_folds(y, folds, rng.next());
    REQUIRE(f.size() == y.size());
    std::vector<std::size_t> total(folds, 0);
    for (std::int32_t k = 1; k <= classes; ++k) {
      std::vector<std::size_t> per(folds, 0);
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == k) ++per[f[i]];
      CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
    }
    for (auto v : f) ++total[v];
    CHECK(*std::max_element(total.begin(), total.end()) - *std::min_element(total.begin(), total.end()) <= 1);
  }
}

TEST_CASE("random forest separates a 1-D threshold and replays its votes") {
  Rng rng(4);
  Matrix x(100, 1);
  Labels y;
  for (Eigen::Index i = 0; i < 100; ++i) {
    x(i, 0) = static_cast<double>(i);
    y.push_back(i < 37 ? 1 : 2);
  }
  const auto set = TrainingSet::make(x, y);
  ForestParams p;
  p.trees = 25;
  const auto model = rf_train(set, p, 8);
  CHECK(rf_predict(model, set.x) == set.y);

  const auto votes = rf_votes(model, set.x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> counts(2, 0.0);
    for (const auto& t : model.trees) {
      const std::span<const double> row(x.data() + r, 1);
      counts[static_cast<std::size_t>(tree_predict(t, row) - 1)] += 1;
    }
    CHECK(votes(r, 0) == counts[0]);
    CHECK(votes(r, 1) == counts[1]);
  }
  for (const auto& t : model.trees)
    for (std::size_t n = 0; n < t.nodes.size(); ++n) {
      const auto& node = t.nodes[n];
      if (node.feature < 0) continue;
      CHECK(node.left > n);
      CHECK(node.right > n);
      CHECK(node.left < t.nodes.size());
    }
}

TEST_CASE("random forest is deterministic per seed") {
  Rng rng(10);
  const auto set = blobs(rng, 3, 20, 5, 1.5);
  ForestParams p;
  p.trees = 20;
  const auto a = rf_train(set, p, 99), b = rf_train(set, p, 99), c = rf_train(set, p, 100);
  CHECK(serialize_model(a) == serialize_model(b));
  CHECK(serialize_model(a) != serialize_model(c));
  const auto test = blobs(rng, 3, 40, 5, 1.5);
  CHECK(accuracy(rf_predict(a, test.x), test.y) >= 0.85);
}

TEST_CASE("a forest on constant features predicts the majority") {
  Matrix x = Matrix::Constant(9, 2, 1.0);
  const auto set = TrainingSet::make(x, {1, 2, 2, 2, 2, 1, 2, 2, 2});
  ForestParams p;
  p.trees = 5;
  const auto model = rf_train(set, p, 1);
  for (const auto& t : model.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("k-means assignments are nearest-center and centers are member means") {
  Rng rng(12);
  const auto set = blobs(rng, 3, 30, 2, 0.5);
  const auto km = kmeans(set.x, 3, 5);
  for (Eigen::Index i = 0; i < set.x.rows(); ++i) {
    Eigen::Index best = 0;
    (km.centers.rowwise() - set.x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    CHECK(km.assignment[static_cast<std::size_t>(i)] == static_cast<std::size_t>(best));
  }
  for (Eigen::Index c = 0; c < 3; ++c) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(2);
    int n = 0;
    for (Eigen::Index i = 0; i < set.x.rows(); ++i)
      if (km.assignment[static_cast<std::size_t>(i)] == static_cast<std::size_t>(c)) {
        s += set.x.row(i);
        ++n;
      }
    REQUIRE(n > 0);
    CHECK((s / n - km.centers.row(c)).norm() <= 1e-6);
  }
}

TEST_CASE("RBF network output weights solve the regularized normal equations") {
  Rng rng(13);
  const auto set = blobs(rng, 3, 25, 3, 1.0);
  RbfnnParams p;
  const auto model = rbfnn_train(set, p, 3);
  CHECK(model.centers.rows() == 15);
  for (double w : model.widths) CHECK(w > 0.0);
  const auto a = rbfnn_activations(model, set.x);
  CHECK(a.cols() == 16);
  CHECK(a.col(15).isOnes());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(a.rows(), 3);
  for (std::size_t i = 0; i < set.size(); ++i) t(static_cast<Eigen::Index>(i), set.y[i] - 1) = 1;
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += p.ridge;
  const Eigen::MatrixXd resid = normal * model.weights - a.transpose() * t;
  CHECK(resid.norm() <= 1e-6 * (a.transpose() * t).norm());
  for (Eigen::Index c = 0; c < model.centers.rows(); ++c)
    for (Eigen::Index j = 0; j < a.rows(); j += 7) {
      const double d2 = (set.x.row(j) - model.centers.row(c)).squaredNorm();
      const double w = model.widths[static_cast<std::size_t>(c)];
      CHECK(a(j, c) == doctest::Approx(std::exp(-d2 / (2 * w * w))).epsilon(1e-12));
    }
  const auto test = blobs(rng, 3, 40, 3, 1.0);
  CHECK(accuracy(rbfnn_predict(model, test.x), test.y) >= 0.85);
}

TEST_CASE("predictions do not depend on the order of training samples for SVM") {
  Rng rng(14);
  const auto set = blobs(rng, 3, 12, 2, 1.0);
  std::vector<std::size_t> perm(set.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Matrix px(set.x.rows(), set.x.cols());
  Labels py;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    px.row(static_cast<Eigen::Index>(i)) = set.x.row(static_cast<Eigen::Index>(perm[i]));
    py.push_back(set.y[perm[i]]);
  }
  const auto shuffled = TrainingSet::make(px, py);
  const auto a = svm_train_fixed(set, 2.0, 0.5, SvmParams{{}, {}, 5, 1e-8, 10'000'000});
  const auto b = svm_train_fixed(shuffled, 2.0, 0.5, SvmParams{{}, {}, 5, 1e-8, 10'000'000});
  Matrix probe(200, 2);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.uniform(-3, 9);
  for (std::size_t m = 0; m < a.machines.size(); ++m)
    for (Eigen::Index r = 0; r < probe.rows(); r += 13) {
      const std::span<const double> row(probe.data() + r * 2, 2);
      CHECK(svm_decision(a, m, row) == doctest::Approx(svm_decision(b, m, row)).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("classifier names and dispatch") {
  CHECK(parse_classifier("svm") == ClassifierKind::svm);
  CHECK(parse_classifier("rf") == ClassifierKind::rf);
  CHECK(classifier_name(ClassifierKind::rbfnn) == "rbfnn");
  CHECK_THROWS_AS(parse_classifier("knn"), UsageError);
}

TEST_CASE("model containers round-trip and reject corruption") {
  Rng rng(15);
  const auto set = blobs(rng, 3, 10, 3, 1.0);
  ClassifierParams params;
  params.svm.c_grid = {1.0};
  params.svm.gamma_grid = {0.25};
  params.rf.trees = 7;
  Matrix probe(20, 3);
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.normal(1, 2);
  for (auto kind : {ClassifierKind::svm, ClassifierKind::rf, ClassifierKind::rbfnn}) {
    const auto model = train_classifier(kind, set, params, 5);
    CHECK(model_kind(model) == kind);
    CHECK(model_dims(model) == 3);
    const auto bytes = serialize_model(model);
    REQUIRE(bytes.size() > 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "HSFM");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == static_cast<std::uint8_t>(kind));
    const auto back = deserialize_model(bytes);
    CHECK(serialize_model(back) == bytes);
    CHECK(predict(back, probe) == predict(model, probe));

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(deserialize_model(truncated), DataError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bad_magic), DataError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(deserialize_model(bad_version), DataError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize_model(trailing), DataError);
  }
  const auto model = train_classifier(ClassifierKind::rf, set, params, 5);
  const auto path = std::filesystem::temp_directory_path() / "hsfuse_model.bin";
  save_model(model, path);
  CHECK(serialize_model(load_model(path)) == serialize_model(model));
  CHECK_THROWS_AS(predict(model, Matrix::Zero(2, 4)), DataError);
}
