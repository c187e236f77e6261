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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hsfuse/kpca.hpp"

namespace hsf {

using Labels = std::vector<std::int32_t>;

/// Feature rows with class ids in 1..classes. Every class must occur.
struct TrainingSet {
  Matrix x;
  Labels y;
  std::int32_t classes = 0;

  /// Validates labels and finiteness; `classes` defaults to the largest id.
  static TrainingSet make(Matrix x, Labels y, std::int32_t classes = 0);
  std::vector<std::size_t> counts() const;
  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(x.cols()); }
};

/// Index of the largest count; ties go to the lowest index.
std::size_t argmax_first(std::span<const double> scores);

// ---------------------------------------------------------------- SVM

struct SvmParams {
  std::vector<double> c_grid;      // empty: 2^-2 .. 2^10 step x4
  std::vector<double> gamma_grid;  // empty: 2^-10 .. 2^2 step x4
  std::size_t folds = 5;
  double tolerance = 1e-3;
  std::uint64_t max_iterations = 1'000'000;

  static std::vector<double> default_c_grid();
  static std::vector<double> default_gamma_grid();
};

/// Binary machine for the pair (positive, negative); positive < negative.
/// Decision: sum coef_i k(support[index_i], x) - rho; positive votes for
/// `positive`.
struct SvmMachine {
  std::int32_t positive = 0;
  std::int32_t negative = 0;
  std::vector<std::uint32_t> index;  // rows of SvmModel::support
  std::vector<double> coef;          // alpha_i * y_i
  double rho = 0.0;
  std::uint64_t iterations = 0;
  bool converged = true;
};

struct SvmModel {
  double c = 1.0;
  double gamma = 1.0;
  std::int32_t classes = 0;
  double cv_accuracy = 0.0;
  Matrix support;  // union of the machines' support vectors
  std::vector<SvmMachine> machines;

  std::size_t dims() const { return static_cast<std::size_t>(support.cols()); }
  bool converged() const;
};

struct BinarySmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  std::uint64_t iterations = 0;
  bool converged = true;
};

/// SMO on a precomputed kernel matrix (rows/cols indexed by `rows`),
/// labels +1/-1. Working set: maximal violating pair.
BinarySmoResult smo_solve(const Matrix& kernel, std::span<const std::size_t> rows,
                          std::span<const int> sign, double c, double tolerance,
                          std::uint64_t max_iterations);

/// RBF Gram matrix exp(-gamma ||xi - xj||^2).
Matrix rbf_gram(const Matrix& x, double gamma);

SvmModel svm_train_fixed(const TrainingSet& set, double c, double gamma,
                         const SvmParams& params = {});
/// Grid search by stratified k-fold accuracy (ties: smallest C, then
/// smallest gamma), then a full fit.
SvmModel svm_train(const TrainingSet& set, const SvmParams& params, std::uint64_t seed);
double svm_decision(const SvmModel& model, std::size_t machine, std::span<const double> x);
Labels svm_predict(const SvmModel& model, const Matrix& x);

/// Fold index per sample: each class is shuffled and dealt round-robin,
/// continuing the deal across classes.
std::vector<std::size_t> stratified_folds(const Labels& y, std::size_t folds, std::uint64_t seed);

// ------------------------------------------------------- random forest

struct ForestParams {
  std::size_t trees = 200;
  std::size_t mtry = 0;  // 0: ceil(sqrt(d))
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::int32_t label = 0;     // leaf majority
};

struct DecisionTree {
  std::uint64_t seed = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
  std::int32_t classes = 0;
  std::size_t dims = 0;
  std::vector<DecisionTree> trees;
};

ForestModel rf_train(const TrainingSet& set, const ForestParams& params, std::uint64_t seed);
std::int32_t tree_predict(const DecisionTree& tree, std::span<const double> x);
/// Per-row vote counts, classes columns (class id k in column k-1).
Eigen::MatrixXi rf_votes(const ForestModel& model, const Matrix& x);
Labels rf_predict(const ForestModel& model, const Matrix& x);

// ---------------------------------------------------------------- RBFNN

struct RbfnnParams {
  std::size_t centers_per_class = 5;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  double ridge = 1e-8;
};

struct RbfnnModel {
  std::int32_t classes = 0;
  Matrix centers;               // c x d
  std::vector<double> widths;   // c
  std::vector<std::int32_t> center_class;
  Eigen::MatrixXd weights;      // (c + 1) x classes, bias row last
};

struct KMeansResult {
  Matrix centers;
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations.
KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100, double tolerance = 1e-6);

/// Hidden layer: one Gaussian column per center plus a trailing bias column.
Eigen::MatrixXd rbfnn_activations(const RbfnnModel& model, const Matrix& x);
RbfnnModel rbfnn_train(const TrainingSet& set, const RbfnnParams& params, std::uint64_t seed);
Labels rbfnn_predict(const RbfnnModel& model, const Matrix& x);

// ------------------------------------------------------------ dispatch

enum class ClassifierKind : std::uint32_t { svm = 1, rf = 2, rbfnn = 3 };

ClassifierKind parse_classifier(std::string_view name);
std::string_view classifier_name(ClassifierKind kind);

struct ClassifierParams {
  SvmParams svm;
  ForestParams rf;
  RbfnnParams rbfnn;
};

using ClassifierModel = std::variant<SvmModel, ForestModel, RbfnnModel>;

ClassifierKind model_kind(const ClassifierModel& model);
std::size_t model_dims(const ClassifierModel& model);
ClassifierModel train_classifier(ClassifierKind kind, const TrainingSet& set,
                                 const ClassifierParams& params, std::uint64_t seed);
Labels predict(const ClassifierModel& model, const Matrix& x);

/// Container: "HSFM", u32 version, u32 classifier tag, little-endian payload.
std::vector<std::uint8_t> serialize_model(const ClassifierModel& model);
ClassifierModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace hsf
