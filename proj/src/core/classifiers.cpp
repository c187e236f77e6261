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

#include <cmath>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"

namespace hsf {

TrainingSet TrainingSet::make(Matrix x, Labels y, std::int32_t classes) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DataError("training set has " + std::to_string(x.rows()) + " rows but " +
                    std::to_string(y.size()) + " labels");
  if (y.empty()) throw DataError("training set is empty");
  if (x.cols() == 0) throw DataError("training set has no features");
  if (!x.allFinite()) throw DataError("training set contains non-finite features");
  std::int32_t kmax = 0;
  for (auto v : y) {
    if (v < 1) throw DataError("class ids must be >= 1, got " + std::to_string(v));
    kmax = std::max(kmax, v);
  }
  if (classes == 0) classes = kmax;
  if (kmax > classes) throw DataError("class id " + std::to_string(kmax) + " exceeds class count");
  TrainingSet set{std::move(x), std::move(y), classes};
  const auto c = set.counts();
  for (std::size_t k = 0; k < c.size(); ++k)
    if (c[k] == 0) throw DataError("class " + std::to_string(k + 1) + " has no training samples");
  return set;
}

std::vector<std::size_t> TrainingSet::counts() const {
  std::vector<std::size_t> c(static_cast<std::size_t>(classes), 0);
  for (auto v : y) ++c[static_cast<std::size_t>(v - 1)];
  return c;
}

std::size_t argmax_first(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

ClassifierKind parse_classifier(std::string_view name) {
  if (name == "svm") return ClassifierKind::svm;
  if (name == "rf") return ClassifierKind::rf;
  if (name == "rbfnn") return ClassifierKind::rbfnn;
  throw UsageError("unknown classifier '" + std::string(name) + "' (expected svm, rf or rbfnn)");
}

std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::rf: return "rf";
    case ClassifierKind::rbfnn: return "rbfnn";
  }
  return "unknown";
}

ClassifierKind model_kind(const ClassifierModel& model) {
  return static_cast<ClassifierKind>(model.index() + 1);
}

std::size_t model_dims(const ClassifierModel& model) {
  struct {
    std::size_t operator()(const SvmModel& m) const { return m.dims(); }
    std::size_t operator()(const ForestModel& m) const { return m.dims; }
    std::size_t operator()(const RbfnnModel& m) const { return static_cast<std::size_t>(m.centers.cols()); }
  } visitor;
  return std::visit(visitor, model);
}

ClassifierModel train_classifier(ClassifierKind kind, const TrainingSet& set,
                                 const ClassifierParams& params, std::uint64_t seed) {
  switch (kind) {
    case ClassifierKind::svm: return svm_train(set, params.svm, seed);
    case ClassifierKind::rf: return rf_train(set, params.rf, seed);
    case ClassifierKind::rbfnn: return rbfnn_train(set, params.rbfnn, seed);
  }
  throw UsageError("unknown classifier kind");
}

Labels predict(const ClassifierModel& model, const Matrix& x) {
  struct {
    const Matrix& x;
    Labels operator()(const SvmModel& m) const { return svm_predict(m, x); }
    Labels operator()(const ForestModel& m) const { return rf_predict(m, x); }
    Labels operator()(const RbfnnModel& m) const { return rbfnn_predict(m, x); }
  } visitor{x};
  return std::visit(visitor, model);
}

}  // namespace hsf
