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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsfuse/raster.hpp"

namespace hsf {

/// max(round_half_up(fraction * pool), min_per_class)
std::size_t train_count(std::size_t pool, double fraction, std::size_t min_per_class);

/// Pixel indices (row-major) of labeled pixels, ascending.
struct ReferenceSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> test;
  std::vector<std::size_t> train_per_class;  // index k-1 for class k
  std::vector<std::size_t> test_per_class;
};

/// Per class (labels > 0), draws train_count(...) pixels uniformly without
/// replacement; the rest become test pixels.
ReferenceSplit split_reference(const ClassMap& map, double fraction, std::size_t min_per_class,
                               std::uint64_t seed);

/// Rows are reference classes, columns predictions; class k sits at k-1.
struct ConfusionMatrix {
  std::int32_t classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(std::int32_t k = 0)
      : classes(k), counts(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0) {}
  std::int64_t& at(std::int32_t truth, std::int32_t pred) {
    return counts[static_cast<std::size_t>((truth - 1) * classes + (pred - 1))];
  }
  std::int64_t at(std::int32_t truth, std::int32_t pred) const {
    return counts[static_cast<std::size_t>((truth - 1) * classes + (pred - 1))];
  }
  std::int64_t total() const;
};

ConfusionMatrix confusion(std::span<const std::int32_t> truth, std::span<const std::int32_t> predicted,
                          std::int32_t classes);

struct Metrics {
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;  // chance agreement was 1
};

Metrics metrics(const ConfusionMatrix& cm);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

Summary summarize(std::span<const double> values);

struct RunResult {
  ConfusionMatrix confusion;
  Metrics metrics;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct ClassifierRuns {
  std::string classifier;
  std::vector<RunResult> runs;
};

enum class Measure { oa, aa, kappa, train_seconds, test_seconds };

struct EvalReport {
  std::vector<ClassifierRuns> columns;

  Summary summary(std::size_t column, Measure m) const;
};

/// Metric rows x classifier columns, cells "mean±std" (OA and AA in
/// percent). Timing rows are emitted only when asked for, since they are
/// the only non-reproducible part of a report.
std::string report_tsv(const EvalReport& report, bool timing);
std::string report_text(const EvalReport& report, bool timing);
/// One line per (classifier, run): seed, OA, AA, kappa.
std::string runs_tsv(const EvalReport& report);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace hsf
