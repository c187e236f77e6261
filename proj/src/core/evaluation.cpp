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

#include "hsfuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "hsfuse/error.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* measure_name(Measure m) {
  switch (m) {
    case Measure::oa: return "OA";
    case Measure::aa: return "AA";
    case Measure::kappa: return "Kappa";
    case Measure::train_seconds: return "Train(s)";
    case Measure::test_seconds: return "Test(s)";
  }
  return "?";
}

std::string cell(const EvalReport& r, std::size_t col, Measure m) {
  const auto s = r.summary(col, m);
  const bool percent = m == Measure::oa || m == Measure::aa;
  const double scale = percent ? 100.0 : 1.0;
  const int digits = percent ? 2 : (m == Measure::kappa ? 4 : 3);
  return fixed(s.mean * scale, digits) + "±" + fixed(s.std * scale, digits);
}

std::vector<Measure> rows(bool timing) {
  std::vector<Measure> m{Measure::oa, Measure::aa, Measure::kappa};
  if (timing) {
    m.push_back(Measure::train_seconds);
    m.push_back(Measure::test_seconds);
  }
  return m;
}

}  // namespace

std::size_t train_count(std::size_t pool, double fraction, std::size_t min_per_class) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw UsageError("training fraction must lie in [0, 1]");
  const auto rounded = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool) + 0.5));
  return std::max(rounded, min_per_class);
}

ReferenceSplit split_reference(const ClassMap& map, double fraction, std::size_t min_per_class,
                               std::uint64_t seed) {
  std::map<std::int32_t, std::vector<std::uint32_t>> pools;
  for (std::size_t i = 0; i < map.labels.size(); ++i)
    if (map.labels[i] > 0) pools[map.labels[i]].push_back(static_cast<std::uint32_t>(i));
  if (pools.empty()) throw DataError("reference map has no labeled pixels");
  ReferenceSplit split;
  const auto kmax = static_cast<std::size_t>(pools.rbegin()->first);
  split.train_per_class.assign(kmax, 0);
  split.test_per_class.assign(kmax, 0);
  for (auto& [k, pool] : pools) {
    if (pool.size() <= min_per_class)
      throw DataError("class " + std::to_string(k) + " has " + std::to_string(pool.size()) +
                      " labeled pixels, needs more than " + std::to_string(min_per_class));
    const std::size_t n = std::min(train_count(pool.size(), fraction, min_per_class), pool.size());
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(k)));
    rng.partial_shuffle(pool, n);
    split.train.insert(split.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    split.test.insert(split.test.end(), pool.begin() + static_cast<std::ptrdiff_t>(n), pool.end());
    split.train_per_class[static_cast<std::size_t>(k - 1)] = n;
    split.test_per_class[static_cast<std::size_t>(k - 1)] = pool.size() - n;
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(std::span<const std::int32_t> truth, std::span<const std::int32_t> predicted,
                          std::int32_t classes) {
  if (truth.size() != predicted.size()) throw DataError("reference and prediction lengths differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > classes || predicted[i] < 1 || predicted[i] > classes)
      throw DataError("class id out of range at sample " + std::to_string(i));
    ++cm.at(truth[i], predicted[i]);
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n <= 0) throw DataError("confusion matrix is empty");
  __int128 trace = 0, chance = 0;
  double recall_sum = 0.0;
  int recall_count = 0;
  for (std::int32_t i = 1; i <= cm.classes; ++i) {
    std::int64_t row = 0, col = 0;
    for (std::int32_t j = 1; j <= cm.classes; ++j) {
      row += cm.at(i, j);
      col += cm.at(j, i);
    }
    trace += cm.at(i, i);
    chance += static_cast<__int128>(row) * col;
    if (row > 0) {
      recall_sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(row);
      ++recall_count;
    }
  }
  Metrics m;
  m.oa = static_cast<double>(trace) / static_cast<double>(n);
  m.aa = recall_sum / recall_count;
  const __int128 nn = static_cast<__int128>(n) * n;
  if (chance == nn) {
    m.kappa_degenerate = true;
    m.kappa = trace == n ? 1.0 : 0.0;
  } else {
    // (p_o - p_e) / (1 - p_e) scaled by n^2 to stay exact until the division.
    const __int128 num = static_cast<__int128>(n) * trace - chance;
    m.kappa = static_cast<double>(static_cast<long double>(num) / static_cast<long double>(nn - chance));
  }
  return m;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Summary EvalReport::summary(std::size_t column, Measure m) const {
  std::vector<double> v;
  for (const auto& r : columns.at(column).runs) {
    switch (m) {
      case Measure::oa: v.push_back(r.metrics.oa); break;
      case Measure::aa: v.push_back(r.metrics.aa); break;
      case Measure::kappa: v.push_back(r.metrics.kappa); break;
      case Measure::train_seconds: v.push_back(r.train_seconds); break;
      case Measure::test_seconds: v.push_back(r.test_seconds); break;
    }
  }
  return summarize(v);
}

std::string report_tsv(const EvalReport& report, bool timing) {
  std::string out = "metric";
  for (const auto& c : report.columns) out += "\t" + c.classifier;
  out += "\n";
  for (auto m : rows(timing)) {
    out += measure_name(m);
    for (std::size_t c = 0; c < report.columns.size(); ++c) out += "\t" + cell(report, c, m);
    out += "\n";
  }
  return out;
}

std::string report_text(const EvalReport& report, bool timing) {
  std::vector<std::vector<std::string>> table;
  table.push_back({"metric"});
  for (const auto& c : report.columns) table[0].push_back(c.classifier);
  for (auto m : rows(timing)) {
    std::vector<std::string> line{measure_name(m)};
    for (std::size_t c = 0; c < report.columns.size(); ++c) line.push_back(cell(report, c, m));
    table.push_back(std::move(line));
  }
  // Display width: the +- sign is two bytes in UTF-8.
  auto width = [](const std::string& s) {
    return s.size() - static_cast<std::size_t>(std::count(s.begin(), s.end(), '\xc2'));
  };
  std::vector<std::size_t> w(table[0].size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], width(line[i]));
  std::string out;
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out += "  ";
      const std::size_t pad = w[i] - width(line[i]);
      if (i == 0) out += line[i] + std::string(pad, ' ');
      else out += std::string(pad, ' ') + line[i];
    }
    out += "\n";
  }
  return out;
}

std::string runs_tsv(const EvalReport& report) {
  std::string out = "classifier\trun\tseed\toa\taa\tkappa\n";
  for (const auto& c : report.columns)
    for (std::size_t r = 0; r < c.runs.size(); ++r) {
      const auto& run = c.runs[r];
      out += c.classifier + "\t" + std::to_string(r) + "\t" + std::to_string(run.seed) + "\t" +
             format_real(run.metrics.oa) + "\t" + format_real(run.metrics.aa) + "\t" +
             format_real(run.metrics.kappa) + "\n";
    }
  return out;
}

}  // namespace hsf
