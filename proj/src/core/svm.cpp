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
#include <numeric>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/rng.hpp"

namespace hsf {

namespace {

constexpr double kTau = 1e-12;

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

std::vector<double> power_grid(int lo, int hi, int step) {
  std::vector<double> g;
  for (int e = lo; e <= hi; e += step) g.push_back(std::ldexp(1.0, e));
  return g;
}

// A trained pair expressed in training-set indices.
struct PairFit {
  std::int32_t positive = 0;
  std::int32_t negative = 0;
  std::vector<std::size_t> index;
  std::vector<double> coef;
  double rho = 0.0;
  std::uint64_t iterations = 0;
  bool converged = true;
};

std::vector<std::int32_t> present_classes(const Labels& y, std::span<const std::size_t> rows) {
  std::vector<std::int32_t> cls;
  for (auto r : rows) cls.push_back(y[r]);
  std::sort(cls.begin(), cls.end());
  cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
  return cls;
}

PairFit fit_pair(const Matrix& gram, const Labels& y, std::span<const std::size_t> rows,
                 std::int32_t a, std::int32_t b, double c, const SvmParams& params) {
  std::vector<std::size_t> sub;
  std::vector<int> sign;
  for (auto r : rows) {
    if (y[r] == a) {
      sub.push_back(r);
      sign.push_back(1);
    } else if (y[r] == b) {
      sub.push_back(r);
      sign.push_back(-1);
    }
  }
  const auto res = smo_solve(gram, sub, sign, c, params.tolerance, params.max_iterations);
  PairFit fit;
  fit.positive = a;
  fit.negative = b;
  fit.rho = res.rho;
  fit.iterations = res.iterations;
  fit.converged = res.converged;
  for (std::size_t t = 0; t < sub.size(); ++t) {
    if (res.alpha[t] > 0.0) {
      fit.index.push_back(sub[t]);
      fit.coef.push_back(res.alpha[t] * sign[t]);
    }
  }
  return fit;
}

std::vector<PairFit> fit_all_pairs(const Matrix& gram, const Labels& y,
                                   std::span<const std::size_t> rows, double c,
                                   const SvmParams& params, bool parallel) {
  const auto cls = present_classes(y, rows);
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (std::size_t i = 0; i < cls.size(); ++i)
    for (std::size_t j = i + 1; j < cls.size(); ++j) pairs.emplace_back(cls[i], cls[j]);
  std::vector<PairFit> fits(pairs.size());
  auto body = [&](std::size_t p) {
    fits[p] = fit_pair(gram, y, rows, pairs[p].first, pairs[p].second, c, params);
  };
  if (parallel) {
    parallel_for(pairs.size(), body);
  } else {
    for (std::size_t p = 0; p < pairs.size(); ++p) body(p);
  }
  return fits;
}

std::int32_t vote(std::span<const std::int32_t> winners, std::int32_t classes) {
  std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
  for (auto w : winners) counts[static_cast<std::size_t>(w - 1)] += 1.0;
  return static_cast<std::int32_t>(argmax_first(counts)) + 1;
}

// Held-out accuracy using training-set kernel entries.
double fold_accuracy(const Matrix& gram, const Labels& y, std::int32_t classes,
                     const std::vector<PairFit>& fits, std::span<const std::size_t> test) {
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  std::vector<std::int32_t> winners(fits.size());
  for (auto r : test) {
    for (std::size_t p = 0; p < fits.size(); ++p) {
      const auto& f = fits[p];
      double s = -f.rho;
      for (std::size_t t = 0; t < f.index.size(); ++t) s += f.coef[t] * gram(r, f.index[t]);
      winners[p] = s >= 0.0 ? f.positive : f.negative;
    }
    if (vote(winners, classes) == y[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

SvmModel assemble(const TrainingSet& set, double c, double gamma, std::vector<PairFit> fits) {
  SvmModel model;
  model.c = c;
  model.gamma = gamma;
  model.classes = set.classes;
  std::vector<std::size_t> used;
  for (const auto& f : fits) used.insert(used.end(), f.index.begin(), f.index.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  model.support.resize(static_cast<Eigen::Index>(used.size()), set.x.cols());
  for (std::size_t i = 0; i < used.size(); ++i)
    model.support.row(static_cast<Eigen::Index>(i)) = set.x.row(static_cast<Eigen::Index>(used[i]));
  for (auto& f : fits) {
    SvmMachine m;
    m.positive = f.positive;
    m.negative = f.negative;
    m.rho = f.rho;
    m.iterations = f.iterations;
    m.converged = f.converged;
    m.coef = std::move(f.coef);
    for (auto r : f.index) {
      const auto it = std::lower_bound(used.begin(), used.end(), r);
      m.index.push_back(static_cast<std::uint32_t>(it - used.begin()));
    }
    model.machines.push_back(std::move(m));
  }
  return model;
}

void check_set(const TrainingSet& set) {
  if (set.classes < 2) throw UsageError("svm needs at least two classes");
}

}  // namespace

std::vector<double> SvmParams::default_c_grid() { return power_grid(-2, 10, 2); }
std::vector<double> SvmParams::default_gamma_grid() { return power_grid(-10, 2, 2); }

bool SvmModel::converged() const {
  return std::all_of(machines.begin(), machines.end(), [](const SvmMachine& m) { return m.converged; });
}

BinarySmoResult smo_solve(const Matrix& kernel, std::span<const std::size_t> rows,
                          std::span<const int> sign, double c, double tolerance,
                          std::uint64_t max_iterations) {
  const std::size_t n = rows.size();
  if (!(c > 0.0)) throw UsageError("svm box constraint must be positive");
  BinarySmoResult res;
  auto& alpha = res.alpha;
  alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) {
    return sign[i] * sign[j] * kernel(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(rows[j]));
  };
  auto in_up = [&](std::size_t t) { return sign[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return sign[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -sign[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin <= tolerance) break;
    if (res.iterations >= max_iterations) {
      res.converged = false;
      break;
    }
    ++res.iterations;

    const double old_i = alpha[i], old_j = alpha[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    if (sign[i] != sign[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = sign[t] * grad[t];
    if (alpha[t] >= c) {
      if (sign[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (sign[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  res.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;
  return res;
}

Matrix rbf_gram(const Matrix& x, double gamma) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  Matrix g(x.rows(), x.rows());
  parallel_for(n, [&](std::size_t i) {
    const double* xi = x.data() + i * d;
    g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double v = std::exp(-gamma * squared_distance(xi, x.data() + j * d, d));
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  });
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = i + 1; j < g.cols(); ++j) g(i, j) = g(j, i);
  return g;
}

std::vector<std::size_t> stratified_folds(const Labels& y, std::size_t folds, std::uint64_t seed) {
  if (folds == 0) throw UsageError("fold count must be positive");
  std::vector<std::size_t> fold(y.size(), 0);
  if (y.empty()) return fold;
  const std::int32_t kmax = *std::max_element(y.begin(), y.end());
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::int32_t k = 1; k <= kmax; ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == k) idx.push_back(i);
    rng.shuffle(idx);
    for (std::size_t t = 0; t < idx.size(); ++t) fold[idx[t]] = (offset + t) % folds;
    offset += idx.size();
  }
  return fold;
}

SvmModel svm_train_fixed(const TrainingSet& set, double c, double gamma, const SvmParams& params) {
  check_set(set);
  if (!(gamma > 0.0)) throw UsageError("svm gamma must be positive");
  const Matrix gram = rbf_gram(set.x, gamma);
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return assemble(set, c, gamma, fit_all_pairs(gram, set.y, all, c, params, true));
}

SvmModel svm_train(const TrainingSet& set, const SvmParams& params, std::uint64_t seed) {
  check_set(set);
  auto cs = params.c_grid.empty() ? SvmParams::default_c_grid() : params.c_grid;
  auto gs = params.gamma_grid.empty() ? SvmParams::default_gamma_grid() : params.gamma_grid;
  std::sort(cs.begin(), cs.end());
  std::sort(gs.begin(), gs.end());
  for (double v : cs)
    if (!(v > 0.0)) throw UsageError("svm C grid values must be positive");
  for (double v : gs)
    if (!(v > 0.0)) throw UsageError("svm gamma grid values must be positive");
  if (cs.size() == 1 && gs.size() == 1) return svm_train_fixed(set, cs[0], gs[0], params);

  const std::size_t k = params.folds;
  if (k < 2) throw UsageError("svm cross-validation needs at least two folds");
  if (set.size() < k) throw DataError("svm cross-validation needs at least as many samples as folds");
  const auto fold = stratified_folds(set.y, k, derive_seed(seed, "svm.cv"));
  std::vector<std::vector<std::size_t>> train(k), test(k);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t f = 0; f < k; ++f) (fold[i] == f ? test[f] : train[f]).push_back(i);

  // score[ci][gi]
  std::vector<std::vector<double>> score(cs.size(), std::vector<double>(gs.size(), 0.0));
  for (std::size_t gi = 0; gi < gs.size(); ++gi) {
    const Matrix gram = rbf_gram(set.x, gs[gi]);
    std::vector<double> acc(cs.size() * k, 0.0);
    parallel_for(acc.size(), [&](std::size_t task) {
      const std::size_t ci = task / k, f = task % k;
      const auto fits = fit_all_pairs(gram, set.y, train[f], cs[ci], params, false);
      acc[task] = fold_accuracy(gram, set.y, set.classes, fits, test[f]);
    });
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
      double s = 0.0;
      for (std::size_t f = 0; f < k; ++f) s += acc[ci * k + f];
      score[ci][gi] = s / static_cast<double>(k);
    }
  }
  std::size_t bc = 0, bg = 0;
  for (std::size_t ci = 0; ci < cs.size(); ++ci)
    for (std::size_t gi = 0; gi < gs.size(); ++gi)
      if (score[ci][gi] > score[bc][bg]) {
        bc = ci;
        bg = gi;
      }
  auto model = svm_train_fixed(set, cs[bc], gs[bg], params);
  model.cv_accuracy = score[bc][bg];
  return model;
}

double svm_decision(const SvmModel& model, std::size_t machine, std::span<const double> x) {
  const auto& m = model.machines.at(machine);
  const std::size_t d = model.dims();
  double s = -m.rho;
  for (std::size_t t = 0; t < m.index.size(); ++t)
    s += m.coef[t] * std::exp(-model.gamma * squared_distance(model.support.data() + m.index[t] * d, x.data(), d));
  return s;
}

Labels svm_predict(const SvmModel& model, const Matrix& x) {
  const std::size_t d = model.dims();
  if (static_cast<std::size_t>(x.cols()) != d)
    throw DataError("svm model expects " + std::to_string(d) + " features, got " + std::to_string(x.cols()));
  const auto n = static_cast<std::size_t>(x.rows());
  const auto nsv = static_cast<std::size_t>(model.support.rows());
  Labels out(n, 0);
  parallel_for(n, [&](std::size_t r) {
    std::vector<double> k(nsv);
    const double* xr = x.data() + r * d;
    for (std::size_t s = 0; s < nsv; ++s)
      k[s] = std::exp(-model.gamma * squared_distance(model.support.data() + s * d, xr, d));
    std::vector<std::int32_t> winners(model.machines.size());
    for (std::size_t p = 0; p < model.machines.size(); ++p) {
      const auto& m = model.machines[p];
      double s = -m.rho;
      for (std::size_t t = 0; t < m.index.size(); ++t) s += m.coef[t] * k[m.index[t]];
      winners[p] = s >= 0.0 ? m.positive : m.negative;
    }
    out[r] = vote(winners, model.classes);
  });
  return out;
}

}  // namespace hsf
