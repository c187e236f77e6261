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

#include "hsfuse/kpca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hsfuse/error.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

double estimate_gamma(const Matrix& samples) {
  const auto m = samples.rows();
  if (m < 2) throw DataError("gamma estimation needs at least 2 samples");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) sum += (samples.row(i) - samples.row(j)).norm();
  const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  const double gamma = sum / pairs;
  if (!(gamma > 0.0)) throw NumericError("all samples are identical; the kernel is degenerate");
  if (!std::isfinite(gamma)) throw NumericError("non-finite kernel scale");
  return gamma;
}

SymmetricEigen jacobi_eigen(Eigen::MatrixXd a, double rel_tol, int max_sweeps) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw UsageError("jacobi_eigen needs a square matrix");
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double norm = a.norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  SymmetricEigen out;
  const double target = rel_tol * norm;
  while (norm > 0.0 && off_norm() > target) {
    if (out.sweeps == max_sweeps) throw NumericError("Jacobi eigensolver did not converge");
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p), aqq = a(q, q);
        // Skip rotations that cannot change the diagonal in working precision.
        if (out.sweeps > 3 && std::abs(apq) * 1e18 < std::abs(app) &&
            std::abs(apq) * 1e18 < std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        double* colp = a.col(p).data();
        double* colq = a.col(q).data();
        for (Eigen::Index r = 0; r < n; ++r) {
          const double arp = colp[r], arq = colq[r];
          colp[r] = arp - s * (arq + tau * arp);
          colq[r] = arq + s * (arp - tau * arq);
        }
        colp[p] = app - t * apq;
        colq[q] = aqq + t * apq;
        colp[q] = colq[p] = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          a(p, r) = colp[r];
          a(q, r) = colq[r];
        }

        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Eigen::Index r = 0; r < n; ++r) {
          const double x = vp[r], y = vq[r];
          vp[r] = x - s * (y + tau * x);
          vq[r] = y + s * (x - tau * y);
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Eigen::VectorXd col = v.col(src);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    if (col(big) < 0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

std::size_t select_components(std::span<const double> eigenvalues, double share) {
  if (!(share > 0.0 && share <= 1.0)) throw UsageError("variance share must be in (0, 1]");
  double total = 0.0;
  for (double v : eigenvalues) total += std::max(v, 0.0);
  if (!(total > 0.0)) throw NumericError("kernel matrix has no positive variance");
  double acc = 0.0;
  for (std::size_t q = 0; q < eigenvalues.size(); ++q) {
    acc += std::max(eigenvalues[q], 0.0);
    if (acc / total >= share) return q + 1;
  }
  return eigenvalues.size();
}

double gaussian_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * gamma * gamma));
}

namespace {

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

KernelModel fit_kpca(const Matrix& samples, double gamma, double variance_share,
                     std::size_t max_components) {
  const auto m = samples.rows();
  if (m < 2) throw DataError("KPCA needs at least 2 samples");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("kernel scale must be positive");

  KernelModel model;
  model.samples = samples;
  model.gamma = gamma;

  Eigen::MatrixXd k(m, m);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    for (Eigen::Index j = 0; j < m; ++j) {
      k(i, j) = i == j ? 1.0 : gaussian_kernel(row_span(samples, i), row_span(samples, j), gamma);
    }
  });
  if (!k.allFinite()) throw NumericError("non-finite kernel entries");

  model.row_means = k.colwise().mean().transpose();
  model.total_mean = model.row_means.mean();
  Eigen::MatrixXd centered = k;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      centered(i, j) = k(i, j) - model.row_means(i) - model.row_means(j) + model.total_mean;
  centered = 0.5 * (centered + centered.transpose()).eval();

  auto eig = jacobi_eigen(centered);
  model.eigenvalues = std::move(eig.values);
  model.eigenvectors = std::move(eig.vectors);

  const std::span<const double> ev(model.eigenvalues.data(), static_cast<std::size_t>(m));
  model.kept = select_components(ev, variance_share);
  const double floor = 1e-12 * std::max(model.eigenvalues(0), 0.0);
  while (model.kept > 1 && !(model.eigenvalues(static_cast<Eigen::Index>(model.kept) - 1) > floor)) --model.kept;
  if (max_components > 0) model.kept = std::min(model.kept, max_components);

  double total = 0.0, kept = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = std::max(model.eigenvalues(i), 0.0);
    total += v;
    if (i < static_cast<Eigen::Index>(model.kept)) kept += v;
  }
  model.kept_share = kept / total;
  return model;
}

Matrix project(const KernelModel& model, const Matrix& pixels) {
  if (static_cast<std::size_t>(pixels.cols()) != model.dims()) {
    throw DataError("pixel dimension " + std::to_string(pixels.cols()) + " does not match the model (" +
                    std::to_string(model.dims()) + ")");
  }
  const auto m = model.samples.rows();
  const auto q = static_cast<Eigen::Index>(model.kept);
  if (!(model.eigenvalues(q - 1) > 0.0)) throw NumericError("kept component has no variance");

  // Fold the eigenvector scaling into one m x q matrix.
  Eigen::MatrixXd weights = model.eigenvectors.leftCols(q);
  const double root_m = std::sqrt(static_cast<double>(m));
  for (Eigen::Index i = 0; i < q; ++i) weights.col(i) *= root_m / model.eigenvalues(i);

  Matrix out(pixels.rows(), q);
  parallel_for(static_cast<std::size_t>(pixels.rows()), [&](std::size_t rr) {
    const auto r = static_cast<Eigen::Index>(rr);
    Eigen::VectorXd kx(m);
    for (Eigen::Index j = 0; j < m; ++j) kx(j) = gaussian_kernel(row_span(pixels, r), row_span(model.samples, j), model.gamma);
    const double mean = kx.mean();
    for (Eigen::Index j = 0; j < m; ++j) kx(j) += model.total_mean - mean - model.row_means(j);
    out.row(r) = (weights.transpose() * kx).transpose();
  });
  return out;
}

KpcaResult kpca_transform(const RasterGrid& cube, const KpcaOptions& options) {
  const std::size_t n = cube.pixels(), d = cube.bands();
  std::vector<std::size_t> valid;
  valid.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    bool ok = true;
    for (std::size_t b = 0; b < d && ok; ++b) ok = !cube.is_nodata(cube.band(b)[p]);
    if (ok) valid.push_back(p);
  }
  if (valid.size() < 2) throw DataError("KPCA needs at least 2 valid pixels");
  if (options.samples < 2) throw UsageError("KPCA sample count must be >= 2");

  const std::size_t m = std::min(options.samples, valid.size());
  std::vector<std::size_t> pool = valid;
  Rng rng(options.seed);
  rng.partial_shuffle(pool, m);

  Matrix samples(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t b = 0; b < d; ++b) samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = cube.band(b)[pool[i]];

  const double gamma = options.gamma > 0.0 ? options.gamma : estimate_gamma(samples);
  KpcaResult result{RasterGrid(), fit_kpca(samples, gamma, options.variance_share, options.max_components)};

  Matrix pixels(static_cast<Eigen::Index>(valid.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < valid.size(); ++i)
    for (std::size_t b = 0; b < d; ++b) pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = cube.band(b)[valid[i]];
  const Matrix projected = project(result.model, pixels);

  const std::size_t kept = result.model.kept;
  RasterGrid features(cube.rows(), cube.cols(), kept, cube.nodata(), cube.geo());
  for (std::size_t c = 0; c < kept; ++c) {
    auto band = features.band(c);
    std::fill(band.begin(), band.end(), cube.nodata());
    for (std::size_t i = 0; i < valid.size(); ++i)
      band[valid[i]] = static_cast<float>(projected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    features.band_names[c] = "kpca" + std::to_string(c + 1);
  }
  features.metadata["kpca_gamma"] = format_real(gamma);
  features.metadata["kpca_samples"] = std::to_string(m);
  features.metadata["kpca_variance_share"] = format_real(result.model.kept_share);
  result.features = std::move(features);
  return result;
}

}  // namespace hsf
