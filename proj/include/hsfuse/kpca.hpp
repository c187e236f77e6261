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

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hsfuse/raster.hpp"

namespace hsf {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Mean Euclidean distance over all unordered pairs of distinct rows.
double estimate_gamma(const Matrix& samples);

struct SymmetricEigen {
  Vector values;          // non-increasing
  Eigen::MatrixXd vectors;  // orthonormal columns, values(i) <-> vectors.col(i)
  int sweeps = 0;
};

/// Cyclic Jacobi. Stops once the off-diagonal Frobenius norm falls below
/// rel_tol * ||a||_F. Each eigenvector is signed so that its largest-magnitude
/// entry is positive.
SymmetricEigen jacobi_eigen(Eigen::MatrixXd a, double rel_tol = 1e-10, int max_sweeps = 100);

/// Smallest q such that the first q clamped eigenvalues carry at least
/// `share` of the clamped total.
std::size_t select_components(std::span<const double> eigenvalues, double share);

struct KernelModel {
  Matrix samples;
  double gamma = 0.0;
  Vector eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::size_t kept = 0;
  Vector row_means;  // column means of the uncentered kernel matrix
  double total_mean = 0.0;
  double kept_share = 0.0;

  std::size_t dims() const { return static_cast<std::size_t>(samples.cols()); }
};

/// exp(-||x - y||^2 / (2 gamma^2))
double gaussian_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Keeps the components chosen by select_components, optionally capped at
/// max_components (0: no cap).
KernelModel fit_kpca(const Matrix& samples, double gamma, double variance_share = 0.95,
                     std::size_t max_components = 0);

/// Centered out-of-sample projection onto the kept components, whitened so
/// the fitting samples project with zero mean and unit (population) variance.
Matrix project(const KernelModel& model, const Matrix& pixels);

struct KpcaOptions {
  std::size_t samples = 500;
  double variance_share = 0.95;
  std::size_t max_components = 0;  // 0: no cap
  double gamma = 0.0;  // <= 0 selects estimate_gamma
  std::uint64_t seed = 0;
};

struct KpcaResult {
  RasterGrid features;
  KernelModel model;
};

/// Samples pixels (uniform without replacement over pixels valid in every
/// band), fits the model and projects the whole cube.
KpcaResult kpca_transform(const RasterGrid& cube, const KpcaOptions& options);

}  // namespace hsf
