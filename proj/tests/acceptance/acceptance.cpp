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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hsfuse/error.hpp"
#include "hsfuse/evaluation.hpp"
#include "hsfuse/kpca.hpp"
#include "hsfuse/lidar.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/pipeline.hpp"
#include "hsfuse/profiles.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/synthetic.hpp"
#include "hsfuse/tree_of_shapes.hpp"
#include "oracles/fixtures.hpp"
#include "oracles/geometry.hpp"
#include "oracles/metrics_oracle.hpp"
#include "oracles/shape_oracle.hpp"

using namespace hsf;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ------------------------------------------------------------ criterion 1

Outcome shape_oracle_equivalence() {
  Stopwatch clock;
  std::size_t checked = 0, mismatches = 0;
  LevelImage img{3, 3, 3, std::vector<std::int32_t>(9)};
  for (int code = 0; code < 19683; ++code, ++checked) {
    int c = code;
    for (auto& v : img.values) {
      v = c % 3;
      c /= 3;
    }
    if (oracle::tree_family(build_tree(img)) != oracle::shape_family(img)) ++mismatches;
  }
  Rng rng(derive_seed(1, "acceptance.shapes"));
  for (int i = 0; i < 10000; ++i, ++checked) {
    const std::size_t side = 4 + rng.below(2);
    const auto r = oracle::random_image(rng, side, side, 3);
    if (oracle::tree_family(build_tree(r)) != oracle::shape_family(r)) ++mismatches;
  }
  const double secs = clock.seconds();
  return {mismatches == 0 && secs <= 60.0,
          std::to_string(checked) + " images, " + std::to_string(mismatches) + " mismatches, " + fmt("%.1f s", secs)};
}

// ------------------------------------------------------------ criterion 2

Outcome filter_properties() {
  Rng rng(derive_seed(2, "acceptance.filters"));
  const int n = 1000;
  int idem = 0, ident = 0, flat = 0, dual = 0;
  for (int i = 0; i < n; ++i) {
    const auto img = oracle::random_image(rng, 3 + rng.below(6), 3 + rng.below(6), 2 + static_cast<std::int32_t>(rng.below(7)));
    const auto tree = build_tree(img);
    const auto attrs = compute_attributes(tree, img);
    const double lambda = 1 + static_cast<double>(rng.below(img.values.size()));
    const auto once = filter_tree(tree, attrs, Attribute::area, lambda);
    const auto t2 = build_tree(once);
    idem += filter_tree(t2, compute_attributes(t2, once), Attribute::area, lambda).values == once.values;
  }
  for (int i = 0; i < n; ++i) {
    const auto img = oracle::random_image(rng, 2 + rng.below(7), 2 + rng.below(7), 2 + static_cast<std::int32_t>(rng.below(7)));
    const auto tree = build_tree(img);
    ident += filter_tree(tree, compute_attributes(tree, img), Attribute::area, 1.0).values == img.values;
  }
  for (int i = 0; i < n; ++i) {
    const auto img = oracle::random_image(rng, 2 + rng.below(7), 2 + rng.below(7), 2 + static_cast<std::int32_t>(rng.below(7)));
    const auto tree = build_tree(img);
    const auto attrs = compute_attributes(tree, img);
    const auto out = filter_tree(tree, attrs, Attribute::area, attrs.area[0] + 1 + rng.below(5));
    flat += std::all_of(out.values.begin(), out.values.end(), [&](std::int32_t v) { return v == out.values[0]; });
  }
  for (int i = 0; i < n; ++i) {
    const auto img = oracle::symmetric_fixture(rng, 3 + rng.below(6), 3 + rng.below(6), 2 + static_cast<std::int32_t>(rng.below(7)));
    const auto neg = oracle::negate(img);
    const auto t1 = build_tree(img), t2 = build_tree(neg);
    const double lambda = 1 + static_cast<double>(rng.below(img.values.size()));
    dual += oracle::negate(filter_tree(t1, compute_attributes(t1, img), Attribute::area, lambda)).values ==
            filter_tree(t2, compute_attributes(t2, neg), Attribute::area, lambda).values;
  }
  const bool ok = idem == n && ident == n && flat == n && dual == n;
  return {ok, "idempotent " + std::to_string(idem) + "/" + std::to_string(n) + ", identity " + std::to_string(ident) +
                  "/" + std::to_string(n) + ", flattening " + std::to_string(flat) + "/" + std::to_string(n) +
                  ", bright/dark symmetric " + std::to_string(dual) + "/" + std::to_string(n)};
}

// ------------------------------------------------------------ criterion 3

// Mixtures of a few smooth endmember spectra with additive noise.
Matrix random_spectra(Rng& rng, Eigen::Index m, Eigen::Index d) {
  const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.below(3));
  Matrix ends(k, d);
  for (Eigen::Index e = 0; e < k; ++e) {
    const double a = rng.uniform(5, 40), b = rng.uniform(-10, 10), f = rng.uniform(1, 6);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(d - 1);
      ends(e, j) = a + b * t + 3 * std::sin(f * t + static_cast<double>(e));
    }
  }
  Matrix x(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> w(static_cast<std::size_t>(k));
    double s = 0;
    for (auto& v : w) s += (v = rng.uniform() + 1e-3);
    x.row(i).setZero();
    for (Eigen::Index e = 0; e < k; ++e) x.row(i) += (w[static_cast<std::size_t>(e)] / s) * ends.row(e);
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) += rng.normal(0, 0.5);
  }
  return x;
}

Outcome kpca_numerics() {
  Stopwatch clock;
  Rng rng(derive_seed(3, "acceptance.kpca"));
  double worst_resid = 0, worst_mean = 0, worst_var = 0;
  int selection_ok = 0;
  const int sets = 100;
  for (int s = 0; s < sets; ++s) {
    const auto m = static_cast<Eigen::Index>(10 + rng.below(291));
    const auto d = static_cast<Eigen::Index>(3 + rng.below(30));
    const auto x = random_spectra(rng, m, d);
    const double gamma = estimate_gamma(x);
    const double share = rng.uniform(0.5, 0.99);
    const auto model = fit_kpca(x, gamma, share);

    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) k(i, j) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2 * gamma * gamma));
    const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
    const Eigen::MatrixXd kc = k - one * k - k * one + one * k * one;
    const Eigen::MatrixXd resid = kc * model.eigenvectors - model.eigenvectors * model.eigenvalues.asDiagonal();
    worst_resid = std::max(worst_resid, resid.norm() / kc.norm());

    // Smallest prefix whose clamped eigenvalue mass reaches the share.
    double total = 0;
    for (Eigen::Index i = 0; i < m; ++i) total += std::max(model.eigenvalues(i), 0.0);
    std::size_t want = static_cast<std::size_t>(m);
    double acc = 0;
    for (Eigen::Index q = 0; q < m; ++q) {
      acc += std::max(model.eigenvalues(q), 0.0);
      if (acc / total >= share) {
        want = static_cast<std::size_t>(q + 1);
        break;
      }
    }
    const std::span<const double> ev(model.eigenvalues.data(), static_cast<std::size_t>(m));
    selection_ok += select_components(ev, share) == want;

    const Matrix p = project(model, x);
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double mean = p.col(c).mean();
      const double var = (p.col(c).array() - mean).square().mean();
      worst_mean = std::max(worst_mean, std::abs(mean));
      worst_var = std::max(worst_var, std::abs(var - 1.0));
    }
  }
  const double secs = clock.seconds();
  const bool ok = worst_resid <= 1e-6 && worst_mean <= 1e-6 && worst_var <= 1e-3 && selection_ok == sets && secs <= 120;
  return {ok, "residual " + fmt("%.2e", worst_resid) + ", |mean| " + fmt("%.2e", worst_mean) + ", |var-1| " +
                  fmt("%.2e", worst_var) + ", selection " + std::to_string(selection_ok) + "/" + std::to_string(sets) +
                  ", " + fmt("%.1f s", secs)};
}

// ------------------------------------------------------------ criterion 4

Outcome delaunay_validity() {
  Rng rng(derive_seed(4, "acceptance.delaunay"));
  double worst_incircle = -INFINITY, worst_affine = 0;
  int bad_orientation = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 3 + rng.below(498);
    std::vector<Site> sites;
    const bool lattice = inst % 5 == 4;
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3), c = rng.uniform(-50, 50);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = lattice ? static_cast<double>(rng.below(25)) : rng.uniform(0, 64);
      const double y = lattice ? static_cast<double>(rng.below(25)) : rng.uniform(0, 64);
      sites.push_back({x, y, a * x + b * y + c});
    }
    Tin tin;
    try {
      tin = build_tin(sites);
    } catch (const DataError&) {
      continue;  // collinear draw
    }
    std::vector<oracle::P2> pts;
    for (const auto& v : tin.vertices) pts.push_back({v.x, v.y});
    for (const auto& t : tin.triangles) {
      if (oracle::cross(pts[t[0]], pts[t[1]], pts[t[2]]) <= 0) ++bad_orientation;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k == t[0] || k == t[1] || k == t[2]) continue;
        worst_incircle = std::max(worst_incircle, oracle::incircle_relative(pts[t[0]], pts[t[1]], pts[t[2]], pts[k]));
      }
    }
    const GeoAnchor geo{0.0, 64.0, 1.0};
    const auto grid = rasterize_tin(tin, 64, 64, geo);
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t col = 0; col < 64; ++col) {
        const float v = grid.at(0, r, col);
        if (grid.is_nodata(v)) continue;
        const double want = a * geo.center_x(col) + b * geo.center_y(r) + c;
        // Stored as float32: compare relative to the value's magnitude.
        worst_affine = std::max(worst_affine, std::abs(v - want) / std::max(1.0, std::abs(want)));
      }
  }
  const bool ok = worst_incircle <= 1e-9 && bad_orientation == 0 && worst_affine <= 1e-6;
  return {ok, "max incircle " + fmt("%.2e", worst_incircle) + ", non-CCW " + std::to_string(bad_orientation) +
                  ", affine rel. error " + fmt("%.2e", worst_affine)};
}

// ------------------------------------------------------------ criterion 5

ConfusionMatrix from_table(const std::vector<std::vector<std::int64_t>>& t) {
  ConfusionMatrix cm(static_cast<std::int32_t>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j)
      cm.at(static_cast<std::int32_t>(i + 1), static_cast<std::int32_t>(j + 1)) = t[i][j];
  return cm;
}

Outcome metric_fixtures() {
  struct Fixture {
    std::vector<std::vector<std::int64_t>> table;
    double oa, aa, kappa;
  };
  const std::vector<Fixture> fixtures{{{{50, 0}, {0, 50}}, 1.0, 1.0, 1.0},
                                      {{{45, 5}, {15, 35}}, 0.8, 0.8, 0.6},
                                      {{{0, 10}, {10, 0}}, 0.0, 0.0, -1.0}};
  double worst = 0;
  for (const auto& f : fixtures) {
    const auto m = metrics(from_table(f.table));
    worst = std::max({worst, std::abs(m.oa - f.oa), std::abs(m.aa - f.aa), std::abs(m.kappa - f.kappa)});
  }
  Rng rng(derive_seed(5, "acceptance.metrics"));
  int out_of_bounds = 0, kappa_above_oa = 0, oracle_disagree = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = 2 + rng.below(9);
    std::vector<std::vector<std::int64_t>> t(k, std::vector<std::int64_t>(k));
    const std::uint64_t scale = rng.below(3) == 0 ? 3 : 1000;
    for (auto& row : t)
      for (auto& v : row) v = static_cast<std::int64_t>(rng.below(scale));
    t[rng.below(k)][rng.below(k)] += 1;
    const auto m = metrics(from_table(t));
    if (!(m.oa >= 0 && m.oa <= 1 && m.aa >= 0 && m.aa <= 1 && m.kappa >= -1 && m.kappa <= 1)) ++out_of_bounds;
    const auto o = oracle::table_scores(t);
    if (m.oa >= static_cast<double>(o.chance) && m.kappa > m.oa + 1e-15) ++kappa_above_oa;
    if (!m.kappa_degenerate && std::abs(m.kappa - static_cast<double>(o.kappa)) > 1e-12) ++oracle_disagree;
  }
  const bool ok = worst <= 1e-12 && out_of_bounds == 0 && kappa_above_oa == 0 && oracle_disagree == 0;
  return {ok, "fixture error " + fmt("%.1e", worst) + ", 10000 random tables: " + std::to_string(out_of_bounds) +
                  " out of bounds, " + std::to_string(kappa_above_oa) + " kappa>OA, " + std::to_string(oracle_disagree) +
                  " oracle mismatches"};
}

// ------------------------------------------------------------ criterion 6

Outcome split_counts() {
  const std::vector<std::size_t> pools{290, 2166, 4186, 1108, 2927, 838};
  const std::vector<std::size_t> want{20, 22, 42, 20, 29, 20};
  std::size_t total = 0;
  for (auto p : pools) total += p;
  ClassMap map(1, total);
  std::size_t at = 0;
  for (std::size_t k = 0; k < pools.size(); ++k)
    for (std::size_t i = 0; i < pools[k]; ++i) map.labels[at++] = static_cast<std::int32_t>(k + 1);
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto split = split_reference(map, 0.01, 20, seed);
    ok = ok && split.train_per_class == want;
  }
  const auto s = split_reference(map, 0.01, 20, 0);
  std::string got;
  for (auto c : s.train_per_class) got += (got.empty() ? "" : "/") + std::to_string(c);
  return {ok, "per-class training counts " + got};
}

// ------------------------------------------------------- criteria 7 and 9

struct FusionRun {
  // [scenario][classifier] mean OA over scene seeds
  double oa[3][2] = {};
  std::string reports;
  std::vector<std::vector<std::int32_t>> maps;
  std::size_t esdap_bands = 0;
  std::size_t fused_bands = 0;
  double seconds = 0;
};

FusionRun fusion_experiment(unsigned threads) {
  set_thread_count(threads);
  Stopwatch clock;
  FusionRun out;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto scene = generate_synthetic_scene(SceneSpec{}, seed);
    // Height and intensity come from the point cloud, as in the field.
    const auto surf = derive_surfaces(scene.points, scene.hyper.rows(), scene.hyper.cols(), scene.hyper.geo());
    const ScenarioInputs inputs{scene.hyper, surf.ndsm, surf.intensity, scene.classes};
    for (int sc = 1; sc <= 3; ++sc) {
      ScenarioConfig cfg;
      cfg.scenario = sc;
      cfg.recipe = scenario_recipe(sc);
      cfg.runs = 1;
      cfg.seed = seed;
      cfg.kpca.max_components = 3;
      const auto res = run_scenario(cfg, inputs);
      for (std::size_t c = 0; c < 2; ++c) out.oa[sc - 1][c] += res.report.columns[c].runs[0].metrics.oa / seeds;
      out.reports += report_tsv(res.report, false) + runs_tsv(res.report) + res.manifest;
      for (const auto& m : res.maps) out.maps.push_back(m.second.labels);
      if (sc == 3 && s == 0) {
        out.fused_bands = res.feature_names.size();
        out.esdap_bands = static_cast<std::size_t>(
            std::count_if(res.feature_names.begin(), res.feature_names.end(),
                          [](const std::string& n) { return n.rfind("esdap_kpca/", 0) == 0; }));
      }
    }
  }
  out.seconds = clock.seconds();
  return out;
}

Outcome fusion_ordering(const FusionRun& r) {
  bool ok = r.seconds <= 600.0;
  std::string detail;
  const char* names[2] = {"svm", "rf"};
  for (int c = 0; c < 2; ++c) {
    const double s1 = r.oa[0][c], s2 = r.oa[1][c], s3 = r.oa[2][c];
    ok = ok && s3 >= s2 && s2 >= s1 && s3 - s1 >= 0.05;
    detail += std::string(names[c]) + " OA " + fmt("%.2f", 100 * s1) + " / " + fmt("%.2f", 100 * s2) + " / " +
              fmt("%.2f", 100 * s3) + ", ";
  }
  return {ok, detail + fmt("%.1f s", r.seconds)};
}

Outcome feature_counts(const FusionRun& r) {
  // Also check the standalone path on a cube with three components.
  Rng rng(derive_seed(8, "acceptance.features"));
  RasterGrid comps(32, 32, 3);
  for (std::size_t b = 0; b < 3; ++b)
    for (auto& v : comps.band(b)) v = static_cast<float>(rng.normal());
  const auto prof = esdap(comps, ProfileOptions{});
  RasterGrid ndsm(32, 32, 1), inten(32, 32, 1);
  const std::vector<std::pair<std::string, const RasterGrid*>> parts{
      {"esdap_kpca", &prof}, {"intensity", &inten}, {"ndsm", &ndsm}};
  const auto fused = stack_rasters(parts);
  const bool ok = prof.bands() == 15 && fused.bands() == 17 && r.esdap_bands == 15 && r.fused_bands == 17;
  return {ok, "profiles " + std::to_string(prof.bands()) + ", stacked " + std::to_string(fused.bands()) +
                  "; in the fusion scenario " + std::to_string(r.esdap_bands) + " and " + std::to_string(r.fused_bands)};
}

Outcome determinism(const FusionRun& a, const FusionRun& b, unsigned ta, unsigned tb) {
  const bool reports = a.reports == b.reports;
  const bool maps = a.maps == b.maps;
  return {reports && maps && !a.maps.empty(),
          "threads " + std::to_string(ta) + " vs " + std::to_string(tb) + ": reports " +
              (reports ? "identical" : "differ") + ", " + std::to_string(a.maps.size()) + " maps " +
              (maps ? "identical" : "differ")};
}

}  // namespace

int main() {
  int failed = 0;
  auto line = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  line(1, "tree-of-shapes oracle equivalence", guarded(shape_oracle_equivalence));
  line(2, "attribute filter properties", guarded(filter_properties));
  line(3, "kernel PCA numerics", guarded(kpca_numerics));
  line(4, "Delaunay validity and TIN interpolation", guarded(delaunay_validity));
  line(5, "accuracy metric fixtures and bounds", guarded(metric_fixtures));
  line(6, "reference split counts", guarded(split_counts));

  FusionRun first, second;
  Outcome run_error{true, ""};
  try {
    first = fusion_experiment(1);
    second = fusion_experiment(4);
  } catch (const std::exception& e) {
    run_error = {false, std::string("exception: ") + e.what()};
  }
  line(7, "fusion scenario ordering on the synthetic scene", run_error.pass ? fusion_ordering(first) : run_error);
  line(8, "profile and stacked feature counts", run_error.pass ? guarded([&] { return feature_counts(first); }) : run_error);
  line(9, "determinism across runs and thread counts", run_error.pass ? determinism(first, second, 1, 4) : run_error);

  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
