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

#include "hsfuse/error.hpp"
#include "hsfuse/tree_of_shapes.hpp"
#include "oracles/fixtures.hpp"
#include "oracles/shape_oracle.hpp"

using namespace hsf;

namespace {

LevelImage from_rows(std::int32_t levels, std::vector<std::vector<std::int32_t>> rows) {
  LevelImage img{rows.size(), rows[0].size(), levels, {}};
  for (const auto& r : rows) img.values.insert(img.values.end(), r.begin(), r.end());
  return img;
}

}  // namespace

TEST_CASE("shape family matches the saturation oracle on every 3x3 image over 3 levels") {
  LevelImage img{3, 3, 3, std::vector<std::int32_t>(9)};
  int mismatches = 0;
  for (int code = 0; code < 19683; ++code) {
    int c = code;
    for (auto& v : img.values) {
      v = c % 3;
      c /= 3;
    }
    if (oracle::tree_family(build_tree(img)) != oracle::shape_family(img)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("shape family matches the oracle on random images") {
  Rng rng(1234);
  int mismatches = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    const std::size_t rows = 2 + rng.below(5), cols = 1 + rng.below(6);
    const auto img = oracle::random_image(rng, rows, cols, 2 + static_cast<std::int32_t>(rng.below(5)));
    const auto tree = build_tree(img);
    if (oracle::tree_family(tree) != oracle::shape_family(img)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("tree structure invariants") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto img = oracle::random_image(rng, 1 + rng.below(7), 1 + rng.below(7), 4);
    const auto tree = build_tree(img);
    const auto sets = oracle::node_supports(tree);
    REQUIRE(tree.parent[0] == 0);
    CHECK(sets[0].size() == img.values.size());
    for (std::size_t n = 1; n < tree.size(); ++n) {
      const auto up = tree.parent[n];
      CHECK(up < n);
      CHECK(sets[up].size() > sets[n].size());
      CHECK(std::includes(sets[up].begin(), sets[up].end(), sets[n].begin(), sets[n].end()));
    }
    for (std::size_t n = 1; n < tree.size(); ++n) CHECK(sets[n - 1].size() >= sets[n].size());
    CHECK(reconstruct(tree).values == img.values);
  }
}

TEST_CASE("attributes match direct computation over each shape") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = oracle::random_image(rng, 2 + rng.below(5), 2 + rng.below(5), 6);
    const auto tree = build_tree(img);
    const auto attrs = compute_attributes(tree, img);
    const auto sets = oracle::node_supports(tree);
    for (std::size_t n = 0; n < tree.size(); ++n) {
      double s = 0, s2 = 0;
      for (auto p : sets[n]) s += img.values[p];
      const double mean = s / static_cast<double>(sets[n].size());
      for (auto p : sets[n]) s2 += (img.values[p] - mean) * (img.values[p] - mean);
      CHECK(attrs.area[n] == static_cast<double>(sets[n].size()));
      CHECK(attrs.mean[n] == doctest::Approx(mean).epsilon(1e-12));
      CHECK(attrs.stddev[n] == doctest::Approx(std::sqrt(s2 / static_cast<double>(sets[n].size()))).epsilon(1e-9));
    }
  }
}

TEST_CASE("exterior level is the lower median of the border") {
  const auto img = from_rows(10, {{1, 2, 3}, {9, 9, 4}, {8, 7, 6}});
  CHECK(exterior_level(img) == 4);  // border 1,2,3,4,6,7,8,9
  const auto one = from_rows(4, {{3}});
  CHECK(exterior_level(one) == 3);
}

TEST_CASE("bright and dark spots are both shapes") {
  const auto bright = from_rows(3, {{0, 0, 0}, {0, 2, 0}, {0, 0, 0}});
  const auto dark = from_rows(3, {{2, 2, 2}, {2, 0, 2}, {2, 2, 2}});
  const auto tb = build_tree(bright), td = build_tree(dark);
  REQUIRE(tb.size() == 2);
  REQUIRE(td.size() == 2);
  CHECK(tb.level[1] == 2);
  CHECK(td.level[1] == 0);
  const auto ab = compute_attributes(tb, bright);
  const auto fb = filter_tree(tb, ab, Attribute::area, 2);
  CHECK(fb.values == std::vector<std::int32_t>(9, 0));
  const auto ad = compute_attributes(td, dark);
  CHECK(filter_tree(td, ad, Attribute::area, 2).values == std::vector<std::int32_t>(9, 2));
}

TEST_CASE("a hole is filled into its enclosing shape") {
  const auto ring = from_rows(3, {{0, 0, 0, 0, 0},
                                  {0, 2, 2, 2, 0},
                                  {0, 2, 1, 2, 0},
                                  {0, 2, 2, 2, 0},
                                  {0, 0, 0, 0, 0}});
  const auto tree = build_tree(ring);
  const auto sets = oracle::node_supports(tree);
  REQUIRE(tree.size() == 3);
  CHECK(sets[1].size() == 9);  // ring plus its hole
  CHECK(sets[2].size() == 1);
  CHECK(tree.parent[2] == 1);
}

TEST_CASE("area filter properties on random images") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto img = oracle::random_image(rng, 2 + rng.below(7), 2 + rng.below(7), 2 + static_cast<std::int32_t>(rng.below(6)));
    const auto tree = build_tree(img);
    const auto attrs = compute_attributes(tree, img);
    CHECK(filter_tree(tree, attrs, Attribute::area, 1).values == img.values);
    const auto flat = filter_tree(tree, attrs, Attribute::area, static_cast<double>(img.values.size()) + 1);
    CHECK(flat.values == std::vector<std::int32_t>(img.values.size(), tree.level[0]));
    const double lambda = 1 + static_cast<double>(rng.below(img.values.size()));
    const auto once = filter_tree(tree, attrs, Attribute::area, lambda);
    const auto t2 = build_tree(once);
    const auto twice = filter_tree(t2, compute_attributes(t2, once), Attribute::area, lambda);
    CHECK(twice.values == once.values);
    // Every remaining shape is a shape of the input with area >= lambda.
    const auto before = oracle::tree_family(tree);
    for (const auto& s : oracle::node_supports(t2)) {
      CHECK(before.count(s) == 1);
      if (s.size() != img.values.size()) CHECK(static_cast<double>(s.size()) >= lambda);
    }
  }
}

TEST_CASE("filtering commutes with negation on symmetric fixtures") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto img = oracle::symmetric_fixture(rng, 2 + rng.below(6), 2 + rng.below(6), 2 + static_cast<std::int32_t>(rng.below(5)));
    const auto neg = oracle::negate(img);
    const auto t1 = build_tree(img), t2 = build_tree(neg);
    CHECK(oracle::tree_family(t1) == oracle::tree_family(t2));
    const auto a1 = compute_attributes(t1, img), a2 = compute_attributes(t2, neg);
    const double lambda = 1 + static_cast<double>(rng.below(img.values.size() + 1));
    CHECK(oracle::negate(filter_tree(t1, a1, Attribute::area, lambda)).values ==
          filter_tree(t2, a2, Attribute::area, lambda).values);
    const double sd = rng.uniform(0.0, 1.5);
    CHECK(oracle::negate(filter_tree(t1, a1, Attribute::stddev, sd)).values ==
          filter_tree(t2, a2, Attribute::stddev, sd).values);
  }
}

TEST_CASE("invalid inputs") {
  LevelImage empty{0, 0, 4, {}};
  CHECK_THROWS_AS(build_tree(empty), DataError);
  const auto neg = from_rows(4, {{0, -1}});
  CHECK_THROWS_AS(build_tree(neg), DataError);
  const auto img = from_rows(4, {{0, 1}});
  const auto t = build_tree(img);
  CHECK_THROWS_AS(filter_tree(t, compute_attributes(t, img), Attribute::area, -1), UsageError);
  CHECK(parse_attribute("std") == Attribute::stddev);
  CHECK_THROWS_AS(parse_attribute("volume"), UsageError);
}
