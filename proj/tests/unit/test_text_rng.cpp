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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "hsfuse/error.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/text.hpp"

using namespace hsf;

TEST_CASE("splitmix64 stream matches the published reference outputs") {
  Rng rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next() == 0x06c45d188009454fULL);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("derive_seed separates stages and indices") {
  std::set<std::uint64_t> seen;
  for (const char* stage : {"split", "kpca", "rf.tree", "svm.cv"})
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, stage, i));
  CHECK(seen.size() == 200);
  CHECK(derive_seed(7, "split", 3) == mix64(7 ^ fnv1a64("split") ^ mix64(3)));
}

TEST_CASE("below is in range and roughly uniform") {
  Rng rng(11);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
  CHECK(rng.below(1) == 0);
  CHECK(rng.below(0) == 0);
}

TEST_CASE("uniform and normal moments") {
  Rng rng(5);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.02);
}

TEST_CASE("partial_shuffle draws a permutation prefix") {
  Rng rng(3);
  std::vector<int> v(20);
  for (int i = 0; i < 20; ++i) v[i] = i;
  rng.partial_shuffle(v, 5);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
  // Each element lands first with probability 1/n.
  std::vector<int> first(10, 0);
  for (int t = 0; t < 50000; ++t) {
    std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    rng.partial_shuffle(w, 1);
    ++first[w[0]];
  }
  for (int f : first) CHECK(std::abs(f - 5000) < 400);
}

TEST_CASE("format_real round-trips doubles") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(200)) - 100);
    CHECK(parse_real(format_real(v), "v") == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(parse_real(" +2.5 ", "v") == 2.5);
  CHECK_THROWS_AS(parse_real("2.5x", "v"), DataError);
  CHECK_THROWS_AS(parse_real("", "v"), DataError);
  CHECK(parse_int("-12", "n") == -12);
  CHECK_THROWS_AS(parse_int("1.5", "n"), DataError);
}

TEST_CASE("trim and split") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(trim("   ").empty());
  const auto parts = split(" a, b ,,c ", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[2].empty());
  CHECK(parts[3] == "c");
}

TEST_CASE("KeyValueFile parsing and serialization") {
  const auto kv = KeyValueFile::parse("# comment\n a = 1 \n\nb=two words\na = 3\nempty =\n", "cfg");
  CHECK(kv.get("a") == "3");
  CHECK(kv.get("b") == "two words");
  CHECK(kv.get("empty").empty());
  CHECK(kv.entries().front().first == "a");
  CHECK(kv.get_or("missing", "x") == "x");
  CHECK_FALSE(kv.has("missing"));
  const auto again = KeyValueFile::parse(kv.to_string());
  CHECK(again.entries() == kv.entries());
  CHECK_THROWS_AS(KeyValueFile::parse("no equals sign here"), DataError);
  CHECK_THROWS_AS(KeyValueFile::parse(" = value"), DataError);
}

TEST_CASE("text files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "hsfuse_text_test";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "a.txt", "hello\nworld\n");
  CHECK(read_text_file(dir / "a.txt") == "hello\nworld\n");
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), DataError);
  std::filesystem::remove_all(dir);
}
