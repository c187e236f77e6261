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

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "hsfuse/error.hpp"
#include "hsfuse/raster.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/text.hpp"

using namespace hsf;

namespace {

std::filesystem::path scratch(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "hsfuse_raster_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

RasterGrid random_grid(std::size_t r, std::size_t c, std::size_t b, std::uint64_t seed) {
  RasterGrid g(r, c, b, -9999.0f, {10.0, 20.0, 0.5});
  Rng rng(seed);
  for (auto& v : g.data()) v = static_cast<float>(rng.uniform(-50.0, 50.0));
  return g;
}

}  // namespace

TEST_CASE("raster write/read round-trip keeps values, geometry and metadata") {
  auto g = random_grid(7, 5, 3, 1);
  g.at(1, 2, 3) = g.nodata();
  g.band_names = {"red", "green", "nir"};
  g.metadata["sensor"] = "test";
  const auto path = scratch("roundtrip");
  write_raster(g, path);
  const auto back = read_raster(path);
  CHECK(back == g);
  CHECK(back.band_names == g.band_names);
  CHECK(back.metadata.at("sensor") == "test");
  CHECK(back.geo().pixel_size == 0.5);
  CHECK(read_raster(scratch("roundtrip.hdr")) == g);
}

TEST_CASE("raster payload size mismatch names both counts") {
  const auto path = scratch("short");
  write_raster(random_grid(4, 4, 2, 2), path);
  std::filesystem::resize_file(scratch("short.bin"), 4 * 4 * 2 * 4 - 6);
  try {
    read_raster(path);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("32 values") != std::string::npos);
    CHECK(msg.find("30") != std::string::npos);
  }
}

TEST_CASE("raster header validation") {
  const auto path = scratch("bad");
  write_raster(random_grid(2, 2, 1, 3), path);
  auto hdr = read_text_file(scratch("bad.hdr"));
  write_text_file(scratch("bad.hdr"), hdr + "interleave = bil\n");
  CHECK_THROWS_AS(read_raster(path), DataError);
  write_text_file(scratch("bad.hdr"), "rows = 2\ncols = x\nbands = 1\n");
  CHECK_THROWS_AS(read_raster(path), DataError);
  CHECK_THROWS_AS(read_raster(scratch("does_not_exist")), DataError);
}

TEST_CASE("non-finite values are rejected") {
  auto g = random_grid(2, 2, 1, 4);
  g.at(0, 1, 1) = std::nanf("");
  CHECK_THROWS_AS(write_raster(g, scratch("nan")), DataError);
}

TEST_CASE("raster interop: fixture written by an independent writer") {
  const char* dir = std::getenv("HSF_FIXTURE_DIR");
  REQUIRE(dir != nullptr);
  const auto g = read_raster(std::filesystem::path(dir) / "lcg");
  REQUIRE(g.rows() == 16);
  REQUIRE(g.cols() == 16);
  REQUIRE(g.bands() == 8);
  CHECK(g.geo().origin_x == 500000.5);
  CHECK(g.geo().pixel_size == 2.0);
  CHECK(g.band_names[7] == "b8");
  CHECK(g.metadata.at("source") == "python");
  std::uint32_t state = 12345;
  const auto data = g.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    state = 1664525u * state + 1013904223u;
    const float expected = i == 5 ? -9999.0f : static_cast<float>((state >> 8) / 65536.0 - 128.0);
    REQUIRE(data[i] == expected);
  }
  CHECK(g.is_nodata(data[5]));
}

TEST_CASE("quantize_band maps the valid range onto levels") {
  RasterGrid g(1, 5, 1);
  const float vals[] = {2.0f, 4.0f, -9999.0f, 3.0f, 2.5f};
  std::copy(std::begin(vals), std::end(vals), g.band(0).begin());
  const auto q = quantize_band(g, 0, 5);
  CHECK(q.values == std::vector<std::int32_t>{0, 4, -1, 2, 1});
  RasterGrid flat(2, 2, 1);
  std::fill(flat.band(0).begin(), flat.band(0).end(), 7.0f);
  CHECK(quantize_band(flat, 0, 256).values == std::vector<std::int32_t>(4, 0));
  CHECK_THROWS_AS(quantize_band(g, 1, 256), UsageError);
}

TEST_CASE("fill_nodata_nearest takes the value of the nearest known pixel") {
  RasterGrid g(1, 6, 1);
  auto b = g.band(0);
  const float vals[] = {-9999.0f, 1.0f, -9999.0f, -9999.0f, -9999.0f, 5.0f};
  std::copy(std::begin(vals), std::end(vals), b.begin());
  const auto f = fill_nodata_nearest(g);
  const std::vector<float> got(f.band(0).begin(), f.band(0).end());
  CHECK(got == std::vector<float>{1, 1, 1, 1, 5, 5});
}

TEST_CASE("affine fit agrees with an independent least-squares solve") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GcpPair> gcps;
    const double a = rng.uniform(0.5, 2), b = rng.uniform(-0.3, 0.3), c = rng.uniform(-20, 20);
    const double d = rng.uniform(-0.3, 0.3), e = rng.uniform(0.5, 2), f = rng.uniform(-20, 20);
    for (int i = 0; i < 12; ++i) {
      const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
      gcps.push_back({x, y, a * x + b * y + c + rng.normal(0, 0.3), d * x + e * y + f + rng.normal(0, 0.3)});
    }
    const auto t = fit_affine_gcps(gcps);
    Eigen::MatrixXd A(12, 3);
    Eigen::VectorXd bx(12), by(12);
    for (int i = 0; i < 12; ++i) {
      A.row(i) << gcps[i].src_x, gcps[i].src_y, 1.0;
      bx(i) = gcps[i].dst_x;
      by(i) = gcps[i].dst_y;
    }
    const Eigen::VectorXd sx = A.colPivHouseholderQr().solve(bx);
    const Eigen::VectorXd sy = A.colPivHouseholderQr().solve(by);
    for (int k = 0; k < 3; ++k) {
      CHECK(t.coef[k] == doctest::Approx(sx(k)).epsilon(1e-9));
      CHECK(t.coef[3 + k] == doctest::Approx(sy(k)).epsilon(1e-9));
    }
    const double rmse = std::sqrt(((A * sx - bx).squaredNorm() + (A * sy - by).squaredNorm()) / 12.0);
    CHECK(t.rmse == doctest::Approx(rmse).epsilon(1e-9));
  }
}

TEST_CASE("affine fit rejects degenerate control points") {
  std::vector<GcpPair> line{{0, 0, 1, 1}, {1, 1, 2, 2}, {2, 2, 3, 3}, {3, 3, 4, 4}};
  CHECK_THROWS_AS(fit_affine_gcps(line), DataError);
  std::vector<GcpPair> two{{0, 0, 1, 1}, {1, 0, 2, 2}};
  CHECK_THROWS(fit_affine_gcps(two));
}

TEST_CASE("affine inverse composes to identity") {
  AffineTransform t;
  t.coef = {1.5, 0.2, 3.0, -0.1, 0.8, -2.0};
  const auto inv = t.inverse();
  const auto p = t.apply(3.0, 4.0);
  const auto q = inv.apply(p[0], p[1]);
  CHECK(q[0] == doctest::Approx(3.0));
  CHECK(q[1] == doctest::Approx(4.0));
  t.coef = {1, 2, 0, 2, 4, 0};
  CHECK_THROWS_AS(t.inverse(), NumericError);
}

TEST_CASE("nearest resampling matches a per-pixel scan") {
  const auto g = random_grid(9, 11, 2, 8);
  AffineTransform t;
  t.coef = {1.1, 0.05, -1.3, -0.04, 0.9, 2.2};
  const auto out = resample_nearest(g, t, 10, 12);
  const auto inv = t.inverse();
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 12; ++c) {
      const auto s = inv.apply(static_cast<double>(c), static_cast<double>(r));
      const long sc = std::lround(std::floor(s[0] + 0.5)), sr = std::lround(std::floor(s[1] + 0.5));
      const bool inside = sc >= 0 && sr >= 0 && sc < 11 && sr < 9;
      for (std::size_t b = 0; b < 2; ++b) {
        const float expected = inside ? g.at(b, static_cast<std::size_t>(sr), static_cast<std::size_t>(sc)) : g.nodata();
        REQUIRE(out.at(b, r, c) == expected);
      }
    }
}

TEST_CASE("identity resampling reproduces the raster") {
  const auto g = random_grid(6, 6, 1, 9);
  const auto out = resample_nearest(g, AffineTransform{}, 6, 6);
  CHECK(out == g);
}

TEST_CASE("class map conversion and rendering") {
  ClassMap m(2, 3);
  m.labels = {1, 2, 0, 3, 6, 4};
  const auto r = class_map_to_raster(m);
  CHECK(class_map_from_raster(r).labels == m.labels);
  const auto path = scratch("map.ppm");
  const auto palette = default_palette();
  render_class_map(m, palette, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P6\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 18);
  CHECK(bytes.substr(0, header.size()) == header);
  // Pixel 1 has label 2; pixel 2 is unlabeled and renders black.
  CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == palette[1].r);
  CHECK(bytes[header.size() + 6] == 0);
  m.labels[0] = 7;
  CHECK_THROWS_AS(render_class_map(m, palette, path), DataError);

  RasterGrid bad(1, 2, 1);
  bad.band(0)[0] = 1.5f;
  CHECK_THROWS_AS(class_map_from_raster(bad), DataError);
}
