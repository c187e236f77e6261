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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hsf {

/// Map-space placement of a north-up grid. origin is the outer corner of
/// pixel (0, 0); rows grow southwards.
struct GeoAnchor {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;

  double center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * pixel_size; }
  double center_y(std::size_t row) const { return origin_y - (static_cast<double>(row) + 0.5) * pixel_size; }
};

/// Multi-band float image stored band-sequentially.
class RasterGrid {
 public:
  static constexpr float kDefaultNodata = -9999.0f;

  RasterGrid() = default;
  RasterGrid(std::size_t rows, std::size_t cols, std::size_t bands,
             float nodata = kDefaultNodata, GeoAnchor geo = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixels() const { return rows_ * cols_; }
  float nodata() const { return nodata_; }
  void set_nodata(float v) { nodata_ = v; }

  const GeoAnchor& geo() const { return geo_; }
  void set_geo(const GeoAnchor& g);

  bool is_nodata(float v) const;

  float& at(std::size_t band, std::size_t row, std::size_t col) {
    return data_[(band * rows_ + row) * cols_ + col];
  }
  float at(std::size_t band, std::size_t row, std::size_t col) const {
    return data_[(band * rows_ + row) * cols_ + col];
  }

  std::span<float> band(std::size_t b);
  std::span<const float> band(std::size_t b) const;
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  /// One name per band (may be empty). Serialized as the band_names key.
  std::vector<std::string> band_names;
  /// Extra header keys carried through read/write untouched.
  std::map<std::string, std::string> metadata;

  /// Throws DataError when a non-nodata value is not finite.
  void validate() const;

  friend bool operator==(const RasterGrid& a, const RasterGrid& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t bands_ = 0;
  float nodata_ = kDefaultNodata;
  GeoAnchor geo_{};
  std::vector<float> data_;
};

/// Per-pixel class ids; 0 is unlabeled, 1..K are classes.
struct ClassMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> labels;

  ClassMap() = default;
  ClassMap(std::size_t r, std::size_t c) : rows(r), cols(c), labels(r * c, 0) {}

  std::int32_t max_label() const;
  std::int32_t& at(std::size_t r, std::size_t c) { return labels[r * cols + c]; }
  std::int32_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
};

ClassMap class_map_from_raster(const RasterGrid& grid);
RasterGrid class_map_to_raster(const ClassMap& map, GeoAnchor geo = {});

/// Integer-valued single band, e.g. a quantized feature. -1 marks nodata.
struct LevelImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::int32_t levels = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct RasterPaths {
  std::filesystem::path header;
  std::filesystem::path payload;
};

/// "x.hdr" or "x" both map to the pair x.hdr / x.bin.
RasterPaths raster_paths(const std::filesystem::path& path);

RasterGrid read_raster(const std::filesystem::path& path);
void write_raster(const RasterGrid& grid, const std::filesystem::path& path);

/// Linear min-max scaling of one band onto {0 .. levels-1}; nodata -> -1.
LevelImage quantize_band(const RasterGrid& grid, std::size_t band,
                         std::int32_t levels = 256);

/// Replaces nodata in every band by the value of the nearest valid pixel
/// (4-connected breadth-first distance, ties to the earlier-queued source).
RasterGrid fill_nodata_nearest(const RasterGrid& grid);

struct GcpPair {
  double src_x = 0.0;
  double src_y = 0.0;
  double dst_x = 0.0;
  double dst_y = 0.0;
};

/// (x, y) -> (a x + b y + c, d x + e y + f) in pixel coordinates
/// (x = column, y = row, integers at pixel centers).
struct AffineTransform {
  std::array<double, 6> coef{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  double rmse = 0.0;

  double det() const { return coef[0] * coef[4] - coef[1] * coef[3]; }
  std::array<double, 2> apply(double x, double y) const {
    return {coef[0] * x + coef[1] * y + coef[2], coef[3] * x + coef[4] * y + coef[5]};
  }
  /// Throws NumericError when the linear part is singular.
  AffineTransform inverse() const;
};

AffineTransform fit_affine_gcps(std::span<const GcpPair> pairs);

/// Output pixel (r, c) takes the source pixel nearest to t^-1(c, r).
RasterGrid resample_nearest(const RasterGrid& grid, const AffineTransform& t,
                            std::size_t out_rows, std::size_t out_cols);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Bare Ground, Roof-top, Grass, Roads, Trees, Water.
std::vector<Rgb> default_palette();

/// Writes a binary P6 image; label 0 renders black.
void render_class_map(const ClassMap& map, std::span<const Rgb> palette,
                      const std::filesystem::path& path);

}  // namespace hsf
