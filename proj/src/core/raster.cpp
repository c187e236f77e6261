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

#include "hsfuse/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>

#include "hsfuse/error.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

namespace {

constexpr const char* kReservedKeys[] = {"rows",       "cols",       "bands",
                                         "nodata",     "origin_x",   "origin_y",
                                         "pixel_size", "interleave", "dtype",
                                         "band_names"};

bool is_reserved(const std::string& key) {
  for (const char* k : kReservedKeys)
    if (key == k) return true;
  return false;
}

std::size_t parse_count(const KeyValueFile& kv, const char* key) {
  const auto v = parse_int(kv.get(key), key);
  if (v < 1) throw DataError(std::string("header field ") + key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

RasterGrid::RasterGrid(std::size_t rows, std::size_t cols, std::size_t bands,
                       float nodata, GeoAnchor geo)
    : rows_(rows), cols_(cols), bands_(bands), nodata_(nodata), geo_(geo) {
  if (rows == 0 || cols == 0 || bands == 0) {
    throw DataError("raster dimensions must be >= 1");
  }
  set_geo(geo);
  data_.assign(rows * cols * bands, 0.0f);
  band_names.resize(bands);
}

void RasterGrid::set_geo(const GeoAnchor& g) {
  if (!(g.pixel_size > 0.0) || !std::isfinite(g.pixel_size)) {
    throw DataError("pixel_size must be positive");
  }
  geo_ = g;
}

bool RasterGrid::is_nodata(float v) const {
  if (std::isnan(nodata_)) return std::isnan(v);
  return v == nodata_;
}

std::span<float> RasterGrid::band(std::size_t b) {
  return std::span<float>(data_).subspan(b * pixels(), pixels());
}

std::span<const float> RasterGrid::band(std::size_t b) const {
  return std::span<const float>(data_).subspan(b * pixels(), pixels());
}

void RasterGrid::validate() const {
  for (float v : data_) {
    if (!is_nodata(v) && !std::isfinite(v)) {
      throw DataError("raster holds a non-finite value that is not the nodata sentinel");
    }
  }
}

bool operator==(const RasterGrid& a, const RasterGrid& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.bands_ != b.bands_) return false;
  if (std::bit_cast<std::uint32_t>(a.nodata_) != std::bit_cast<std::uint32_t>(b.nodata_)) return false;
  if (a.geo_.origin_x != b.geo_.origin_x || a.geo_.origin_y != b.geo_.origin_y ||
      a.geo_.pixel_size != b.geo_.pixel_size)
    return false;
  if (a.band_names != b.band_names || a.metadata != b.metadata) return false;
  return a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::int32_t ClassMap::max_label() const {
  std::int32_t m = 0;
  for (auto v : labels) m = std::max(m, v);
  return m;
}

ClassMap class_map_from_raster(const RasterGrid& grid) {
  if (grid.bands() != 1) throw DataError("class map raster must have exactly one band");
  ClassMap map(grid.rows(), grid.cols());
  const auto band = grid.band(0);
  for (std::size_t i = 0; i < band.size(); ++i) {
    const float v = band[i];
    if (grid.is_nodata(v)) continue;
    if (!(v >= 0.0f) || v != std::floor(v) || v > 65535.0f) {
      throw DataError("class map holds a non-integral or negative label");
    }
    map.labels[i] = static_cast<std::int32_t>(v);
  }
  return map;
}

RasterGrid class_map_to_raster(const ClassMap& map, GeoAnchor geo) {
  RasterGrid grid(map.rows, map.cols, 1, RasterGrid::kDefaultNodata, geo);
  auto band = grid.band(0);
  for (std::size_t i = 0; i < band.size(); ++i) band[i] = static_cast<float>(map.labels[i]);
  grid.band_names[0] = "class";
  return grid;
}

RasterPaths raster_paths(const std::filesystem::path& path) {
  std::filesystem::path base = path;
  if (base.extension() == ".hdr" || base.extension() == ".bin") base.replace_extension();
  std::filesystem::path header = base;
  header += ".hdr";
  std::filesystem::path payload = base;
  payload += ".bin";
  return {header, payload};
}

RasterGrid read_raster(const std::filesystem::path& path) {
  const auto paths = raster_paths(path);
  const auto kv = KeyValueFile::load(paths.header);

  const auto rows = parse_count(kv, "rows");
  const auto cols = parse_count(kv, "cols");
  const auto bands = parse_count(kv, "bands");
  if (kv.get_or("interleave", "bsq") != "bsq") throw DataError("only bsq interleave is supported");
  if (kv.get_or("dtype", "f32le") != "f32le") throw DataError("only f32le payloads are supported");

  GeoAnchor geo;
  geo.origin_x = parse_real(kv.get_or("origin_x", "0"), "origin_x");
  geo.origin_y = parse_real(kv.get_or("origin_y", "0"), "origin_y");
  geo.pixel_size = parse_real(kv.get_or("pixel_size", "1"), "pixel_size");
  const auto nodata = static_cast<float>(
      parse_real(kv.get_or("nodata", format_real(RasterGrid::kDefaultNodata)), "nodata"));

  RasterGrid grid(rows, cols, bands, nodata, geo);
  if (kv.has("band_names")) {
    auto names = split(kv.get("band_names"), ',');
    if (names.size() != bands) throw DataError("band_names count does not match bands");
    grid.band_names = std::move(names);
  }
  for (const auto& [k, v] : kv.entries())
    if (!is_reserved(k)) grid.metadata[k] = v;

  std::ifstream in(paths.payload, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open " + paths.payload.string());
  const auto bytes = static_cast<std::uintmax_t>(in.tellg());
  const std::uintmax_t expected = static_cast<std::uintmax_t>(rows) * cols * bands * 4;
  if (bytes != expected) {
    throw DataError("payload size mismatch for " + paths.payload.string() + ": header implies " +
                    std::to_string(expected / 4) + " values, file holds " +
                    std::to_string(bytes / 4) + (bytes % 4 ? " (plus a partial value)" : ""));
  }
  in.seekg(0);
  auto data = grid.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected));
  if (!in) throw DataError("short read on " + paths.payload.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : data) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
  }
  grid.validate();
  return grid;
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  const auto paths = raster_paths(path);

  KeyValueFile kv;
  kv.set("rows", std::to_string(grid.rows()));
  kv.set("cols", std::to_string(grid.cols()));
  kv.set("bands", std::to_string(grid.bands()));
  kv.set("nodata", format_real(grid.nodata()));
  kv.set("origin_x", format_real(grid.geo().origin_x));
  kv.set("origin_y", format_real(grid.geo().origin_y));
  kv.set("pixel_size", format_real(grid.geo().pixel_size));
  kv.set("interleave", "bsq");
  kv.set("dtype", "f32le");
  bool named = false;
  for (const auto& n : grid.band_names) named = named || !n.empty();
  if (named) {
    std::string joined;
    for (std::size_t b = 0; b < grid.bands(); ++b) {
      if (b) joined += ',';
      const std::string& n = b < grid.band_names.size() ? grid.band_names[b] : std::string();
      if (n.find(',') != std::string::npos || n.find('\n') != std::string::npos) {
        throw DataError("band names may not contain ',' or newlines");
      }
      joined += n;
    }
    kv.set("band_names", joined);
  }
  for (const auto& [k, v] : grid.metadata) {
    if (is_reserved(k)) throw DataError("metadata key '" + k + "' collides with a header field");
    kv.set(k, v);
  }
  write_text_file(paths.header, kv.to_string());

  std::ofstream out(paths.payload, std::ios::binary);
  if (!out) throw DataError("cannot write " + paths.payload.string());
  const auto data = grid.data();
  if constexpr (std::endian::native == std::endian::big) {
    for (float v : data) {
      const auto le = __builtin_bswap32(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&le), 4);
    }
  } else {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!out) throw DataError("write failed for " + paths.payload.string());
}

LevelImage quantize_band(const RasterGrid& grid, std::size_t band, std::int32_t levels) {
  if (band >= grid.bands()) throw UsageError("band index out of range");
  if (levels < 2 || levels > 65536) throw UsageError("levels must be in [2, 65536]");

  const auto values = grid.band(band);
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (float v : values) {
    if (grid.is_nodata(v)) continue;
    if (!any) {
      lo = hi = v;
      any = true;
    }
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  if (!any) throw DataError("band " + std::to_string(band) + " holds only nodata");

  LevelImage out{grid.rows(), grid.cols(), levels, std::vector<std::int32_t>(values.size(), 0)};
  const double range = hi - lo;
  const double top = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (grid.is_nodata(values[i])) {
      out.values[i] = -1;
    } else if (range > 0.0) {
      const double q = std::floor((values[i] - lo) / range * top + 0.5);
      out.values[i] = static_cast<std::int32_t>(std::clamp(q, 0.0, top));
    }
  }
  return out;
}

RasterGrid fill_nodata_nearest(const RasterGrid& grid) {
  RasterGrid out = grid;
  const std::size_t rows = grid.rows(), cols = grid.cols();
  for (std::size_t b = 0; b < grid.bands(); ++b) {
    auto band = out.band(b);
    std::vector<char> known(band.size(), 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < band.size(); ++i) {
      if (!grid.is_nodata(band[i])) {
        known[i] = 1;
        queue.push_back(i);
      }
    }
    if (queue.empty()) throw DataError("band " + std::to_string(b) + " holds only nodata");
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const std::size_t r = i / cols, c = i % cols;
      const std::size_t nbr[4] = {r > 0 ? i - cols : i, c > 0 ? i - 1 : i,
                                  c + 1 < cols ? i + 1 : i, r + 1 < rows ? i + cols : i};
      for (std::size_t j : nbr) {
        if (known[j]) continue;
        known[j] = 1;
        band[j] = band[i];
        queue.push_back(j);
      }
    }
  }
  return out;
}

AffineTransform AffineTransform::inverse() const {
  const double d = det();
  if (!(std::abs(d) > 1e-300) || !std::isfinite(d)) {
    throw NumericError("affine transform is not invertible");
  }
  const auto& [a, b, c, dd, e, f] = coef;
  AffineTransform inv;
  inv.coef = {e / d, -b / d, (b * f - c * e) / d, -dd / d, a / d, (c * dd - a * f) / d};
  inv.rmse = rmse;
  return inv;
}

AffineTransform fit_affine_gcps(std::span<const GcpPair> pairs) {
  if (pairs.size() < 3) throw DataError("affine fit needs at least 3 control points");
  for (const auto& p : pairs) {
    if (!std::isfinite(p.src_x) || !std::isfinite(p.src_y) || !std::isfinite(p.dst_x) ||
        !std::isfinite(p.dst_y))
      throw DataError("control point coordinates must be finite");
  }

  // Centered normal equations: the translation decouples from the linear part.
  const double n = static_cast<double>(pairs.size());
  double mx = 0, my = 0, mu = 0, mv = 0;
  for (const auto& p : pairs) {
    mx += p.src_x;
    my += p.src_y;
    mu += p.dst_x;
    mv += p.dst_y;
  }
  mx /= n;
  my /= n;
  mu /= n;
  mv /= n;

  double sxx = 0, sxy = 0, syy = 0, sxu = 0, syu = 0, sxv = 0, syv = 0;
  for (const auto& p : pairs) {
    const double x = p.src_x - mx, y = p.src_y - my;
    const double u = p.dst_x - mu, v = p.dst_y - mv;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    sxu += x * u;
    syu += y * u;
    sxv += x * v;
    syv += y * v;
  }
  const double det = sxx * syy - sxy * sxy;
  const double scale = (sxx + syy) * (sxx + syy);
  if (!(scale > 0.0) || det <= 1e-12 * scale) {
    throw DataError("control points are collinear; affine fit is rank deficient");
  }

  AffineTransform t;
  auto& k = t.coef;
  k[0] = (sxu * syy - syu * sxy) / det;
  k[1] = (syu * sxx - sxu * sxy) / det;
  k[2] = mu - k[0] * mx - k[1] * my;
  k[3] = (sxv * syy - syv * sxy) / det;
  k[4] = (syv * sxx - sxv * sxy) / det;
  k[5] = mv - k[3] * mx - k[4] * my;

  if (!(std::abs(t.det()) > 0.0)) throw NumericError("fitted transform is singular");

  double sum_sq = 0.0;
  for (const auto& p : pairs) {
    const auto q = t.apply(p.src_x, p.src_y);
    const double dx = q[0] - p.dst_x, dy = q[1] - p.dst_y;
    sum_sq += dx * dx + dy * dy;
  }
  t.rmse = std::sqrt(sum_sq / n);
  return t;
}

RasterGrid resample_nearest(const RasterGrid& grid, const AffineTransform& t,
                            std::size_t out_rows, std::size_t out_cols) {
  const AffineTransform inv = t.inverse();
  RasterGrid out(out_rows, out_cols, grid.bands(), grid.nodata(), grid.geo());
  out.band_names = grid.band_names;
  out.metadata = grid.metadata;

  const auto src_rows = static_cast<double>(grid.rows());
  const auto src_cols = static_cast<double>(grid.cols());
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      const auto s = inv.apply(static_cast<double>(c), static_cast<double>(r));
      const double sc = std::floor(s[0] + 0.5);
      const double sr = std::floor(s[1] + 0.5);
      const bool inside = sc >= 0.0 && sr >= 0.0 && sc < src_cols && sr < src_rows;
      for (std::size_t b = 0; b < grid.bands(); ++b) {
        out.at(b, r, c) = inside ? grid.at(b, static_cast<std::size_t>(sr), static_cast<std::size_t>(sc))
                                 : grid.nodata();
      }
    }
  }
  return out;
}

std::vector<Rgb> default_palette() {
  return {
      {166, 118, 62},   // bare ground
      {214, 48, 39},    // roof-top
      {140, 220, 90},   // grass
      {128, 128, 128},  // roads
      {26, 110, 40},    // trees
      {40, 96, 220},    // water
  };
}

void render_class_map(const ClassMap& map, std::span<const Rgb> palette,
                      const std::filesystem::path& path) {
  std::string buf = "P6\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n255\n";
  const std::size_t header = buf.size();
  buf.resize(header + map.labels.size() * 3);
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    const auto label = map.labels[i];
    Rgb px{};
    if (label < 0 || static_cast<std::size_t>(label) > palette.size()) {
      throw DataError("label " + std::to_string(label) + " has no palette entry");
    }
    if (label > 0) px = palette[static_cast<std::size_t>(label) - 1];
    buf[header + 3 * i] = static_cast<char>(px.r);
    buf[header + 3 * i + 1] = static_cast<char>(px.g);
    buf[header + 3 * i + 2] = static_cast<char>(px.b);
  }
  write_text_file(path, buf);
}

}  // namespace hsf
