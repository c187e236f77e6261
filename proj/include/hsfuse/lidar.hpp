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
#include <span>
#include <vector>

#include "hsfuse/raster.hpp"

namespace hsf {

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
  int return_number = 1;
  bool is_ground = false;
};

/// Reads `x,y,z,intensity,return_number,is_ground` records. `#` lines and a
/// leading non-numeric header line are skipped.
std::vector<LidarPoint> load_points(const std::filesystem::path& path);
std::vector<LidarPoint> parse_points(std::string_view text, std::string_view source = "points");
void write_points(std::span<const LidarPoint> points, const std::filesystem::path& path);

struct Site {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// Delaunay triangulation of planar sites; triangles are counter-clockwise
/// vertex index triples.
struct Tin {
  std::vector<Site> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Bowyer-Watson insertion in (x, y) order. Sites sharing (x, y) collapse to
/// the last one given.
Tin build_tin(std::span<const Site> sites);

/// Samples the TIN at pixel centers with barycentric interpolation. Pixels
/// outside the hull are nodata; a center on a shared edge takes the
/// lowest-index triangle.
RasterGrid rasterize_tin(const Tin& tin, std::size_t rows, std::size_t cols,
                         const GeoAnchor& geo);

struct Surfaces {
  RasterGrid dem;
  RasterGrid dsm;
  RasterGrid ndsm;
  RasterGrid intensity;
};

/// DEM from ground returns, DSM and intensity from first returns,
/// nDSM = max(DSM - DEM, 0).
Surfaces derive_surfaces(std::span<const LidarPoint> points, std::size_t rows,
                         std::size_t cols, const GeoAnchor& geo);

}  // namespace hsf
