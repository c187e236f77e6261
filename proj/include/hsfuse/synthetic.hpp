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
#include <string>
#include <vector>

#include "hsfuse/lidar.hpp"
#include "hsfuse/raster.hpp"

namespace hsf {

inline constexpr std::int32_t kSceneClasses = 6;

/// Class ids 1..6 in scene order.
inline const std::array<const char*, kSceneClasses> kSceneClassNames = {
    "bare_ground", "roof", "grass", "road", "trees", "water"};

struct SceneSpec {
  std::size_t rows = 128;
  std::size_t cols = 128;
  std::size_t bands = 32;
  std::size_t region_rows = 6;  // regions form a jittered region_rows x region_cols layout
  std::size_t region_cols = 8;
  double pixel_size = 1.0;
  double spectral_noise = 2.0;   // per-band reflectance noise, percent
  double intensity_noise = 6.0;  // per-return intensity noise, DN
  double height_noise = 0.05;    // per-return elevation noise, m
  double canopy_roughness = 0.1; // tree-top height spread, m
  double point_density = 2.0;    // returns per square pixel
  std::size_t margin = 3;        // pixels of point coverage beyond the raster
  std::size_t min_class_pixels = 21;

  void validate() const;
};

struct SyntheticScene {
  RasterGrid hyper;      // reflectance in percent
  RasterGrid ndsm;       // true object height
  RasterGrid intensity;  // per-pixel class intensity plus noise
  ClassMap classes;
  std::vector<LidarPoint> points;
};

/// Mean reflectance spectrum of a scene class sampled at `bands` bands.
std::vector<double> class_signature(std::int32_t cls, std::size_t bands);
double class_intensity(std::int32_t cls);

SyntheticScene generate_synthetic_scene(const SceneSpec& spec, std::uint64_t seed);

}  // namespace hsf
