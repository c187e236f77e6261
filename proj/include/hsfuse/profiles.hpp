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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsfuse/raster.hpp"
#include "hsfuse/tree_of_shapes.hpp"

namespace hsf {

struct Thresholds {
  std::vector<double> values;  // strictly increasing
  bool degenerate = false;     // every candidate attribute value was equal
};

/// Linear-interpolation percentile of an ascending sample, q in [0, 1].
double percentile(std::span<const double> sorted, double q);

/// Automatic thresholds over non-root attribute values.
///  area:   L values log-spaced strictly inside [p5, p95];
///  stddev: the i/(L+1) quantiles, i = 1..L.
/// Coinciding values are merged and the list is refilled with midpoints of
/// the widest remaining gaps (bounded by the attribute range) when possible.
Thresholds auto_thresholds(std::span<const double> values, Attribute attribute, std::size_t count);
Thresholds auto_thresholds(const AttributeTable& attrs, Attribute attribute, std::size_t count);

/// "auto:N", "none", or an explicit comma-separated list.
struct ThresholdSpec {
  bool automatic = true;
  std::size_t count = 2;
  std::vector<double> values;

  static ThresholdSpec parse(std::string_view text);
  std::size_t size() const { return automatic ? count : values.size(); }
  std::string to_string() const;
};

struct ProfileOptions {
  ThresholdSpec area;
  ThresholdSpec stddev;
  std::int32_t levels = 256;
};

struct ProfileTag {
  std::size_t component = 0;
  std::string attribute;  // "orig", "area" or "std"
  std::size_t ordinal = 0;
  double threshold = 0.0;

  /// e.g. "fc2.area1@13.5"; used as the band name.
  std::string to_string() const;
};

struct ProfileBand {
  LevelImage image;
  ProfileTag tag;
};

/// Self-dual attribute profile: the input, then one filtering per area
/// threshold and per stddev threshold, each ascending.
struct ProfileStack {
  std::vector<ProfileBand> bands;
  bool degenerate_thresholds = false;
};

ProfileStack sdap(const LevelImage& image, const ProfileOptions& options, std::size_t component = 0);

/// Fills nodata, min-max normalizes and quantizes every band of `components`,
/// and concatenates their profiles in band order. Output values are gray
/// levels; pixels that were nodata in the input stay nodata.
RasterGrid esdap(const RasterGrid& components, const ProfileOptions& options,
                 bool* degenerate = nullptr);

}  // namespace hsf
