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
#include <cstdint>
#include <string_view>
#include <vector>

#include "hsfuse/raster.hpp"

namespace hsf {

/// Inclusion tree of the shapes of a quantized image.
///
/// A shape is the saturation (hole filling) of a connected component of an
/// upper set [u >= l] (8-connected) or a lower set [u < l] (4-connected).
/// Saturation is taken with respect to a virtual pixel outside the image
/// frame whose gray value is the lower median of the border pixels, so the
/// root is always the whole domain.
///
/// Nodes are numbered by non-increasing area; node 0 is the root and every
/// parent precedes its children.
struct TreeOfShapes {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::int32_t levels = 0;
  std::vector<std::uint32_t> parent;      // parent[0] == 0
  std::vector<std::int32_t> level;        // gray level of the node's own pixels
  std::vector<std::uint32_t> pixel_node;  // smallest shape containing each pixel

  std::size_t size() const { return parent.size(); }
  static constexpr std::uint32_t root = 0;
};

/// Gray value of the virtual exterior pixel.
std::int32_t exterior_level(const LevelImage& image);

TreeOfShapes build_tree(const LevelImage& image);

/// Per-node statistics over the full shape support (descendants included).
struct AttributeTable {
  std::vector<double> area;
  std::vector<double> mean;
  std::vector<double> stddev;
};

AttributeTable compute_attributes(const TreeOfShapes& tree, const LevelImage& image);

enum class Attribute { area, stddev };

const char* attribute_name(Attribute a);
Attribute parse_attribute(std::string_view name);

/// Removes every non-root node whose attribute is below lambda; pixels of a
/// removed node take the level of the nearest kept ancestor.
LevelImage filter_tree(const TreeOfShapes& tree, const AttributeTable& attrs,
                       Attribute attribute, double lambda);

/// Pixel values from node levels (with every node kept).
LevelImage reconstruct(const TreeOfShapes& tree);

}  // namespace hsf
