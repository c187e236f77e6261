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

// Random gray-level fixtures for tree-of-shapes tests.

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hsfuse/raster.hpp"
#include "hsfuse/rng.hpp"

namespace hsf::oracle {

inline LevelImage random_image(Rng& rng, std::size_t rows, std::size_t cols, std::int32_t levels) {
  LevelImage img{rows, cols, levels, std::vector<std::int32_t>(rows * cols)};
  for (auto& v : img.values) v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(levels)));
  return img;
}

// A 2x2 window whose diagonals split across some threshold.
inline bool diagonal_window(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d) {
  return std::min(a, d) > std::max(b, c) || std::min(b, c) > std::max(a, d);
}

inline bool diagonal_free(const LevelImage& img) {
  for (std::size_t r = 0; r + 1 < img.rows; ++r)
    for (std::size_t c = 0; c + 1 < img.cols; ++c)
      if (diagonal_window(img.at(r, c), img.at(r, c + 1), img.at(r + 1, c), img.at(r + 1, c + 1))) return false;
  return true;
}

inline std::vector<std::int32_t> sorted_border(const LevelImage& img) {
  std::vector<std::int32_t> b;
  for (std::size_t r = 0; r < img.rows; ++r)
    for (std::size_t c = 0; c < img.cols; ++c)
      if (r == 0 || c == 0 || r + 1 == img.rows || c + 1 == img.cols) b.push_back(img.at(r, c));
  std::sort(b.begin(), b.end());
  return b;
}

// Images on which upper and lower connectivity agree and the exterior level
// is unchanged by negation: no diagonal 2x2 window and a border whose two
// middle values coincide. Pixels are drawn in raster order from the values
// that keep the window above-left valid; copying the pixel above always does.
inline LevelImage symmetric_fixture(Rng& rng, std::size_t rows, std::size_t cols, std::int32_t levels) {
  for (;;) {
    LevelImage img{rows, cols, levels, std::vector<std::int32_t>(rows * cols)};
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        auto& v = img.values[r * cols + c];
        if (r == 0 || c == 0) {
          v = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(levels)));
          continue;
        }
        std::vector<std::int32_t> ok;
        for (std::int32_t x = 0; x < levels; ++x)
          if (!diagonal_window(img.at(r - 1, c - 1), img.at(r - 1, c), img.at(r, c - 1), x)) ok.push_back(x);
        v = ok[rng.below(ok.size())];
      }
    const auto b = sorted_border(img);
    if (b[(b.size() - 1) / 2] == b[b.size() / 2]) return img;
  }
}

inline LevelImage negate(const LevelImage& img) {
  LevelImage out = img;
  for (auto& v : out.values) v = img.levels - 1 - v;
  return out;
}

}  // namespace hsf::oracle
