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

#include "hsfuse/tree_of_shapes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "hsfuse/error.hpp"

namespace hsf {

namespace {

// Shapes form a tree, so two shapes sharing a pixel are nested and equal
// area then means equal sets: (smallest pixel index, area) names a shape.
struct ShapeKey {
  std::uint32_t min_pixel;
  std::uint32_t area;

  std::uint64_t packed() const { return (static_cast<std::uint64_t>(min_pixel) << 32) | area; }
};

// Connected components of [u >= lambda] and [u < lambda] at one threshold,
// linked into their adjacency tree rooted at the component holding the
// exterior pixel. Components are discovered breadth-first, so a component's
// parent is the neighbor through which it was reached.
class LevelPartition {
 public:
  LevelPartition(const LevelImage& image, std::int32_t exterior)
      : img_(image), exterior_(exterior), comp_(image.values.size()) {
    const std::size_t rows = img_.rows, cols = img_.cols;
    for (std::size_t c = 0; c < cols; ++c) {
      border_.push_back(static_cast<std::uint32_t>(c));
      if (rows > 1) border_.push_back(static_cast<std::uint32_t>((rows - 1) * cols + c));
    }
    for (std::size_t r = 1; r + 1 < rows; ++r) {
      border_.push_back(static_cast<std::uint32_t>(r * cols));
      if (cols > 1) border_.push_back(static_cast<std::uint32_t>(r * cols + cols - 1));
    }
  }

  void analyze(std::int32_t lambda) {
    lambda_ = lambda;
    std::fill(comp_.begin(), comp_.end(), kUnset);
    parent_.clear();
    area_.clear();
    min_pixel_.clear();
    seeds_.clear();

    const bool root_upper = exterior_ >= lambda;
    // Root: every border pixel on the exterior's side, joined through the
    // exterior pixel.
    open_component(kNone);
    for (auto p : border_) {
      if (upper(p) == root_upper && comp_[p] == kUnset) flood(p, 0);
    }
    for (auto p : border_) {
      if (upper(p) != root_upper) seeds_.push_back({p, 0});
    }

    for (std::size_t s = 0; s < seeds_.size(); ++s) {
      const auto [pixel, from] = seeds_[s];
      if (comp_[pixel] != kUnset) continue;
      const auto id = open_component(from);
      flood(pixel, id);
    }

    // Subtree totals; children always come after their parent.
    for (std::size_t c = parent_.size(); c-- > 1;) {
      const auto up = parent_[c];
      area_[up] += area_[c];
      min_pixel_[up] = std::min(min_pixel_[up], min_pixel_[c]);
    }
  }

  std::uint32_t component(std::uint32_t pixel) const { return comp_[pixel]; }
  std::uint32_t parent(std::uint32_t c) const { return parent_[c]; }
  std::size_t components() const { return parent_.size(); }
  ShapeKey key(std::uint32_t c) const { return {min_pixel_[c], area_[c]}; }

 private:
  static constexpr std::uint32_t kUnset = ~std::uint32_t{0};
  static constexpr std::uint32_t kNone = ~std::uint32_t{0};

  struct Seed {
    std::uint32_t pixel;
    std::uint32_t from;
  };

  bool upper(std::uint32_t p) const { return img_.values[p] >= lambda_; }

  std::uint32_t open_component(std::uint32_t from) {
    parent_.push_back(from);
    area_.push_back(0);
    min_pixel_.push_back(kUnset);
    return static_cast<std::uint32_t>(parent_.size() - 1);
  }

  void flood(std::uint32_t start, std::uint32_t id) {
    const auto rows = static_cast<std::int64_t>(img_.rows), cols = static_cast<std::int64_t>(img_.cols);
    const bool side = upper(start);
    const int reach = side ? 8 : 4;
    static constexpr int dr[8] = {-1, 0, 0, 1, -1, -1, 1, 1};
    static constexpr int dc[8] = {0, -1, 1, 0, -1, 1, -1, 1};

    stack_.clear();
    stack_.push_back(start);
    comp_[start] = id;
    while (!stack_.empty()) {
      const auto p = stack_.back();
      stack_.pop_back();
      ++area_[id];
      min_pixel_[id] = std::min(min_pixel_[id], p);
      const std::int64_t r = p / cols, c = p % cols;
      for (int k = 0; k < 8; ++k) {
        const std::int64_t nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
        const auto q = static_cast<std::uint32_t>(nr * cols + nc);
        if (upper(q) == side) {
          if (k < reach && comp_[q] == kUnset) {
            comp_[q] = id;
            stack_.push_back(q);
          }
        } else if (k < 4 && comp_[q] == kUnset) {
          // Opposite sides only touch through 4-adjacency.
          seeds_.push_back({q, id});
        }
      }
    }
  }

  const LevelImage& img_;
  std::int32_t exterior_;
  std::int32_t lambda_ = 0;
  std::vector<std::uint32_t> comp_;
  std::vector<std::uint32_t> border_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> area_;
  std::vector<std::uint32_t> min_pixel_;
  std::vector<Seed> seeds_;
  std::vector<std::uint32_t> stack_;
};

std::vector<std::int32_t> distinct_levels(const LevelImage& image) {
  std::vector<std::int32_t> levels = image.values;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

}  // namespace

std::int32_t exterior_level(const LevelImage& image) {
  std::vector<std::int32_t> border;
  const std::size_t rows = image.rows, cols = image.cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (r == 0 || c == 0 || r + 1 == rows || c + 1 == cols) border.push_back(image.at(r, c));
    }
  }
  const auto mid = border.begin() + static_cast<std::ptrdiff_t>((border.size() - 1) / 2);
  std::nth_element(border.begin(), mid, border.end());
  return *mid;
}

TreeOfShapes build_tree(const LevelImage& image) {
  const std::size_t n = image.values.size();
  if (n == 0 || image.rows * image.cols != n) throw DataError("tree of shapes needs a non-empty image");
  if (n >= (std::size_t{1} << 32) - 1) throw DataError("image too large for the tree of shapes");
  for (auto v : image.values) {
    if (v < 0 || v > 65535) throw DataError("tree of shapes needs levels in [0, 65535] with no nodata");
  }

  const auto levels = distinct_levels(image);
  const auto domain = static_cast<std::uint32_t>(n);
  LevelPartition part(image, exterior_level(image));

  // Pass 1: every shape, and the smallest shape holding each pixel.
  std::vector<std::uint64_t> keys;
  std::vector<ShapeKey> smallest(n, ShapeKey{0, domain});
  keys.push_back(ShapeKey{0, domain}.packed());
  for (std::size_t li = 1; li < levels.size(); ++li) {
    part.analyze(levels[li]);
    for (std::uint32_t c = 1; c < part.components(); ++c) keys.push_back(part.key(c).packed());
    for (std::uint32_t p = 0; p < n; ++p) {
      const auto c = part.component(p);
      if (c == 0) continue;
      const auto k = part.key(c);
      if (k.area < smallest[p].area) smallest[p] = k;
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  // Node order: area descending, then key, so the root is node 0.
  std::vector<std::uint32_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto aa = static_cast<std::uint32_t>(keys[a]), ab = static_cast<std::uint32_t>(keys[b]);
    return aa != ab ? aa > ab : keys[a] < keys[b];
  });
  std::unordered_map<std::uint64_t, std::uint32_t> node_of;
  node_of.reserve(keys.size() * 2);
  for (std::uint32_t i = 0; i < order.size(); ++i) node_of.emplace(keys[order[i]], i);
  auto node_for = [&](ShapeKey k) {
    auto it = node_of.find(k.packed());
    if (it == node_of.end()) throw std::logic_error("tree of shapes: unknown shape key");
    return it->second;
  };

  // Pass 2: the parent of a shape is the smallest strictly larger shape that
  // contains its smallest pixel. Shapes are grouped by that pixel in
  // ascending area, and every threshold contributes the ancestor chain of
  // that pixel's component.
  const std::size_t count = keys.size();
  std::vector<std::uint32_t> parent(count, TreeOfShapes::root);
  std::vector<std::uint32_t> parent_area(count, domain + 1);
  struct Anchor {
    std::uint32_t pixel;
    std::vector<std::uint32_t> nodes;  // ascending area
  };
  std::vector<Anchor> anchors;
  {
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_pixel;
    for (std::uint32_t node = 1; node < count; ++node) {
      by_pixel[static_cast<std::uint32_t>(keys[order[node]] >> 32)].push_back(node);
    }
    anchors.reserve(by_pixel.size());
    for (auto& [pixel, nodes] : by_pixel) {
      std::sort(nodes.begin(), nodes.end(), std::greater<>());
      anchors.push_back({pixel, std::move(nodes)});
    }
    std::sort(anchors.begin(), anchors.end(),
              [](const Anchor& a, const Anchor& b) { return a.pixel < b.pixel; });
  }

  std::vector<ShapeKey> chain;
  for (std::size_t li = 1; li < levels.size(); ++li) {
    part.analyze(levels[li]);
    for (const auto& anchor : anchors) {
      chain.clear();
      for (auto c = part.component(anchor.pixel); c != 0; c = part.parent(c)) chain.push_back(part.key(c));
      chain.push_back(ShapeKey{0, domain});
      std::size_t ci = 0;
      for (auto node : anchor.nodes) {
        const auto area = static_cast<std::uint32_t>(keys[order[node]]);
        while (ci < chain.size() && chain[ci].area <= area) ++ci;
        if (ci == chain.size()) break;
        if (chain[ci].area < parent_area[node]) {
          parent_area[node] = chain[ci].area;
          parent[node] = node_for(chain[ci]);
        }
      }
    }
  }

  TreeOfShapes tree;
  tree.rows = image.rows;
  tree.cols = image.cols;
  tree.levels = image.levels;
  tree.parent = std::move(parent);
  tree.pixel_node.resize(n);
  for (std::uint32_t p = 0; p < n; ++p) tree.pixel_node[p] = node_for(smallest[p]);

  constexpr std::int32_t kNoLevel = -1;
  tree.level.assign(count, kNoLevel);
  for (std::uint32_t p = 0; p < n; ++p) {
    auto& lv = tree.level[tree.pixel_node[p]];
    if (lv == kNoLevel) {
      lv = image.values[p];
    } else if (lv != image.values[p]) {
      throw std::logic_error("tree of shapes: node holds pixels of different levels");
    }
  }
  for (std::size_t node = 0; node < count; ++node) {
    if (tree.level[node] == kNoLevel) throw std::logic_error("tree of shapes: node without own pixels");
  }
  return tree;
}

AttributeTable compute_attributes(const TreeOfShapes& tree, const LevelImage& image) {
  const std::size_t count = tree.size();
  std::vector<std::int64_t> n(count, 0), s1(count, 0), s2(count, 0);
  for (std::size_t p = 0; p < tree.pixel_node.size(); ++p) {
    const auto node = tree.pixel_node[p];
    const std::int64_t v = image.values[p];
    ++n[node];
    s1[node] += v;
    s2[node] += v * v;
  }
  for (std::size_t node = count; node-- > 1;) {
    const auto up = tree.parent[node];
    n[up] += n[node];
    s1[up] += s1[node];
    s2[up] += s2[node];
  }
  AttributeTable t;
  t.area.resize(count);
  t.mean.resize(count);
  t.stddev.resize(count);
  for (std::size_t node = 0; node < count; ++node) {
    const double a = static_cast<double>(n[node]);
    const double mean = static_cast<double>(s1[node]) / a;
    // Exact integer numerator: a * sum(v^2) - sum(v)^2 >= 0.
    const long double num = static_cast<long double>(n[node]) * s2[node] -
                            static_cast<long double>(s1[node]) * s1[node];
    t.area[node] = a;
    t.mean[node] = mean;
    t.stddev[node] = std::sqrt(static_cast<double>(std::max<long double>(num, 0.0L))) / a;
  }
  return t;
}

const char* attribute_name(Attribute a) { return a == Attribute::area ? "area" : "std"; }

Attribute parse_attribute(std::string_view name) {
  if (name == "area") return Attribute::area;
  if (name == "std" || name == "stddev") return Attribute::stddev;
  throw UsageError("unknown attribute '" + std::string(name) + "'");
}

LevelImage filter_tree(const TreeOfShapes& tree, const AttributeTable& attrs, Attribute attribute,
                       double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("filter threshold must be >= 0");
  const auto& values = attribute == Attribute::area ? attrs.area : attrs.stddev;
  std::vector<std::int32_t> out_level(tree.size());
  out_level[0] = tree.level[0];
  for (std::size_t node = 1; node < tree.size(); ++node) {
    out_level[node] = values[node] < lambda ? out_level[tree.parent[node]] : tree.level[node];
  }
  LevelImage out{tree.rows, tree.cols, tree.levels, std::vector<std::int32_t>(tree.pixel_node.size())};
  for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] = out_level[tree.pixel_node[p]];
  return out;
}

LevelImage reconstruct(const TreeOfShapes& tree) {
  LevelImage out{tree.rows, tree.cols, tree.levels, std::vector<std::int32_t>(tree.pixel_node.size())};
  for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] = tree.level[tree.pixel_node[p]];
  return out;
}

}  // namespace hsf
