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

#include "hsfuse/profiles.hpp"

#include <algorithm>
#include <cmath>

#include "hsfuse/error.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Thresholds auto_thresholds(std::span<const double> values, Attribute attribute, std::size_t count) {
  if (count == 0) throw UsageError("threshold count must be >= 1");
  if (values.empty()) throw DataError("automatic thresholds need at least one non-root node");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front(), hi = sorted.back();

  Thresholds out;
  if (lo == hi) {
    out.values = {lo};
    out.degenerate = true;
    return out;
  }

  std::vector<double> t;
  const double steps = static_cast<double>(count + 1);
  if (attribute == Attribute::area) {
    const double a = std::log(std::max(percentile(sorted, 0.05), 1e-12));
    const double b = std::log(std::max(percentile(sorted, 0.95), 1e-12));
    for (std::size_t i = 1; i <= count; ++i) t.push_back(std::exp(a + (b - a) * static_cast<double>(i) / steps));
  } else {
    for (std::size_t i = 1; i <= count; ++i) t.push_back(percentile(sorted, static_cast<double>(i) / steps));
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());

  while (t.size() < count) {
    std::vector<double> fence;
    fence.push_back(lo);
    fence.insert(fence.end(), t.begin(), t.end());
    fence.push_back(hi);
    std::sort(fence.begin(), fence.end());
    fence.erase(std::unique(fence.begin(), fence.end()), fence.end());
    double best_gap = 0.0, mid = 0.0;
    for (std::size_t i = 0; i + 1 < fence.size(); ++i) {
      const double gap = fence[i + 1] - fence[i];
      const double m = fence[i] + 0.5 * gap;
      if (gap > best_gap && m > fence[i] && m < fence[i + 1]) {
        best_gap = gap;
        mid = m;
      }
    }
    if (best_gap == 0.0) break;
    t.insert(std::upper_bound(t.begin(), t.end(), mid), mid);
  }
  out.values = std::move(t);
  return out;
}

Thresholds auto_thresholds(const AttributeTable& attrs, Attribute attribute, std::size_t count) {
  const auto& all = attribute == Attribute::area ? attrs.area : attrs.stddev;
  if (all.size() < 2) throw DataError("automatic thresholds need at least one non-root node");
  return auto_thresholds(std::span<const double>(all).subspan(1), attribute, count);
}

ThresholdSpec ThresholdSpec::parse(std::string_view text) {
  text = trim(text);
  ThresholdSpec spec;
  if (text == "none" || text == "auto:0") {
    spec.automatic = false;
    return spec;
  }
  if (text.substr(0, 5) == "auto:") {
    const auto n = parse_int(text.substr(5), "threshold count");
    if (n < 0) throw UsageError("threshold count must be >= 0");
    spec.count = static_cast<std::size_t>(n);
    return spec;
  }
  if (text == "auto") return spec;
  spec.automatic = false;
  for (const auto& item : split(text, ',')) {
    const double v = parse_real(item, "threshold");
    if (!(v >= 0.0)) throw UsageError("thresholds must be >= 0");
    spec.values.push_back(v);
  }
  std::sort(spec.values.begin(), spec.values.end());
  return spec;
}

std::string ThresholdSpec::to_string() const {
  if (automatic) return "auto:" + std::to_string(count);
  if (values.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_real(values[i]);
  }
  return s;
}

std::string ProfileTag::to_string() const {
  std::string s = "fc" + std::to_string(component + 1) + "." + attribute;
  if (attribute != "orig") s += std::to_string(ordinal + 1) + "@" + format_real(threshold);
  return s;
}

namespace {

// Resolves a spec to exactly spec.size() thresholds; a short automatic list
// is padded by repeating its last entry so feature counts stay fixed.
std::vector<double> resolve(const ThresholdSpec& spec, const AttributeTable& attrs, Attribute attribute,
                            bool& degenerate) {
  if (!spec.automatic) return spec.values;
  if (spec.count == 0) return {};
  std::vector<double> values;
  if (attrs.area.size() < 2) {
    degenerate = true;
  } else {
    auto t = auto_thresholds(attrs, attribute, spec.count);
    degenerate = degenerate || t.degenerate;
    values = std::move(t.values);
  }
  if (values.empty()) values.push_back(0.0);
  while (values.size() < spec.count) values.push_back(values.back());
  return values;
}

}  // namespace

ProfileStack sdap(const LevelImage& image, const ProfileOptions& options, std::size_t component) {
  const TreeOfShapes tree = build_tree(image);
  const AttributeTable attrs = compute_attributes(tree, image);

  ProfileStack stack;
  stack.bands.push_back({image, {component, "orig", 0, 0.0}});
  const std::pair<Attribute, const ThresholdSpec*> parts[] = {{Attribute::area, &options.area},
                                                             {Attribute::stddev, &options.stddev}};
  for (const auto& [attribute, spec] : parts) {
    const auto thresholds = resolve(*spec, attrs, attribute, stack.degenerate_thresholds);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      stack.bands.push_back({filter_tree(tree, attrs, attribute, thresholds[i]),
                             {component, attribute_name(attribute), i, thresholds[i]}});
    }
  }
  return stack;
}

RasterGrid esdap(const RasterGrid& components, const ProfileOptions& options, bool* degenerate) {
  const std::size_t k = components.bands();
  const std::size_t per = 1 + options.area.size() + options.stddev.size();
  const RasterGrid filled = fill_nodata_nearest(components);

  std::vector<ProfileStack> stacks(k);
  parallel_for(k, [&](std::size_t c) {
    stacks[c] = sdap(quantize_band(filled, c, options.levels), options, c);
  });

  RasterGrid out(components.rows(), components.cols(), k * per, components.nodata(), components.geo());
  bool any_degenerate = false;
  for (std::size_t c = 0; c < k; ++c) {
    any_degenerate = any_degenerate || stacks[c].degenerate_thresholds;
    for (std::size_t j = 0; j < per; ++j) {
      const auto& pb = stacks[c].bands[j];
      const std::size_t b = c * per + j;
      auto dst = out.band(b);
      const auto src = components.band(c);
      for (std::size_t p = 0; p < dst.size(); ++p) {
        dst[p] = components.is_nodata(src[p]) ? out.nodata() : static_cast<float>(pb.image.values[p]);
      }
      out.band_names[b] = pb.tag.to_string();
    }
  }
  out.metadata["profile_levels"] = std::to_string(options.levels);
  out.metadata["profile_area"] = options.area.to_string();
  out.metadata["profile_std"] = options.stddev.to_string();
  if (degenerate) *degenerate = any_degenerate;
  return out;
}

}  // namespace hsf
