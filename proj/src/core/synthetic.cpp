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

#include "hsfuse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsfuse/error.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

namespace {

enum SceneClass : std::int32_t { kBare = 1, kRoof, kGrass, kRoad, kTrees, kWater };

struct Region {
  double x = 0.0, y = 0.0;  // seed in map coordinates
  std::int32_t cls = 0;
  double height = 0.0;      // roof height for roofs, canopy height for trees
};

double vegetation(double t) {
  // Green bump, red absorption, red edge, then a slowly falling NIR plateau.
  const double visible = 5.0 + 3.0 * std::exp(-std::pow((t - 0.08) / 0.04, 2.0));
  const double edge = 1.0 / (1.0 + std::exp(-(t - 0.25) / 0.025));
  return visible * (1.0 - edge) + (42.0 - 14.0 * std::max(t - 0.3, 0.0)) * edge;
}

class Layout {
 public:
  Layout(const SceneSpec& spec, Rng& rng) : spec_(spec) {
    const double h = static_cast<double>(spec.rows) * spec.pixel_size;
    const double w = static_cast<double>(spec.cols) * spec.pixel_size;
    const std::size_t n = spec.region_rows * spec.region_cols;
    std::vector<std::int32_t> cls(n);
    for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<std::int32_t>(i % kSceneClasses) + 1;
    rng.shuffle(cls);
    for (std::size_t i = 0; i < n; ++i) {
      const double cy = (static_cast<double>(i / spec.region_cols) + rng.uniform(0.2, 0.8)) / spec.region_rows;
      const double cx = (static_cast<double>(i % spec.region_cols) + rng.uniform(0.2, 0.8)) / spec.region_cols;
      Region r{cx * w, h - cy * h, cls[i], 0.0};
      if (r.cls == kRoof) r.height = rng.uniform(6.0, 10.0);
      if (r.cls == kTrees) r.height = 8.0;
      regions_.push_back(r);
    }
  }

  // Nearest region seed; ties go to the lower index.
  const Region& at(double x, double y) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const double dx = regions_[i].x - x, dy = regions_[i].y - y;
      const double d = dx * dx + dy * dy;
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return regions_[best];
  }

  static double ground(double x, double y) { return 100.0 + 0.04 * x + 0.02 * y; }

 private:
  const SceneSpec& spec_;
  std::vector<Region> regions_;
};

}  // namespace

void SceneSpec::validate() const {
  if (rows < 16 || cols < 16) throw UsageError("synthetic scene must be at least 16x16 pixels");
  if (bands < 2) throw UsageError("synthetic scene needs at least 2 bands");
  if (region_rows * region_cols < static_cast<std::size_t>(kSceneClasses))
    throw UsageError("synthetic scene needs at least one region per class");
  if (rows / region_rows < 4 || cols / region_cols < 4)
    throw UsageError("synthetic scene regions would be smaller than 4 pixels across");
  if (!(pixel_size > 0.0) || !(point_density > 0.0)) throw UsageError("pixel size and point density must be positive");
  if (spectral_noise < 0.0 || intensity_noise < 0.0 || height_noise < 0.0 || canopy_roughness < 0.0)
    throw UsageError("noise levels must be non-negative");
}

std::vector<double> class_signature(std::int32_t cls, std::size_t bands) {
  std::vector<double> s(bands);
  for (std::size_t j = 0; j < bands; ++j) {
    const double t = bands > 1 ? static_cast<double>(j) / static_cast<double>(bands - 1) : 0.0;
    const double roof = 24.0 + 6.0 * t + 1.5 * std::sin(6.0 * t);
    switch (cls) {
      case kBare: s[j] = roof + 1.2 - 1.6 * t; break;
      case kRoof: s[j] = roof; break;
      case kGrass: s[j] = vegetation(t); break;
      case kRoad: s[j] = roof - 0.3; break;
      case kTrees: s[j] = vegetation(t) - 0.25; break;
      case kWater: s[j] = 4.0 + 6.0 * std::exp(-4.0 * t); break;
      default: throw UsageError("scene class out of range");
    }
  }
  return s;
}

double class_intensity(std::int32_t cls) {
  static constexpr double kLevels[kSceneClasses] = {120.0, 70.0, 170.0, 120.0, 110.0, 20.0};
  if (cls < 1 || cls > kSceneClasses) throw UsageError("scene class out of range");
  return kLevels[cls - 1];
}

namespace {

// Sensors report non-negative intensities.
double noisy_intensity(std::int32_t cls, Rng& rng, double noise) {
  return std::max(0.0, class_intensity(cls) + rng.normal(0.0, noise));
}

}  // namespace

SyntheticScene generate_synthetic_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng layout_rng(derive_seed(seed, "scene.layout"));
  const Layout layout(spec, layout_rng);
  const GeoAnchor geo{0.0, static_cast<double>(spec.rows) * spec.pixel_size, spec.pixel_size};

  SyntheticScene scene;
  scene.classes = ClassMap(spec.rows, spec.cols);
  scene.hyper = RasterGrid(spec.rows, spec.cols, spec.bands, RasterGrid::kDefaultNodata, geo);
  scene.ndsm = RasterGrid(spec.rows, spec.cols, 1, RasterGrid::kDefaultNodata, geo);
  scene.intensity = RasterGrid(spec.rows, spec.cols, 1, RasterGrid::kDefaultNodata, geo);

  std::vector<std::vector<double>> signatures;
  for (std::int32_t k = 1; k <= kSceneClasses; ++k) signatures.push_back(class_signature(k, spec.bands));

  Rng pixel_rng(derive_seed(seed, "scene.pixels"));
  std::vector<std::size_t> per_class(kSceneClasses, 0);
  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const Region& reg = layout.at(geo.center_x(c), geo.center_y(r));
      scene.classes.at(r, c) = reg.cls;
      ++per_class[static_cast<std::size_t>(reg.cls - 1)];
      const auto& sig = signatures[static_cast<std::size_t>(reg.cls - 1)];
      for (std::size_t b = 0; b < spec.bands; ++b)
        scene.hyper.at(b, r, c) = static_cast<float>(sig[b] + pixel_rng.normal(0.0, spec.spectral_noise));
      scene.ndsm.at(0, r, c) = static_cast<float>(reg.height);
      scene.intensity.at(0, r, c) =
          static_cast<float>(noisy_intensity(reg.cls, pixel_rng, spec.intensity_noise));
    }
  for (std::size_t k = 0; k < per_class.size(); ++k)
    if (per_class[k] < spec.min_class_pixels)
      throw DataError("synthetic scene class " + std::to_string(k + 1) + " covers only " +
                      std::to_string(per_class[k]) + " pixels");
  for (std::size_t b = 0; b < spec.bands; ++b) scene.hyper.band_names[b] = "band" + std::to_string(b + 1);
  scene.ndsm.band_names[0] = "ndsm";
  scene.intensity.band_names[0] = "intensity";
  std::string names;
  for (std::size_t k = 0; k < kSceneClasses; ++k) names += (k ? "," : "") + std::string(kSceneClassNames[k]);
  scene.hyper.metadata["class_names"] = names;

  // Returns on a jittered lattice covering the raster plus a margin.
  Rng point_rng(derive_seed(seed, "scene.points"));
  const double step = spec.pixel_size / std::sqrt(spec.point_density);
  const double m = static_cast<double>(spec.margin) * spec.pixel_size;
  const double x0 = geo.origin_x - m, x1 = geo.origin_x + static_cast<double>(spec.cols) * spec.pixel_size + m;
  const double y1 = geo.origin_y + m, y0 = geo.origin_y - static_cast<double>(spec.rows) * spec.pixel_size - m;
  for (double y = y0 + step / 2; y < y1; y += step)
    for (double x = x0 + step / 2; x < x1; x += step) {
      const double px = x + point_rng.uniform(-0.4, 0.4) * step;
      const double py = y + point_rng.uniform(-0.4, 0.4) * step;
      const Region& reg = layout.at(px, py);
      const double g = Layout::ground(px, py);
      const double intensity = noisy_intensity(reg.cls, point_rng, spec.intensity_noise);
      LidarPoint p{px, py, 0.0, intensity, 1, false};
      if (reg.cls == kRoof) {
        p.z = g + reg.height + point_rng.normal(0.0, spec.height_noise);
      } else if (reg.cls == kTrees) {
        p.z = g + reg.height + point_rng.normal(0.0, spec.canopy_roughness);
        scene.points.push_back(p);
        // Last return through the canopy.
        p = LidarPoint{px, py, g + point_rng.normal(0.0, spec.height_noise),
                       noisy_intensity(kBare, point_rng, spec.intensity_noise), 2, true};
      } else {
        p.z = g + point_rng.normal(0.0, spec.height_noise);
        p.is_ground = true;
      }
      scene.points.push_back(p);
    }
  return scene;
}

}  // namespace hsf
