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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/evaluation.hpp"
#include "hsfuse/kpca.hpp"
#include "hsfuse/profiles.hpp"
#include "hsfuse/raster.hpp"
#include "hsfuse/text.hpp"

namespace hsf {

inline constexpr const char* kToolkitVersion = "0.1.0";

// esdap_ndsm and esdap_intensity are opt-in: no default recipe uses them.
enum class FeatureSource { hyper, kpca, esdap_kpca, ndsm, intensity, esdap_ndsm, esdap_intensity };

FeatureSource parse_feature_source(std::string_view name);
std::string_view feature_source_name(FeatureSource s);
/// Default recipe for scenario ids 1, 2 and 3.
std::vector<FeatureSource> scenario_recipe(int scenario);

enum class MapPolicy { none, first, all };

struct ScenarioConfig {
  int scenario = 1;
  std::filesystem::path hyper;
  std::filesystem::path ndsm;
  std::filesystem::path intensity;
  std::filesystem::path reference;
  std::filesystem::path output;
  std::vector<FeatureSource> recipe;
  std::vector<ClassifierKind> classifiers{ClassifierKind::svm, ClassifierKind::rf};
  ClassifierParams params;
  KpcaOptions kpca;  // seed is derived from `seed`
  ProfileOptions profile;
  double train_fraction = 0.01;
  std::size_t min_per_class = 20;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  MapPolicy maps = MapPolicy::first;

  /// Relative paths resolve against `base`. Unknown keys are usage errors.
  static ScenarioConfig from_keys(const KeyValueFile& kv, const std::filesystem::path& base = {});
  static ScenarioConfig load(const std::filesystem::path& path);
  /// Every setting, in a fixed order, with absolute paths.
  KeyValueFile to_keys() const;
  void validate() const;
};

struct ScenarioInputs {
  RasterGrid hyper;
  RasterGrid ndsm;
  RasterGrid intensity;
  ClassMap reference;
};

/// Reads the rasters the recipe needs plus the reference map.
ScenarioInputs load_inputs(const ScenarioConfig& cfg);

using FeatureLibrary = std::map<FeatureSource, RasterGrid>;

/// Computes every source named in the recipe (KPCA at most once).
FeatureLibrary build_features(std::span<const FeatureSource> recipe, const ScenarioInputs& inputs,
                              const ScenarioConfig& cfg);

/// Band-wise concatenation in recipe order, without rescaling. Band names
/// become "<source>/<band>"; every input nodata value maps to the output
/// nodata.
RasterGrid stack_features(std::span<const FeatureSource> recipe, const FeatureLibrary& library);
RasterGrid stack_rasters(std::span<const std::pair<std::string, const RasterGrid*>> parts);

/// Rows of every pixel valid in all bands, and the row index per pixel
/// (-1 when invalid).
struct PixelTable {
  Matrix x;
  std::vector<std::int64_t> row_of_pixel;
  std::vector<std::uint32_t> pixel_of_row;
};

PixelTable pixel_table(const RasterGrid& features);

struct ScenarioResult {
  EvalReport report;
  std::vector<std::pair<std::string, ClassMap>> maps;  // "<classifier>" or "<classifier>_run<k>"
  std::vector<std::string> feature_names;
  std::string manifest;
};

/// Builds features once, then for each Monte-Carlo run draws a fresh split
/// and trains/evaluates every configured classifier.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const ScenarioInputs& inputs);
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// report.tsv, report.txt, runs.tsv, timing.tsv, manifest.txt and maps.
void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

std::uint64_t run_seed(std::uint64_t master, std::size_t run);
std::uint64_t split_seed(std::uint64_t master, std::size_t run);
std::uint64_t classifier_seed(std::uint64_t master, std::size_t run, ClassifierKind kind);

std::string manifest_text(const ScenarioConfig& cfg, std::size_t feature_bands);

}  // namespace hsf
