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

#include "hsfuse/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "hsfuse/error.hpp"
#include "hsfuse/rng.hpp"

namespace hsf {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

std::vector<std::string> list_items(std::string_view text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<double> real_list(std::string_view text, std::string_view what) {
  std::vector<double> v;
  for (const auto& item : list_items(text)) v.push_back(parse_real(item, what));
  return v;
}

std::string real_list_text(const std::vector<double>& v) {
  std::vector<std::string> items;
  for (double x : v) items.push_back(format_real(x));
  return join(items);
}

std::size_t count_value(const KeyValueFile& kv, std::string_view key, std::size_t fallback) {
  if (!kv.has(key)) return fallback;
  const auto v = parse_int(kv.get(key), key);
  if (v < 0) throw UsageError(std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

double real_value(const KeyValueFile& kv, std::string_view key, double fallback) {
  return kv.has(key) ? parse_real(kv.get(key), key) : fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return std::filesystem::absolute(p).lexically_normal();
}

const char* map_policy_name(MapPolicy m) {
  switch (m) {
    case MapPolicy::none: return "none";
    case MapPolicy::first: return "first";
    case MapPolicy::all: return "all";
  }
  return "first";
}

const std::set<std::string, std::less<>> kKnownKeys = {
    "scenario", "hyper", "ndsm", "intensity", "reference", "output", "recipe", "classifiers",
    "runs", "seed", "train_fraction", "min_per_class", "maps", "kpca_samples",
    "kpca_variance_share", "kpca_max_components", "kpca_gamma", "area_thresholds",
    "std_thresholds", "levels", "svm_c", "svm_gamma", "svm_folds", "svm_tolerance",
    "svm_max_iterations", "rf_trees", "rf_mtry", "rbfnn_centers"};

}  // namespace

FeatureSource parse_feature_source(std::string_view name) {
  if (name == "hyper") return FeatureSource::hyper;
  if (name == "kpca") return FeatureSource::kpca;
  if (name == "esdap_kpca") return FeatureSource::esdap_kpca;
  if (name == "ndsm") return FeatureSource::ndsm;
  if (name == "intensity") return FeatureSource::intensity;
  if (name == "esdap_ndsm") return FeatureSource::esdap_ndsm;
  if (name == "esdap_intensity") return FeatureSource::esdap_intensity;
  throw UsageError("unknown feature source '" + std::string(name) + "'");
}

std::string_view feature_source_name(FeatureSource s) {
  switch (s) {
    case FeatureSource::hyper: return "hyper";
    case FeatureSource::kpca: return "kpca";
    case FeatureSource::esdap_kpca: return "esdap_kpca";
    case FeatureSource::ndsm: return "ndsm";
    case FeatureSource::intensity: return "intensity";
    case FeatureSource::esdap_ndsm: return "esdap_ndsm";
    case FeatureSource::esdap_intensity: return "esdap_intensity";
  }
  return "unknown";
}

std::vector<FeatureSource> scenario_recipe(int scenario) {
  switch (scenario) {
    case 1: return {FeatureSource::hyper};
    case 2: return {FeatureSource::hyper, FeatureSource::intensity, FeatureSource::ndsm};
    case 3: return {FeatureSource::esdap_kpca, FeatureSource::intensity, FeatureSource::ndsm};
    default: throw UsageError("scenario id must be 1, 2 or 3");
  }
}

ScenarioConfig ScenarioConfig::from_keys(const KeyValueFile& kv, const std::filesystem::path& base) {
  for (const auto& [key, value] : kv.entries())
    if (!kKnownKeys.contains(key)) throw UsageError("unknown config key '" + key + "'");
  ScenarioConfig cfg;
  cfg.scenario = static_cast<int>(parse_int(kv.get_or("scenario", "1"), "scenario"));
  cfg.hyper = resolve(base, kv.get_or("hyper", ""));
  cfg.ndsm = resolve(base, kv.get_or("ndsm", ""));
  cfg.intensity = resolve(base, kv.get_or("intensity", ""));
  cfg.reference = resolve(base, kv.get_or("reference", ""));
  cfg.output = resolve(base, kv.get_or("output", ""));
  if (kv.has("recipe")) {
    for (const auto& item : list_items(kv.get("recipe"))) cfg.recipe.push_back(parse_feature_source(item));
  } else {
    cfg.recipe = scenario_recipe(cfg.scenario);
  }
  if (kv.has("classifiers")) {
    cfg.classifiers.clear();
    for (const auto& item : list_items(kv.get("classifiers"))) cfg.classifiers.push_back(parse_classifier(item));
  }
  cfg.runs = count_value(kv, "runs", cfg.runs);
  if (kv.has("seed")) {
    const auto text = std::string(trim(kv.get("seed")));
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(text, &used, 0);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw UsageError("seed must be an unsigned integer, got '" + text + "'");
    }
  }
  cfg.train_fraction = real_value(kv, "train_fraction", cfg.train_fraction);
  cfg.min_per_class = count_value(kv, "min_per_class", cfg.min_per_class);
  const auto maps = kv.get_or("maps", "first");
  if (maps == "none") cfg.maps = MapPolicy::none;
  else if (maps == "first") cfg.maps = MapPolicy::first;
  else if (maps == "all") cfg.maps = MapPolicy::all;
  else throw UsageError("maps must be none, first or all");

  cfg.kpca.samples = count_value(kv, "kpca_samples", cfg.kpca.samples);
  cfg.kpca.variance_share = real_value(kv, "kpca_variance_share", cfg.kpca.variance_share);
  cfg.kpca.max_components = count_value(kv, "kpca_max_components", cfg.kpca.max_components);
  cfg.kpca.gamma = real_value(kv, "kpca_gamma", cfg.kpca.gamma);
  cfg.profile.area = ThresholdSpec::parse(kv.get_or("area_thresholds", "auto:2"));
  cfg.profile.stddev = ThresholdSpec::parse(kv.get_or("std_thresholds", "auto:2"));
  cfg.profile.levels = static_cast<std::int32_t>(count_value(kv, "levels", 256));

  auto& svm = cfg.params.svm;
  if (kv.has("svm_c")) svm.c_grid = real_list(kv.get("svm_c"), "svm_c");
  if (kv.has("svm_gamma")) svm.gamma_grid = real_list(kv.get("svm_gamma"), "svm_gamma");
  if (svm.c_grid.empty()) svm.c_grid = SvmParams::default_c_grid();
  if (svm.gamma_grid.empty()) svm.gamma_grid = SvmParams::default_gamma_grid();
  svm.folds = count_value(kv, "svm_folds", svm.folds);
  svm.tolerance = real_value(kv, "svm_tolerance", svm.tolerance);
  svm.max_iterations = count_value(kv, "svm_max_iterations", svm.max_iterations);
  cfg.params.rf.trees = count_value(kv, "rf_trees", cfg.params.rf.trees);
  cfg.params.rf.mtry = count_value(kv, "rf_mtry", cfg.params.rf.mtry);
  cfg.params.rbfnn.centers_per_class = count_value(kv, "rbfnn_centers", cfg.params.rbfnn.centers_per_class);
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  return from_keys(KeyValueFile::load(path), path.parent_path());
}

KeyValueFile ScenarioConfig::to_keys() const {
  KeyValueFile kv;
  kv.set("scenario", std::to_string(scenario));
  kv.set("hyper", hyper.string());
  kv.set("ndsm", ndsm.string());
  kv.set("intensity", intensity.string());
  kv.set("reference", reference.string());
  kv.set("output", output.string());
  std::vector<std::string> items;
  for (auto s : recipe) items.emplace_back(feature_source_name(s));
  kv.set("recipe", join(items));
  items.clear();
  for (auto c : classifiers) items.emplace_back(classifier_name(c));
  kv.set("classifiers", join(items));
  kv.set("runs", std::to_string(runs));
  kv.set("seed", std::to_string(seed));
  kv.set("train_fraction", format_real(train_fraction));
  kv.set("min_per_class", std::to_string(min_per_class));
  kv.set("maps", map_policy_name(maps));
  kv.set("kpca_samples", std::to_string(kpca.samples));
  kv.set("kpca_variance_share", format_real(kpca.variance_share));
  kv.set("kpca_max_components", std::to_string(kpca.max_components));
  kv.set("kpca_gamma", format_real(kpca.gamma));
  kv.set("area_thresholds", profile.area.to_string());
  kv.set("std_thresholds", profile.stddev.to_string());
  kv.set("levels", std::to_string(profile.levels));
  kv.set("svm_c", real_list_text(params.svm.c_grid.empty() ? SvmParams::default_c_grid() : params.svm.c_grid));
  kv.set("svm_gamma",
         real_list_text(params.svm.gamma_grid.empty() ? SvmParams::default_gamma_grid() : params.svm.gamma_grid));
  kv.set("svm_folds", std::to_string(params.svm.folds));
  kv.set("svm_tolerance", format_real(params.svm.tolerance));
  kv.set("svm_max_iterations", std::to_string(params.svm.max_iterations));
  kv.set("rf_trees", std::to_string(params.rf.trees));
  kv.set("rf_mtry", std::to_string(params.rf.mtry));
  kv.set("rbfnn_centers", std::to_string(params.rbfnn.centers_per_class));
  return kv;
}

void ScenarioConfig::validate() const {
  if (scenario < 1 || scenario > 3) throw UsageError("scenario id must be 1, 2 or 3");
  if (recipe.empty()) throw UsageError("feature recipe is empty");
  if (classifiers.empty()) throw UsageError("no classifier configured");
  if (runs == 0) throw UsageError("runs must be at least 1");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw UsageError("train_fraction must lie in [0, 1]");
  if (profile.levels < 2) throw UsageError("levels must be at least 2");
  if (!(kpca.variance_share > 0.0 && kpca.variance_share <= 1.0))
    throw UsageError("kpca_variance_share must lie in (0, 1]");
}

ScenarioInputs load_inputs(const ScenarioConfig& cfg) {
  ScenarioInputs in;
  auto needs = [&](FeatureSource s) { return std::find(cfg.recipe.begin(), cfg.recipe.end(), s) != cfg.recipe.end(); };
  auto read = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw UsageError(std::string("config does not name the ") + what + " raster");
    return with_context(std::string("reading ") + what, [&] { return read_raster(p); });
  };
  if (needs(FeatureSource::hyper) || needs(FeatureSource::kpca) || needs(FeatureSource::esdap_kpca))
    in.hyper = read(cfg.hyper, "hyper");
  if (needs(FeatureSource::ndsm) || needs(FeatureSource::esdap_ndsm)) in.ndsm = read(cfg.ndsm, "ndsm");
  if (needs(FeatureSource::intensity) || needs(FeatureSource::esdap_intensity))
    in.intensity = read(cfg.intensity, "intensity");
  in.reference = class_map_from_raster(read(cfg.reference, "reference"));
  return in;
}

FeatureLibrary build_features(std::span<const FeatureSource> recipe, const ScenarioInputs& inputs,
                              const ScenarioConfig& cfg) {
  FeatureLibrary lib;
  auto needs = [&](FeatureSource s) { return std::find(recipe.begin(), recipe.end(), s) != recipe.end(); };
  auto require = [](const RasterGrid& g, const char* what) {
    if (g.bands() == 0) throw UsageError(std::string("recipe needs the ") + what + " raster");
    return g;
  };
  if (needs(FeatureSource::hyper)) lib[FeatureSource::hyper] = require(inputs.hyper, "hyper");
  if (needs(FeatureSource::ndsm)) lib[FeatureSource::ndsm] = require(inputs.ndsm, "ndsm");
  if (needs(FeatureSource::intensity)) lib[FeatureSource::intensity] = require(inputs.intensity, "intensity");
  if (needs(FeatureSource::esdap_ndsm))
    lib[FeatureSource::esdap_ndsm] =
        with_context("esdap", [&] { return esdap(require(inputs.ndsm, "ndsm"), cfg.profile); });
  if (needs(FeatureSource::esdap_intensity))
    lib[FeatureSource::esdap_intensity] =
        with_context("esdap", [&] { return esdap(require(inputs.intensity, "intensity"), cfg.profile); });
  if (needs(FeatureSource::kpca) || needs(FeatureSource::esdap_kpca)) {
    require(inputs.hyper, "hyper");
    KpcaOptions opt = cfg.kpca;
    opt.seed = derive_seed(cfg.seed, "kpca");
    auto kp = with_context("kpca", [&] { return kpca_transform(inputs.hyper, opt); });
    if (needs(FeatureSource::esdap_kpca))
      lib[FeatureSource::esdap_kpca] = with_context("esdap", [&] { return esdap(kp.features, cfg.profile); });
    if (needs(FeatureSource::kpca)) lib[FeatureSource::kpca] = std::move(kp.features);
  }
  return lib;
}

RasterGrid stack_rasters(std::span<const std::pair<std::string, const RasterGrid*>> parts) {
  if (parts.empty()) throw UsageError("nothing to stack");
  const RasterGrid& first = *parts.front().second;
  std::size_t bands = 0;
  for (const auto& [name, g] : parts) {
    if (g->rows() != first.rows() || g->cols() != first.cols())
      throw DataError("cannot stack " + name + " (" + std::to_string(g->rows()) + "x" + std::to_string(g->cols()) +
                      ") with " + parts.front().first + " (" + std::to_string(first.rows()) + "x" +
                      std::to_string(first.cols()) + ")");
    bands += g->bands();
  }
  RasterGrid out(first.rows(), first.cols(), bands, RasterGrid::kDefaultNodata, first.geo());
  std::size_t b = 0;
  std::vector<std::string> sources;
  for (const auto& [name, g] : parts) {
    sources.push_back(name);
    for (std::size_t k = 0; k < g->bands(); ++k, ++b) {
      const auto src = g->band(k);
      auto dst = out.band(b);
      for (std::size_t p = 0; p < src.size(); ++p) dst[p] = g->is_nodata(src[p]) ? out.nodata() : src[p];
      const std::string band = g->band_names[k].empty() ? std::to_string(k + 1) : g->band_names[k];
      out.band_names[b] = name + "/" + band;
    }
  }
  out.metadata["stack_sources"] = join(sources);
  return out;
}

RasterGrid stack_features(std::span<const FeatureSource> recipe, const FeatureLibrary& library) {
  std::vector<std::pair<std::string, const RasterGrid*>> parts;
  for (auto s : recipe) {
    const auto it = library.find(s);
    if (it == library.end()) throw UsageError("feature source " + std::string(feature_source_name(s)) + " was not built");
    parts.emplace_back(std::string(feature_source_name(s)), &it->second);
  }
  return stack_rasters(parts);
}

PixelTable pixel_table(const RasterGrid& features) {
  PixelTable t;
  const std::size_t n = features.pixels(), d = features.bands();
  t.row_of_pixel.assign(n, -1);
  for (std::size_t p = 0; p < n; ++p) {
    bool ok = true;
    for (std::size_t b = 0; b < d && ok; ++b) ok = !features.is_nodata(features.band(b)[p]);
    if (ok) {
      t.row_of_pixel[p] = static_cast<std::int64_t>(t.pixel_of_row.size());
      t.pixel_of_row.push_back(static_cast<std::uint32_t>(p));
    }
  }
  t.x.resize(static_cast<Eigen::Index>(t.pixel_of_row.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < t.pixel_of_row.size(); ++i)
    for (std::size_t b = 0; b < d; ++b)
      t.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = features.band(b)[t.pixel_of_row[i]];
  return t;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, "run", run); }
std::uint64_t split_seed(std::uint64_t master, std::size_t run) {
  return derive_seed(run_seed(master, run), "split");
}
std::uint64_t classifier_seed(std::uint64_t master, std::size_t run, ClassifierKind kind) {
  return derive_seed(run_seed(master, run), "classifier", static_cast<std::uint64_t>(kind));
}

std::string manifest_text(const ScenarioConfig& cfg, std::size_t feature_bands) {
  const std::string body = cfg.to_keys().to_string();
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  std::string out = "# hsfuse scenario manifest\n";
  out += "# version = " + std::string(kToolkitVersion) + "\n";
  out += "# config_hash = " + std::string(hash) + "\n";
  out += "# feature_bands = " + std::to_string(feature_bands) + "\n";
  out += "# kpca_seed = " + std::to_string(derive_seed(cfg.seed, "kpca")) + "\n";
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    out += "# run " + std::to_string(r) + " split_seed = " + std::to_string(split_seed(cfg.seed, r));
    for (auto c : cfg.classifiers)
      out += " " + std::string(classifier_name(c)) + "_seed = " + std::to_string(classifier_seed(cfg.seed, r, c));
    out += "\n";
  }
  return out + body;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const ScenarioInputs& inputs) {
  cfg.validate();
  const FeatureLibrary lib = build_features(cfg.recipe, inputs, cfg);
  const RasterGrid features = with_context("stack", [&] { return stack_features(cfg.recipe, lib); });
  const ClassMap& ref = inputs.reference;
  if (ref.rows != features.rows() || ref.cols != features.cols())
    throw DataError("reference map size does not match the features");

  const PixelTable table = pixel_table(features);
  ClassMap usable = ref;
  for (std::size_t p = 0; p < usable.labels.size(); ++p)
    if (table.row_of_pixel[p] < 0) usable.labels[p] = 0;
  const std::int32_t classes = ref.max_label();
  if (classes < 1) throw DataError("reference map has no labeled pixels");

  ScenarioResult result;
  result.feature_names = features.band_names;
  result.manifest = manifest_text(cfg, features.bands());
  for (auto c : cfg.classifiers) result.report.columns.push_back({std::string(classifier_name(c)), {}});

  auto rows_of = [&](const std::vector<std::uint32_t>& pixels) {
    Matrix x(static_cast<Eigen::Index>(pixels.size()), table.x.cols());
    Labels y(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = table.x.row(table.row_of_pixel[pixels[i]]);
      y[i] = usable.labels[pixels[i]];
    }
    return std::pair{std::move(x), std::move(y)};
  };

  for (std::size_t r = 0; r < cfg.runs; ++r) {
    with_context("run " + std::to_string(r), [&] {
      const auto split = with_context("split", [&] {
        return split_reference(usable, cfg.train_fraction, cfg.min_per_class, split_seed(cfg.seed, r));
      });
      auto [xtr, ytr] = rows_of(split.train);
      const auto [xte, yte] = rows_of(split.test);
      const TrainingSet set = TrainingSet::make(std::move(xtr), std::move(ytr), classes);
      for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
        const auto kind = cfg.classifiers[ci];
        const std::string name(classifier_name(kind));
        RunResult run;
        run.seed = classifier_seed(cfg.seed, r, kind);
        Stopwatch train_clock;
        const auto model = with_context("train " + name, [&] {
          return train_classifier(kind, set, cfg.params, run.seed);
        });
        run.train_seconds = train_clock.seconds();
        Stopwatch test_clock;
        const Labels pred = predict(model, xte);
        run.test_seconds = test_clock.seconds();
        run.confusion = yte.empty() ? ConfusionMatrix(classes) : confusion(yte, pred, classes);
        if (!yte.empty()) run.metrics = metrics(run.confusion);
        result.report.columns[ci].runs.push_back(std::move(run));

        if (cfg.maps == MapPolicy::all || (cfg.maps == MapPolicy::first && r == 0)) {
          const Labels all = predict(model, table.x);
          ClassMap map(ref.rows, ref.cols);
          for (std::size_t i = 0; i < all.size(); ++i) map.labels[table.pixel_of_row[i]] = all[i];
          result.maps.emplace_back(cfg.maps == MapPolicy::all ? name + "_run" + std::to_string(r) : name,
                                   std::move(map));
        }
      }
      return 0;
    });
  }
  return result;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) { return run_scenario(cfg, load_inputs(cfg)); }

void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
  if (dir.empty()) throw UsageError("no output directory configured");
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.tsv", report_tsv(result.report, false));
  write_text_file(dir / "report.txt", report_text(result.report, false));
  write_text_file(dir / "runs.tsv", runs_tsv(result.report));
  write_text_file(dir / "timing.tsv", report_tsv(result.report, true));
  write_text_file(dir / "manifest.txt", result.manifest);
  const auto palette = default_palette();
  for (const auto& [name, map] : result.maps) {
    render_class_map(map, palette, dir / ("map_" + name + ".ppm"));
    write_raster(class_map_to_raster(map), dir / ("map_" + name));
  }
}

}  // namespace hsf
