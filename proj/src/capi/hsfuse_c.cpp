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

#include "hsfuse/hsfuse.h"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"
#include "hsfuse/evaluation.hpp"
#include "hsfuse/kpca.hpp"
#include "hsfuse/lidar.hpp"
#include "hsfuse/parallel.hpp"
#include "hsfuse/pipeline.hpp"
#include "hsfuse/profiles.hpp"
#include "hsfuse/raster.hpp"
#include "hsfuse/rng.hpp"
#include "hsfuse/synthetic.hpp"
#include "hsfuse/text.hpp"

struct hsf_raster {
  hsf::RasterGrid grid;
};

namespace {

thread_local std::string g_last_error;

template <class F>
hsf_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return HSF_OK;
  } catch (const hsf::Error& e) {
    g_last_error = e.what();
    return static_cast<hsf_status>(static_cast<int>(e.kind()));
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return HSF_E_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HSF_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return HSF_E_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return HSF_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw hsf::UsageError(std::string(what) + " must not be null");
}

std::string text_arg(const char* s, const char* what) {
  need(s, what);
  return s;
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hsf::KpcaOptions kpca_options(const hsf_kpca_options* o) {
  hsf::KpcaOptions k;
  if (o != nullptr) {
    k.samples = o->samples;
    k.variance_share = o->variance_share;
    k.max_components = o->max_components;
    k.gamma = o->gamma;
    k.seed = o->seed;
  }
  return k;
}

hsf::ProfileOptions profile_options(const char* area, const char* stddev, int levels) {
  hsf::ProfileOptions p;
  p.area = hsf::ThresholdSpec::parse(area ? area : "auto:2");
  p.stddev = hsf::ThresholdSpec::parse(stddev ? stddev : "auto:2");
  if (levels < 2) throw hsf::UsageError("levels must be at least 2");
  p.levels = levels;
  return p;
}

std::vector<hsf::GcpPair> read_gcps(const std::filesystem::path& path) {
  std::vector<hsf::GcpPair> out;
  std::size_t line_no = 0;
  for (const auto& line : hsf::split(hsf::read_text_file(path), '\n')) {
    ++line_no;
    const auto t = hsf::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = hsf::split(t, ',');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 4) throw hsf::DataError(where + ": expected src_col,src_row,ref_col,ref_row");
    // A non-numeric first line is a header.
    if (out.empty() && line_no == 1 && !f[0].empty() && std::isalpha(static_cast<unsigned char>(hsf::trim(f[0])[0])))
      continue;
    out.push_back({hsf::parse_real(f[0], where), hsf::parse_real(f[1], where), hsf::parse_real(f[2], where),
                   hsf::parse_real(f[3], where)});
  }
  return out;
}

std::string confusion_text(const hsf::ConfusionMatrix& cm, const hsf::Metrics& m) {
  std::string s = "OA\t" + hsf::format_real(m.oa) + "\nAA\t" + hsf::format_real(m.aa) + "\nKappa\t" +
                  hsf::format_real(m.kappa) + (m.kappa_degenerate ? "\t(degenerate)" : "") + "\n";
  s += "confusion (rows reference, columns predicted)\n";
  for (std::int32_t i = 1; i <= cm.classes; ++i) {
    for (std::int32_t j = 1; j <= cm.classes; ++j) s += (j > 1 ? "\t" : "") + std::to_string(cm.at(i, j));
    s += "\n";
  }
  return s;
}

}  // namespace

extern "C" {

const char* hsf_version(void) { return hsf::kToolkitVersion; }

const char* hsf_last_error(void) { return g_last_error.c_str(); }

void hsf_string_free(char* s) { std::free(s); }

hsf_status hsf_set_threads(unsigned threads) {
  return guard([&] { hsf::set_thread_count(threads); });
}

hsf_status hsf_raster_create(size_t rows, size_t cols, size_t bands, float nodata, hsf_raster** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    if (rows == 0 || cols == 0 || bands == 0) throw hsf::UsageError("raster dimensions must be positive");
    *out = new hsf_raster{hsf::RasterGrid(rows, cols, bands, nodata)};
  });
}

hsf_status hsf_raster_read(const char* path, hsf_raster** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    *out = new hsf_raster{hsf::read_raster(text_arg(path, "path"))};
  });
}

hsf_status hsf_raster_write(const hsf_raster* raster, const char* path) {
  return guard([&] {
    need(raster, "raster");
    hsf::write_raster(raster->grid, text_arg(path, "path"));
  });
}

void hsf_raster_free(hsf_raster* raster) { delete raster; }

size_t hsf_raster_rows(const hsf_raster* r) { return r ? r->grid.rows() : 0; }
size_t hsf_raster_cols(const hsf_raster* r) { return r ? r->grid.cols() : 0; }
size_t hsf_raster_bands(const hsf_raster* r) { return r ? r->grid.bands() : 0; }
float hsf_raster_nodata(const hsf_raster* r) { return r ? r->grid.nodata() : 0.0f; }
float* hsf_raster_data(hsf_raster* r) { return r ? r->grid.data().data() : nullptr; }

hsf_status hsf_raster_set_geo(hsf_raster* raster, double origin_x, double origin_y, double pixel_size) {
  return guard([&] {
    need(raster, "raster");
    raster->grid.set_geo({origin_x, origin_y, pixel_size});
  });
}

hsf_status hsf_raster_get_geo(const hsf_raster* raster, double* origin_x, double* origin_y, double* pixel_size) {
  return guard([&] {
    need(raster, "raster");
    const auto& g = raster->grid.geo();
    if (origin_x) *origin_x = g.origin_x;
    if (origin_y) *origin_y = g.origin_y;
    if (pixel_size) *pixel_size = g.pixel_size;
  });
}

hsf_status hsf_raster_band_name(const hsf_raster* raster, size_t band, const char** name) {
  return guard([&] {
    need(raster, "raster");
    need(name, "name");
    if (band >= raster->grid.bands()) throw hsf::UsageError("band index out of range");
    *name = raster->grid.band_names[band].c_str();
  });
}

hsf_status hsf_raster_set_band_name(hsf_raster* raster, size_t band, const char* name) {
  return guard([&] {
    need(raster, "raster");
    if (band >= raster->grid.bands()) throw hsf::UsageError("band index out of range");
    raster->grid.band_names[band] = text_arg(name, "name");
  });
}

void hsf_kpca_options_default(hsf_kpca_options* options) {
  if (options == nullptr) return;
  const hsf::KpcaOptions k;
  *options = {k.samples, k.variance_share, k.max_components, k.gamma, k.seed};
}

hsf_status hsf_kpca_raster(const hsf_raster* cube, const hsf_kpca_options* options, hsf_raster** out) {
  return guard([&] {
    need(cube, "cube");
    need(out, "out");
    *out = nullptr;
    *out = new hsf_raster{hsf::kpca_transform(cube->grid, kpca_options(options)).features};
  });
}

hsf_status hsf_esdap_raster(const hsf_raster* components, const char* area_thresholds,
                            const char* std_thresholds, int levels, hsf_raster** out) {
  return guard([&] {
    need(components, "components");
    need(out, "out");
    *out = nullptr;
    *out = new hsf_raster{hsf::esdap(components->grid, profile_options(area_thresholds, std_thresholds, levels))};
  });
}

hsf_status hsf_ingest_lidar(const char* points_path, const char* like, const char* out_prefix) {
  return guard([&] {
    const auto points = hsf::load_points(text_arg(points_path, "points_path"));
    const auto grid = hsf::read_raster(text_arg(like, "like"));
    const auto s = hsf::derive_surfaces(points, grid.rows(), grid.cols(), grid.geo());
    const std::string prefix = text_arg(out_prefix, "out_prefix");
    hsf::write_raster(s.dem, prefix + "_dem");
    hsf::write_raster(s.dsm, prefix + "_dsm");
    hsf::write_raster(s.ndsm, prefix + "_ndsm");
    hsf::write_raster(s.intensity, prefix + "_intensity");
  });
}

hsf_status hsf_coregister(const char* input, const char* gcp_path, const char* reference, const char* output,
                          double* rmse) {
  return guard([&] {
    const auto grid = hsf::read_raster(text_arg(input, "input"));
    const auto gcps = hsf::with_context("gcps", [&] { return read_gcps(text_arg(gcp_path, "gcp_path")); });
    const auto ref = hsf::read_raster(text_arg(reference, "reference"));
    const auto t = hsf::fit_affine_gcps(gcps);
    auto out = hsf::resample_nearest(grid, t, ref.rows(), ref.cols());
    out.set_geo(ref.geo());
    out.metadata["coregister_rmse"] = hsf::format_real(t.rmse);
    hsf::write_raster(out, text_arg(output, "output"));
    if (rmse) *rmse = t.rmse;
  });
}

hsf_status hsf_kpca(const char* input, const hsf_kpca_options* options, const char* output) {
  return guard([&] {
    const auto cube = hsf::read_raster(text_arg(input, "input"));
    hsf::write_raster(hsf::kpca_transform(cube, kpca_options(options)).features, text_arg(output, "output"));
  });
}

hsf_status hsf_esdap(const char* input, const char* area_thresholds, const char* std_thresholds, int levels,
                     const char* output) {
  return guard([&] {
    const auto grid = hsf::read_raster(text_arg(input, "input"));
    const auto out = hsf::esdap(grid, profile_options(area_thresholds, std_thresholds, levels));
    hsf::write_raster(out, text_arg(output, "output"));
  });
}

hsf_status hsf_stack(const char* const* inputs, const char* const* names, size_t count, const char* output) {
  return guard([&] {
    need(inputs, "inputs");
    std::vector<hsf::RasterGrid> grids;
    std::vector<std::string> labels;
    for (size_t i = 0; i < count; ++i) {
      const std::string path = text_arg(inputs[i], "input path");
      grids.push_back(hsf::read_raster(path));
      labels.push_back(names && names[i] ? std::string(names[i]) : std::filesystem::path(path).stem().string());
    }
    std::vector<std::pair<std::string, const hsf::RasterGrid*>> parts;
    for (size_t i = 0; i < count; ++i) parts.emplace_back(labels[i], &grids[i]);
    hsf::write_raster(hsf::stack_rasters(parts), text_arg(output, "output"));
  });
}

hsf_status hsf_train(const char* features, const char* reference, const char* classifier, const char* params,
                     double train_fraction, size_t min_per_class, uint64_t seed, const char* model_out) {
  return guard([&] {
    const auto kind = hsf::parse_classifier(text_arg(classifier, "classifier"));
    const auto cfg = hsf::ScenarioConfig::from_keys(hsf::KeyValueFile::parse(params ? params : "", "params"));
    const auto grid = hsf::read_raster(text_arg(features, "features"));
    auto map = hsf::class_map_from_raster(hsf::read_raster(text_arg(reference, "reference")));
    if (map.rows != grid.rows() || map.cols != grid.cols())
      throw hsf::DataError("reference map size does not match the features");
    const auto table = hsf::pixel_table(grid);
    for (std::size_t p = 0; p < map.labels.size(); ++p)
      if (table.row_of_pixel[p] < 0) map.labels[p] = 0;
    std::vector<std::uint32_t> pixels;
    if (train_fraction > 0.0) {
      pixels = hsf::split_reference(map, train_fraction, min_per_class, hsf::derive_seed(seed, "split")).train;
    } else {
      for (std::size_t p = 0; p < map.labels.size(); ++p)
        if (map.labels[p] > 0) pixels.push_back(static_cast<std::uint32_t>(p));
    }
    hsf::Matrix x(static_cast<Eigen::Index>(pixels.size()), table.x.cols());
    hsf::Labels y(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = table.x.row(table.row_of_pixel[pixels[i]]);
      y[i] = map.labels[pixels[i]];
    }
    const auto set = hsf::TrainingSet::make(std::move(x), std::move(y), map.max_label());
    const auto model = hsf::train_classifier(kind, set, cfg.params, hsf::derive_seed(seed, "classifier",
                                                                                      static_cast<std::uint64_t>(kind)));
    hsf::save_model(model, text_arg(model_out, "model_out"));
  });
}

hsf_status hsf_predict(const char* model, const char* features, const char* map_out) {
  return guard([&] {
    const auto m = hsf::load_model(text_arg(model, "model"));
    const auto grid = hsf::read_raster(text_arg(features, "features"));
    const auto table = hsf::pixel_table(grid);
    const auto labels = hsf::predict(m, table.x);
    hsf::ClassMap map(grid.rows(), grid.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) map.labels[table.pixel_of_row[i]] = labels[i];
    hsf::write_raster(hsf::class_map_to_raster(map, grid.geo()), text_arg(map_out, "map_out"));
  });
}

hsf_status hsf_evaluate(const char* reference, const char* predicted, char** report) {
  return guard([&] {
    need(report, "report");
    *report = nullptr;
    const auto ref = hsf::class_map_from_raster(hsf::read_raster(text_arg(reference, "reference")));
    const auto pred = hsf::class_map_from_raster(hsf::read_raster(text_arg(predicted, "predicted")));
    if (ref.rows != pred.rows || ref.cols != pred.cols) throw hsf::DataError("map sizes differ");
    hsf::Labels truth, guess;
    for (std::size_t p = 0; p < ref.labels.size(); ++p)
      if (ref.labels[p] > 0 && pred.labels[p] > 0) {
        truth.push_back(ref.labels[p]);
        guess.push_back(pred.labels[p]);
      }
    if (truth.empty()) throw hsf::DataError("no pixel is labeled in both maps");
    const auto classes = std::max(ref.max_label(), pred.max_label());
    const auto cm = hsf::confusion(truth, guess, classes);
    *report = copy_out(confusion_text(cm, hsf::metrics(cm)));
  });
}

hsf_status hsf_run_scenario(const char* config_path, const char* overrides, char** report) {
  return guard([&] {
    const std::filesystem::path path = text_arg(config_path, "config_path");
    auto kv = hsf::KeyValueFile::load(path);
    if (overrides) {
      const auto extra = hsf::KeyValueFile::parse(overrides, "overrides");
      for (const auto& [k, v] : extra.entries()) kv.set(k, v);
    }
    const auto cfg = hsf::ScenarioConfig::from_keys(kv, path.parent_path());
    const auto result = hsf::run_scenario(cfg);
    if (!cfg.output.empty()) hsf::write_scenario_outputs(result, cfg.output);
    if (report) *report = copy_out(hsf::report_text(result.report, true));
  });
}

hsf_status hsf_synth_scene(size_t rows, size_t cols, size_t bands, uint64_t seed, const char* out_dir) {
  return guard([&] {
    const std::filesystem::path dir = text_arg(out_dir, "out_dir");
    hsf::SceneSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.bands = bands;
    const auto scene = hsf::generate_synthetic_scene(spec, seed);
    std::filesystem::create_directories(dir);
    hsf::write_raster(scene.hyper, dir / "hyper");
    hsf::write_raster(scene.ndsm, dir / "ndsm_truth");
    hsf::write_raster(scene.intensity, dir / "intensity_truth");
    hsf::write_raster(hsf::class_map_to_raster(scene.classes, scene.hyper.geo()), dir / "reference");
    hsf::write_points(scene.points, dir / "points.csv");
    for (int s = 1; s <= 3; ++s) {
      std::string cfg = "# generated with seed " + std::to_string(seed) +
                        "; run `hsfuse ingest-lidar --points points.csv --like hyper --output lidar` first\n";
      cfg += "scenario = " + std::to_string(s) + "\n";
      cfg += "hyper = hyper\nndsm = lidar_ndsm\nintensity = lidar_intensity\nreference = reference\n";
      cfg += "output = out_scenario" + std::to_string(s) + "\n";
      cfg += "kpca_max_components = 3\nseed = " + std::to_string(seed) + "\n";
      hsf::write_text_file(dir / ("scenario" + std::to_string(s) + ".cfg"), cfg);
    }
  });
}

hsf_status hsf_render(const char* map, const char* ppm_out) {
  return guard([&] {
    const auto m = hsf::class_map_from_raster(hsf::read_raster(text_arg(map, "map")));
    const auto palette = hsf::default_palette();
    hsf::render_class_map(m, palette, text_arg(ppm_out, "ppm_out"));
  });
}

}  // extern "C"
