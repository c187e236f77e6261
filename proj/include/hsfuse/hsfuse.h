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

/* C interface to the hsfuse toolkit. Every call returns an hsf_status;
 * on failure hsf_last_error() describes the cause (per thread). Strings
 * returned through char** are owned by the caller and released with
 * hsf_string_free. Rasters are band-sequential float32. */

#ifndef HSFUSE_H
#define HSFUSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(HSF_BUILDING_LIBRARY)
#define HSF_API __attribute__((visibility("default")))
#else
#define HSF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hsf_status {
  HSF_OK = 0,
  HSF_E_USAGE = 1,
  HSF_E_DATA = 2,
  HSF_E_NUMERIC = 3,
  HSF_E_INTERNAL = 4
} hsf_status;

HSF_API const char* hsf_version(void);
HSF_API const char* hsf_last_error(void);
HSF_API void hsf_string_free(char* s);

/* 0 selects the hardware concurrency. Results never depend on it. */
HSF_API hsf_status hsf_set_threads(unsigned threads);

/* ---- rasters ---- */

typedef struct hsf_raster hsf_raster;

HSF_API hsf_status hsf_raster_create(size_t rows, size_t cols, size_t bands, float nodata, hsf_raster** out);
HSF_API hsf_status hsf_raster_read(const char* path, hsf_raster** out);
HSF_API hsf_status hsf_raster_write(const hsf_raster* raster, const char* path);
HSF_API void hsf_raster_free(hsf_raster* raster);

HSF_API size_t hsf_raster_rows(const hsf_raster* raster);
HSF_API size_t hsf_raster_cols(const hsf_raster* raster);
HSF_API size_t hsf_raster_bands(const hsf_raster* raster);
HSF_API float hsf_raster_nodata(const hsf_raster* raster);
/* rows * cols * bands values, band-major. */
HSF_API float* hsf_raster_data(hsf_raster* raster);
HSF_API hsf_status hsf_raster_set_geo(hsf_raster* raster, double origin_x, double origin_y, double pixel_size);
HSF_API hsf_status hsf_raster_get_geo(const hsf_raster* raster, double* origin_x, double* origin_y,
                                      double* pixel_size);
/* Borrowed pointer, valid until the raster is modified or freed. */
HSF_API hsf_status hsf_raster_band_name(const hsf_raster* raster, size_t band, const char** name);
HSF_API hsf_status hsf_raster_set_band_name(hsf_raster* raster, size_t band, const char* name);

/* ---- in-memory feature extraction ---- */

typedef struct hsf_kpca_options {
  size_t samples;          /* 500 */
  double variance_share;   /* 0.95 */
  size_t max_components;   /* 0: no cap */
  double gamma;            /* <= 0: mean pairwise sample distance */
  uint64_t seed;
} hsf_kpca_options;

HSF_API void hsf_kpca_options_default(hsf_kpca_options* options);
HSF_API hsf_status hsf_kpca_raster(const hsf_raster* cube, const hsf_kpca_options* options, hsf_raster** out);

/* Threshold specs: "auto:N", "none", or a comma-separated list. */
HSF_API hsf_status hsf_esdap_raster(const hsf_raster* components, const char* area_thresholds,
                                    const char* std_thresholds, int levels, hsf_raster** out);

/* ---- file workflow (one call per CLI subcommand) ---- */

/* Grid geometry is copied from `like`. Writes <prefix>_dem, _dsm, _ndsm
 * and _intensity. */
HSF_API hsf_status hsf_ingest_lidar(const char* points_path, const char* like, const char* out_prefix);

/* gcp_path: CSV rows src_col,src_row,ref_col,ref_row in pixel units. The
 * output takes the size and geo anchor of `reference`. */
HSF_API hsf_status hsf_coregister(const char* input, const char* gcp_path, const char* reference,
                                  const char* output, double* rmse);

HSF_API hsf_status hsf_kpca(const char* input, const hsf_kpca_options* options, const char* output);
HSF_API hsf_status hsf_esdap(const char* input, const char* area_thresholds, const char* std_thresholds,
                             int levels, const char* output);

/* names[i] labels inputs[i] in the band provenance (may be NULL). */
HSF_API hsf_status hsf_stack(const char* const* inputs, const char* const* names, size_t count,
                             const char* output);

/* Trains on the labeled pixels of `reference` (all of them when
 * train_fraction <= 0, otherwise a per-class draw with the evaluation
 * split rule). `params` is optional key = value text using the scenario
 * config keys for classifier settings. */
HSF_API hsf_status hsf_train(const char* features, const char* reference, const char* classifier,
                             const char* params, double train_fraction, size_t min_per_class,
                             uint64_t seed, const char* model_out);
HSF_API hsf_status hsf_predict(const char* model, const char* features, const char* map_out);

/* Confusion matrix and OA/AA/kappa over pixels labeled in both maps. */
HSF_API hsf_status hsf_evaluate(const char* reference, const char* predicted, char** report);

/* `overrides` (optional) is key = value text applied on top of the file.
 * Writes the output directory and returns the text report. */
HSF_API hsf_status hsf_run_scenario(const char* config_path, const char* overrides, char** report);

/* Writes hyper, reference, ndsm_truth, intensity_truth, points.csv and
 * scenario1..3.cfg into out_dir. */
HSF_API hsf_status hsf_synth_scene(size_t rows, size_t cols, size_t bands, uint64_t seed, const char* out_dir);

HSF_API hsf_status hsf_render(const char* map, const char* ppm_out);

#ifdef __cplusplus
}
#endif

#endif /* HSFUSE_H */
