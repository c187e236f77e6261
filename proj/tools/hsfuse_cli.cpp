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

// Command-line front end. Everything goes through the C interface.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hsfuse/hsfuse.h"

namespace {

int report(hsf_status status) {
  if (status != HSF_OK) std::fprintf(stderr, "hsfuse: %s\n", hsf_last_error());
  return static_cast<int>(status);
}

std::string join_params(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + "\n";
  return out;
}

bool read_file(const std::string& path, std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
  std::fclose(f);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral and LiDAR fusion classification toolkit"};
  app.set_version_flag("--version", std::string(hsf_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  std::string config;
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { seed = v; seed_given = true; }, "Master seed");
  app.add_option("--threads", threads, "Worker threads (0: all cores)");
  app.add_option("--config", config, "Config file (scenario, train)");

  // ingest-lidar
  auto* ingest = app.add_subcommand("ingest-lidar", "Rasterize DEM, DSM, nDSM and intensity from a point CSV");
  std::string points, like, prefix;
  ingest->add_option("--points", points, "x,y,z,intensity,return_number,is_ground CSV")->required();
  ingest->add_option("--like", like, "Raster whose grid the outputs take")->required();
  ingest->add_option("--output", prefix, "Output prefix")->required();

  // coregister
  auto* coreg = app.add_subcommand("coregister", "Resample a raster onto a reference grid from GCPs");
  std::string co_in, co_gcps, co_ref, co_out;
  coreg->add_option("--input", co_in)->required();
  coreg->add_option("--gcps", co_gcps, "src_col,src_row,ref_col,ref_row CSV")->required();
  coreg->add_option("--reference", co_ref)->required();
  coreg->add_option("--output", co_out)->required();

  // kpca
  auto* kpca = app.add_subcommand("kpca", "Kernel PCA features of a cube");
  hsf_kpca_options kopt;
  hsf_kpca_options_default(&kopt);
  std::string k_in, k_out;
  kpca->add_option("--input", k_in)->required();
  kpca->add_option("--output", k_out)->required();
  kpca->add_option("--samples", kopt.samples, "Sampled pixels")->capture_default_str();
  kpca->add_option("--variance-share", kopt.variance_share)->capture_default_str();
  kpca->add_option("--max-components", kopt.max_components, "0: no cap")->capture_default_str();
  kpca->add_option("--gamma", kopt.gamma, "Kernel scale (<= 0: automatic)")->capture_default_str();

  // esdap
  auto* esdap = app.add_subcommand("esdap", "Self-dual attribute profiles of every band");
  std::string e_in, e_out, e_area = "auto:2", e_std = "auto:2";
  int levels = 256;
  esdap->add_option("--input", e_in)->required();
  esdap->add_option("--output", e_out)->required();
  esdap->add_option("--area-thresholds", e_area)->capture_default_str();
  esdap->add_option("--std-thresholds", e_std)->capture_default_str();
  esdap->add_option("--levels", levels)->capture_default_str();

  // stack
  auto* stack = app.add_subcommand("stack", "Concatenate rasters band-wise");
  std::vector<std::string> s_in, s_names;
  std::string s_out;
  stack->add_option("--input", s_in, "Input rasters in order")->required();
  stack->add_option("--name", s_names, "Provenance label per input");
  stack->add_option("--output", s_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Fit a classifier on labeled pixels");
  std::string t_feat, t_ref, t_clf = "svm", t_model;
  std::vector<std::string> t_params;
  double t_fraction = 0.0;
  std::size_t t_min = 20;
  train->add_option("--features", t_feat)->required();
  train->add_option("--reference", t_ref)->required();
  train->add_option("--classifier", t_clf)->check(CLI::IsMember({"svm", "rf", "rbfnn"}))->capture_default_str();
  train->add_option("--fraction", t_fraction, "Per-class draw (<= 0: every labeled pixel)")->capture_default_str();
  train->add_option("--min-per-class", t_min)->capture_default_str();
  train->add_option("--param", t_params, "key=value classifier setting (repeatable)");
  train->add_option("--model", t_model)->required();

  // predict
  auto* pred = app.add_subcommand("predict", "Classify every valid pixel");
  std::string p_model, p_feat, p_out;
  pred->add_option("--model", p_model)->required();
  pred->add_option("--features", p_feat)->required();
  pred->add_option("--output", p_out)->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Confusion matrix, OA, AA and kappa");
  std::string v_ref, v_pred, v_out;
  eval->add_option("--reference", v_ref)->required();
  eval->add_option("--predicted", v_pred)->required();
  eval->add_option("--report", v_out, "Also write the report here");

  // scenario
  auto* scen = app.add_subcommand("scenario", "Monte-Carlo evaluation of a configured scenario");
  std::size_t runs = 0;
  std::string sc_out;
  scen->add_option("--runs", runs, "Override the configured run count");
  scen->add_option("--output", sc_out, "Override the output directory");

  // synth-scene
  auto* synth = app.add_subcommand("synth-scene", "Write a synthetic test scene");
  std::string y_out;
  std::size_t rows = 128, cols = 128, bands = 32;
  synth->add_option("--output", y_out)->required();
  synth->add_option("--rows", rows)->capture_default_str();
  synth->add_option("--cols", cols)->capture_default_str();
  synth->add_option("--bands", bands)->capture_default_str();

  // render
  auto* render = app.add_subcommand("render", "Render a class map as PPM");
  std::string r_map, r_out;
  render->add_option("--map", r_map)->required();
  render->add_option("--output", r_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (const auto st = hsf_set_threads(threads); st != HSF_OK) return report(st);

  if (*ingest) return report(hsf_ingest_lidar(points.c_str(), like.c_str(), prefix.c_str()));
  if (*coreg) {
    double rmse = 0.0;
    const auto st = hsf_coregister(co_in.c_str(), co_gcps.c_str(), co_ref.c_str(), co_out.c_str(), &rmse);
    if (st == HSF_OK) std::printf("gcp rmse %.6g px\n", rmse);
    return report(st);
  }
  if (*kpca) {
    kopt.seed = seed;
    return report(hsf_kpca(k_in.c_str(), &kopt, k_out.c_str()));
  }
  if (*esdap) return report(hsf_esdap(e_in.c_str(), e_area.c_str(), e_std.c_str(), levels, e_out.c_str()));
  if (*stack) {
    if (!s_names.empty() && s_names.size() != s_in.size()) {
      std::fprintf(stderr, "hsfuse: --name must be given once per --input\n");
      return 1;
    }
    std::vector<const char*> in, names;
    for (const auto& s : s_in) in.push_back(s.c_str());
    for (const auto& s : s_names) names.push_back(s.c_str());
    return report(hsf_stack(in.data(), names.empty() ? nullptr : names.data(), in.size(), s_out.c_str()));
  }
  if (*train) {
    std::string params;
    if (!config.empty() && !read_file(config, params)) {
      std::fprintf(stderr, "hsfuse: cannot read %s\n", config.c_str());
      return 2;
    }
    params += "\n" + join_params(t_params);
    return report(hsf_train(t_feat.c_str(), t_ref.c_str(), t_clf.c_str(), params.c_str(), t_fraction, t_min, seed,
                            t_model.c_str()));
  }
  if (*pred) return report(hsf_predict(p_model.c_str(), p_feat.c_str(), p_out.c_str()));
  if (*eval) {
    char* text = nullptr;
    const auto st = hsf_evaluate(v_ref.c_str(), v_pred.c_str(), &text);
    if (st == HSF_OK) {
      std::fputs(text, stdout);
      if (!v_out.empty()) {
        if (std::FILE* f = std::fopen(v_out.c_str(), "wb")) {
          std::fputs(text, f);
          std::fclose(f);
        } else {
          std::fprintf(stderr, "hsfuse: cannot write %s\n", v_out.c_str());
          hsf_string_free(text);
          return 2;
        }
      }
    }
    hsf_string_free(text);
    return report(st);
  }
  if (*scen) {
    if (config.empty()) {
      std::fprintf(stderr, "hsfuse: scenario needs --config\n");
      return 1;
    }
    std::string overrides;
    if (seed_given) overrides += "seed = " + std::to_string(seed) + "\n";
    if (runs > 0) overrides += "runs = " + std::to_string(runs) + "\n";
    if (!sc_out.empty()) overrides += "output = " + std::filesystem::absolute(sc_out).string() + "\n";
    char* text = nullptr;
    const auto st = hsf_run_scenario(config.c_str(), overrides.c_str(), &text);
    if (st == HSF_OK) std::fputs(text, stdout);
    hsf_string_free(text);
    return report(st);
  }
  if (*synth) return report(hsf_synth_scene(rows, cols, bands, seed, y_out.c_str()));
  if (*render) return report(hsf_render(r_map.c_str(), r_out.c_str()));
  return 1;
}
