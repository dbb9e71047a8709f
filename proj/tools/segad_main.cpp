// Copyright 2026 The SegAD Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// segad: command-line front end for the segment-statistics + boosted random
// forest pipeline. Exit codes: 0 ok, 2 validation error, 3 I/O error,
// 4 internal failure.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "segad/brf.hpp"
#include "segad/errors.hpp"
#include "segad/parallel.hpp"
#include "segad/pipeline.hpp"
#include "segad/synth.hpp"
#include "segad/text.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
namespace pl = segad::pipeline;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& field : segad::split_csv_line(text)) {
    const auto v = segad::parse_int(field);
    if (v < 0) throw segad::ValidationError("seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  return seeds;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw segad::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw segad::ParseError(path.string() + ": " + e.what());
  }
}

void print_top_features(const segad::brf::BrfModel& model, const fs::path& features) {
  const auto matrix = segad::stats::load_features_csv(features);
  const auto gain = model.feature_importance();
  std::vector<std::size_t> order(gain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
  double total = 0.0;
  for (double g : gain) total += g;
  std::cout << "top features by split gain:\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
    if (gain[order[i]] <= 0.0) break;
    std::cout << "  " << matrix.layout.name(order[i]) << "  "
              << segad::format_double(total > 0 ? gain[order[i]] / total : 0.0) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segad: segment-wise anomaly-map statistics scored by a boosted random forest"};
  app.require_subcommand(1);
  const std::size_t threads = segad::default_threads();

  // split
  auto* split = app.add_subcommand("split", "Assign split tags to a manifest");
  std::string split_manifest, split_out, split_protocol = "high-shot";
  std::uint64_t split_seed = 0;
  segad::SplitOptions split_opts;
  split->add_option("--manifest", split_manifest, "Input manifest CSV")->required();
  split->add_option("--protocol", split_protocol, "one-class | high-shot | low-shot");
  split->add_option("--seed", split_seed, "Split seed");
  split->add_option("--low-shot-bad", split_opts.low_shot_bad, "Bad samples kept for low-shot");
  split->add_option("--base-fraction", split_opts.base_fraction,
                    "Share of good training samples for the base models");
  split->add_option("--out", split_out, "Output manifest CSV")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "Compute per-segment feature vectors");
  std::string ex_manifest, ex_segmap, ex_out, ex_tag = "all", ex_setup, ex_mode = "full";
  std::size_t ex_detector = 0;
  bool ex_single = false;
  extract->add_option("--manifest", ex_manifest, "Manifest CSV")->required();
  extract->add_option("--segmap", ex_segmap, "Segmentation map (8-bit PGM)")->required();
  extract->add_option("--tag", ex_tag, "Split tag to keep, or 'all'");
  extract->add_option("--setup", ex_setup, "single_ad | all_ad | all_ad_plus_score");
  extract->add_option("--detector", ex_detector, "Map column used by single_ad (0-based)");
  extract->add_option("--mode", ex_mode, "full | max");
  extract->add_flag("--single-segment", ex_single, "Treat the image as one segment");
  extract->add_option("--out", ex_out, "Feature CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a boosted random forest on a feature CSV");
  std::string tr_features, tr_out, tr_preset = "brf", tr_config;
  std::uint64_t tr_seed = 0;
  train->add_option("--features", tr_features, "Feature CSV")->required();
  train->add_option("--preset", tr_preset, "brf | rf | bt");
  train->add_option("--config", tr_config, "JSON file overriding preset fields");
  train->add_option("--seed", tr_seed, "Training seed");
  train->add_option("--out", tr_out, "Model JSON")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Score a feature CSV with a trained model");
  std::string pr_model, pr_features, pr_out;
  predict->add_option("--model", pr_model, "Model JSON")->required();
  predict->add_option("--features", pr_features, "Feature CSV")->required();
  predict->add_option("--out", pr_out, "Score CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "AUROC and FPR@95TPR of a score CSV");
  std::string ev_scores, ev_out, ev_csv, ev_method = "segad";
  std::optional<std::uint64_t> ev_seed;
  eval->add_option("--scores", ev_scores, "Score CSV (id,label,score)")->required();
  eval->add_option("--out", ev_out, "JSON report");
  eval->add_option("--csv", ev_csv, "Append a method,seed,auroc,fpr row");
  eval->add_option("--method", ev_method, "Method name for the CSV row");
  eval->add_option("--seed", ev_seed, "Seed for the CSV row");

  // gen-defects
  auto* gen = app.add_subcommand("gen-defects", "Perturb good images inside segments");
  pl::GenDefectsRequest gen_req;
  std::string gen_images, gen_segmap, gen_out;
  std::vector<std::uint32_t> gen_exclude;
  gen->add_option("--images", gen_images, "Directory of .pgm/.ppm good images")->required();
  gen->add_option("--segmap", gen_segmap, "Segmentation map (8-bit PGM)")->required();
  gen->add_option("--n", gen_req.count, "Number of defective images");
  gen->add_option("--seed", gen_req.seed, "Generation seed");
  gen->add_option("--exclude", gen_exclude, "Segment indices never perturbed")->delimiter(',');
  gen->add_option("--sigma-min", gen_req.options.sigma_min, "Smallest blur sigma (px)");
  gen->add_option("--sigma-max", gen_req.options.sigma_max, "Largest blur sigma (px)");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Run the full protocol over several seeds");
  std::string b_config, b_manifest, b_segmap, b_out, b_protocol, b_seeds, b_preset, b_setup,
      b_variants;
  bool b_no_models = false;
  bench->add_option("--config", b_config, "JSON run config (flags override it)");
  bench->add_option("--manifest", b_manifest, "Manifest CSV");
  bench->add_option("--segmap", b_segmap, "Segmentation map (8-bit PGM)");
  bench->add_option("--protocol", b_protocol, "one-class | high-shot | low-shot");
  bench->add_option("--seeds", b_seeds, "Comma-separated seeds, e.g. 0,1,2,3,4");
  bench->add_option("--preset", b_preset, "brf | rf | bt");
  bench->add_option("--setup", b_setup, "single_ad | all_ad | all_ad_plus_score");
  bench->add_option("--variants", b_variants, "Comma-separated subset of an_det,one_seg,max,bt,rf,segad");
  bench->add_flag("--no-models", b_no_models, "Do not write model files");
  bench->add_option("--out", b_out, "Output directory");

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic benchmark corpus");
  segad::synth::SynthConfig syn;
  std::string syn_out;
  synth->add_option("--n-good", syn.n_good, "Good samples");
  synth->add_option("--n-bad", syn.n_bad, "Bad samples");
  synth->add_option("--size", syn.width, "Map width and height");
  synth->add_option("--detectors", syn.detectors, "Simulated detectors (K)");
  synth->add_flag("--with-score", syn.with_classifier_score, "Add a classifier score column");
  synth->add_option("--seed", syn.seed, "Corpus seed");
  synth->add_option("--out", syn_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (split->parsed()) {
      const auto m = pl::cmd_split(split_manifest, segad::parse_protocol(split_protocol), split_seed,
                                   split_opts, split_out);
      std::cout << "wrote " << m.samples.size() << " samples to " << split_out << '\n';
    } else if (extract->parsed()) {
      pl::ExtractRequest req;
      if (ex_tag != "all") req.tag = segad::parse_split_tag(ex_tag);
      if (!ex_setup.empty()) req.setup = pl::parse_setup(ex_setup);
      req.detector = ex_detector;
      if (ex_mode == "max") {
        req.mode = segad::stats::FeatureMode::max_only;
      } else if (ex_mode != "full") {
        throw segad::ValidationError("unknown mode '" + ex_mode + "'");
      }
      req.single_segment = ex_single;
      req.threads = threads;
      const auto m = pl::cmd_extract(ex_manifest, ex_segmap, req, ex_out);
      std::cout << "wrote " << m.rows() << "x" << m.cols() << " features to " << ex_out << '\n';
    } else if (train->parsed()) {
      auto cfg = segad::brf::preset(segad::brf::parse_preset(tr_preset));
      if (!tr_config.empty()) cfg = pl::apply_json(cfg, read_json_file(tr_config));
      cfg.seed = tr_seed;
      const auto model = pl::cmd_train(tr_features, cfg, tr_out, threads);
      std::cout << "wrote model (" << model.rounds.size() << " rounds x "
                << model.config.trees_per_round << " trees) to " << tr_out << '\n';
      print_top_features(model, tr_features);
    } else if (predict->parsed()) {
      const auto t = pl::cmd_predict(pr_model, pr_features, pr_out);
      std::cout << "wrote " << t.scores.size() << " scores to " << pr_out << '\n';
    } else if (eval->parsed()) {
      const auto r = pl::cmd_eval(ev_scores, ev_out, ev_csv, ev_method, ev_seed);
      std::cout << pl::to_json(r).dump(2) << '\n';
    } else if (gen->parsed()) {
      gen_req.images_dir = gen_images;
      gen_req.segmap = gen_segmap;
      gen_req.options.excluded_segments = gen_exclude;
      gen_req.threads = threads;
      const auto corpus = pl::cmd_gen_defects(gen_req, gen_out);
      std::cout << "wrote " << corpus.images.size() << " images and defects.csv to " << gen_out
                << '\n';
    } else if (bench->parsed()) {
      pl::RunConfig cfg;
      if (!b_config.empty()) cfg = pl::RunConfig::from_json(read_json_file(b_config));
      if (!b_manifest.empty()) cfg.manifest = b_manifest;
      if (!b_segmap.empty()) cfg.segmap = b_segmap;
      if (!b_out.empty()) cfg.out = b_out;
      if (!b_protocol.empty()) cfg.protocol = segad::parse_protocol(b_protocol);
      if (!b_seeds.empty()) cfg.seeds = parse_seed_list(b_seeds);
      if (!b_preset.empty()) cfg.preset = segad::brf::parse_preset(b_preset);
      if (!b_setup.empty()) cfg.setup = pl::parse_setup(b_setup);
      if (!b_variants.empty()) cfg.variants = segad::split_csv_line(b_variants);
      if (b_no_models) cfg.save_models = false;
      cfg.threads = threads;
      const auto report = pl::cmd_bench(cfg);
      std::cout << pl::format_ablation(report);
    } else if (synth->parsed()) {
      syn.height = syn.width;
      const auto m = segad::synth::write_corpus(syn, syn_out);
      std::cout << "wrote " << m.samples.size() << " samples to " << syn_out << '\n';
    }
  } catch (const segad::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const segad::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
