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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "segad/brf.hpp"
#include "segad/core.hpp"
#include "segad/defectgen.hpp"
#include "segad/metrics.hpp"
#include "segad/stats.hpp"

// Pipeline stages behind the command-line tool. Each stage reads and writes
// files so the stages can be chained by hand; cmd_bench chains them in
// process with the same functions.
namespace segad::pipeline {

namespace fs = std::filesystem;

// Which anomaly maps (and whether the classifier score) enter the features.
enum class Setup : std::uint8_t { single_ad, all_ad, all_ad_plus_score };

Setup parse_setup(std::string_view text);
std::string_view to_string(Setup setup);
// all_ad_plus_score when the manifest carries scores, otherwise all_ad.
Setup default_setup(const DatasetManifest& manifest);

stats::ExtractOptions extract_options(const DatasetManifest& manifest, Setup setup,
                                      std::size_t detector, stats::FeatureMode mode,
                                      std::size_t threads);

// "segad <command> config_hash=<16 hex> seed=<seed>"
std::string provenance(std::string_view command, const nlohmann::json& config,
                       std::optional<std::uint64_t> seed);

// Re-throws the active exception with "stage '<stage>' (<artifact>): " prefixed,
// keeping its error type.
[[noreturn]] void rethrow_in_stage(std::string_view stage, const fs::path& artifact);

struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<double> scores;
};

void save_scores_csv(const ScoreTable& table, const fs::path& path, std::string_view provenance);
ScoreTable load_scores_csv(const fs::path& path);

nlohmann::json to_json(const metrics::EvalReport& report);
nlohmann::json to_json(const brf::BrfConfig& cfg);
// Applies the keys present in `j` on top of `base`.
brf::BrfConfig apply_json(brf::BrfConfig base, const nlohmann::json& j);

DatasetManifest cmd_split(const fs::path& manifest, Protocol protocol, std::uint64_t seed,
                          const SplitOptions& options, const fs::path& out);

struct ExtractRequest {
  std::optional<SplitTag> tag;
  std::optional<Setup> setup;
  std::size_t detector = 0;
  stats::FeatureMode mode = stats::FeatureMode::full;
  bool single_segment = false;  // replace the segmentation map by an all-ones mask
  std::size_t threads = 1;
};

stats::FeatureMatrix cmd_extract(const fs::path& manifest, const fs::path& segmap,
                                 const ExtractRequest& request, const fs::path& out);

brf::BrfModel cmd_train(const fs::path& features, const brf::BrfConfig& cfg, const fs::path& out,
                        std::size_t threads);

ScoreTable cmd_predict(const fs::path& model, const fs::path& features, const fs::path& out);

// Writes the JSON report to `out` when non-empty and appends a
// `method,seed,auroc,fpr` row to `csv_out` when non-empty.
metrics::EvalReport cmd_eval(const fs::path& scores, const fs::path& out,
                             const fs::path& csv_out = {}, std::string_view method = "segad",
                             std::optional<std::uint64_t> seed = std::nullopt);

struct GenDefectsRequest {
  fs::path images_dir;
  fs::path segmap;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  defectgen::DefectOptions options;
  std::size_t threads = 1;
};

// Reads every .pgm/.ppm in images_dir (sorted by name), writes
// defect_<index>.<ext> and defects.csv into `out`.
defectgen::Corpus cmd_gen_defects(const GenDefectsRequest& request, const fs::path& out);

struct RunConfig {
  fs::path manifest;
  fs::path segmap;
  fs::path out;
  Protocol protocol = Protocol::high_shot;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  brf::Preset preset = brf::Preset::brf;
  nlohmann::json brf_overrides = nlohmann::json::object();
  std::optional<Setup> setup;
  std::size_t detector = 0;
  SplitOptions split;
  // Rows of the ablation table, in output order.
  std::vector<std::string> variants{"an_det", "one_seg", "max", "bt", "rf", "segad"};
  bool save_models = true;
  std::size_t threads = 1;  // not part of the report: results do not depend on it

  // Mirrors the command-line flags; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

inline const std::vector<std::string> kKnownVariants{"an_det", "one_seg", "max", "bt", "rf", "segad"};

// Runs split -> extract -> train -> predict -> eval for every seed and every
// variant, writes per-seed artifacts under out/seed_<seed>/ plus report.json,
// report.csv and ablation.txt, and returns the report.
nlohmann::json cmd_bench(const RunConfig& config);

// Plain-text ablation table (mean +- std per variant).
std::string format_ablation(const nlohmann::json& report);

}  // namespace segad::pipeline
