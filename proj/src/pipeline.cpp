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

#include "segad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "segad/errors.hpp"
#include "segad/io.hpp"
#include "segad/text.hpp"

namespace segad::pipeline {

using nlohmann::json;

namespace {

template <typename F>
auto staged(std::string_view stage, const fs::path& artifact, F&& f) {
  try {
    return f();
  } catch (...) {
    rethrow_in_stage(stage, artifact);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

}  // namespace

Setup parse_setup(std::string_view text) {
  std::string norm(text);
  std::replace(norm.begin(), norm.end(), '-', '_');
  if (norm == "single_ad") return Setup::single_ad;
  if (norm == "all_ad") return Setup::all_ad;
  if (norm == "all_ad_plus_score") return Setup::all_ad_plus_score;
  throw ValidationError("unknown setup '" + std::string(text) + "'");
}

std::string_view to_string(Setup setup) {
  switch (setup) {
    case Setup::single_ad: return "single_ad";
    case Setup::all_ad: return "all_ad";
    case Setup::all_ad_plus_score: return "all_ad_plus_score";
  }
  return "";
}

Setup default_setup(const DatasetManifest& manifest) {
  return manifest.has_scores() ? Setup::all_ad_plus_score : Setup::all_ad;
}

stats::ExtractOptions extract_options(const DatasetManifest& manifest, Setup setup,
                                      std::size_t detector, stats::FeatureMode mode,
                                      std::size_t threads) {
  stats::ExtractOptions o;
  o.mode = mode;
  o.threads = threads;
  o.include_score = setup == Setup::all_ad_plus_score;
  if (o.include_score && !manifest.has_scores()) {
    throw ValidationError("setup all_ad_plus_score needs a score column in the manifest");
  }
  if (setup == Setup::single_ad) {
    if (detector >= manifest.num_detectors) {
      throw IndexOutOfRangeError("detector " + std::to_string(detector) + " not in manifest (K = " +
                            std::to_string(manifest.num_detectors) + ")");
    }
    o.detectors = {detector};
  }
  return o;
}

std::string provenance(std::string_view command, const json& config,
                       std::optional<std::uint64_t> seed) {
  std::string p = "segad " + std::string(command) + " config_hash=" + hex64(fnv1a64(config.dump()));
  if (seed) p += " seed=" + std::to_string(*seed);
  return p;
}

void rethrow_in_stage(std::string_view stage, const fs::path& artifact) {
  const std::string prefix = "stage '" + std::string(stage) + "' (" + artifact.string() + "): ";
  try {
    throw;
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(prefix + e.what(), e.index());
  } catch (const BadMagicError& e) {
    throw BadMagicError(prefix + e.what());
  } catch (const TruncatedError& e) {
    throw TruncatedError(prefix + e.what());
  } catch (const GapError& e) {
    throw GapError(prefix + e.what());
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const ParseError& e) {
    throw ParseError(prefix + e.what());
  } catch (const InconsistencyError& e) {
    throw InconsistencyError(prefix + e.what());
  } catch (const DuplicateIdError& e) {
    throw DuplicateIdError(prefix + e.what());
  } catch (const InsufficientSamplesError& e) {
    throw InsufficientSamplesError(prefix + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const IndexOutOfRangeError& e) {
    throw IndexOutOfRangeError(prefix + e.what());
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(prefix + e.what());
  } catch (const SingleClassError& e) {
    throw SingleClassError(prefix + e.what());
  } catch (const VersionError& e) {
    throw VersionError(prefix + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const json::exception& e) {
    throw ValidationError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw IoError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

void save_scores_csv(const ScoreTable& table, const fs::path& path, std::string_view prov) {
  std::ostringstream out;
  if (!prov.empty()) out << "# " << prov << '\n';
  out << "id,label,score\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out << table.ids[i] << ',' << to_string(table.labels[i]) << ','
        << format_double(table.scores[i]) << '\n';
  }
  write_text(path, out.str());
}

ScoreTable load_scores_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ScoreTable t;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_csv_line(line);
    if (header) {
      if (f.size() != 3 || f[0] != "id" || f[1] != "label" || f[2] != "score") {
        throw ParseError("score CSV header must be id,label,score");
      }
      header = false;
      continue;
    }
    if (f.size() != 3) throw ParseError("score CSV line " + std::to_string(line_no) + " malformed");
    t.ids.push_back(f[0]);
    t.labels.push_back(parse_label(f[1]));
    t.scores.push_back(parse_double(f[2]));
  }
  return t;
}

json to_json(const metrics::EvalReport& r) {
  return json{{"auroc", r.auroc},
              {"fpr_at_95tpr", r.fpr_at_95tpr},
              {"threshold_used", r.threshold_used},
              {"n_good", r.n_good},
              {"n_bad", r.n_bad}};
}

json to_json(const brf::BrfConfig& c) {
  return json{{"num_rounds", c.num_rounds},
              {"trees_per_round", c.trees_per_round},
              {"learning_rate", c.learning_rate},
              {"max_depth", c.max_depth},
              {"subsample_rows", c.subsample_rows},
              {"colsample_per_tree", c.colsample_per_tree},
              {"colsample_per_node", c.colsample_per_node},
              {"l1_alpha", c.l1_alpha},
              {"l2_lambda", c.l2_lambda},
              {"min_child_weight", c.min_child_weight},
              {"base_margin", c.base_margin},
              {"seed", c.seed}};
}

brf::BrfConfig apply_json(brf::BrfConfig c, const json& j) {
  if (!j.is_object()) throw ValidationError("BRF overrides must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "num_rounds") c.num_rounds = value.get<std::size_t>();
    else if (key == "trees_per_round") c.trees_per_round = value.get<std::size_t>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "max_depth") c.max_depth = value.get<std::size_t>();
    else if (key == "subsample_rows") c.subsample_rows = value.get<double>();
    else if (key == "colsample_per_tree") c.colsample_per_tree = value.get<double>();
    else if (key == "colsample_per_node") c.colsample_per_node = value.get<double>();
    else if (key == "l1_alpha") c.l1_alpha = value.get<double>();
    else if (key == "l2_lambda") c.l2_lambda = value.get<double>();
    else if (key == "min_child_weight") c.min_child_weight = value.get<double>();
    else if (key == "base_margin") c.base_margin = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ValidationError("unknown BRF config key '" + key + "'");
  }
  c.validate();
  return c;
}

DatasetManifest cmd_split(const fs::path& manifest, Protocol protocol, std::uint64_t seed,
                          const SplitOptions& options, const fs::path& out) {
  const DatasetManifest m = staged("split", manifest, [&] { return load_manifest(manifest); });
  const DatasetManifest split =
      staged("split", manifest, [&] { return split_dataset(m, protocol, seed, options); });
  const json cfg{{"protocol", to_string(protocol)},
                 {"low_shot_bad", options.low_shot_bad},
                 {"base_fraction", options.base_fraction}};
  staged("split", out, [&] {
    ensure_parent(out);
    save_manifest(split, out, provenance("split", cfg, seed));
    return 0;
  });
  return split;
}

stats::FeatureMatrix cmd_extract(const fs::path& manifest, const fs::path& segmap,
                                 const ExtractRequest& req, const fs::path& out) {
  const DatasetManifest m = staged("extract", manifest, [&] { return load_manifest(manifest); });
  SegmentationMap seg = staged("extract", segmap, [&] { return io::read_segmap(segmap); });
  if (req.single_segment) seg = SegmentationMap::single(seg.width(), seg.height());
  const Setup setup = req.setup.value_or(default_setup(m));
  const auto options = staged("extract", manifest, [&] {
    return extract_options(m, setup, req.detector, req.mode, req.threads);
  });
  const auto matrix =
      staged("extract", manifest, [&] { return stats::extract_corpus(m, seg, req.tag, options); });
  const json cfg{{"tag", req.tag ? std::string(to_string(*req.tag)) : std::string("all")},
                 {"setup", to_string(setup)},
                 {"detector", req.detector},
                 {"mode", req.mode == stats::FeatureMode::full ? "full" : "max"},
                 {"single_segment", req.single_segment}};
  staged("extract", out, [&] {
    ensure_parent(out);
    stats::save_features_csv(matrix, out, provenance("extract", cfg, std::nullopt));
    return 0;
  });
  return matrix;
}

brf::BrfModel cmd_train(const fs::path& features, const brf::BrfConfig& cfg, const fs::path& out,
                        std::size_t threads) {
  const auto matrix = staged("train", features, [&] { return stats::load_features_csv(features); });
  brf::TrainOptions opts;
  opts.threads = threads;
  const auto model = staged("train", features, [&] {
    return brf::train(brf::MatrixView(matrix.values, matrix.rows(), matrix.cols()), matrix.labels,
                      cfg, opts);
  });
  staged("train", out, [&] {
    ensure_parent(out);
    brf::save_model(model, out);
    return 0;
  });
  return model;
}

ScoreTable cmd_predict(const fs::path& model_path, const fs::path& features, const fs::path& out) {
  const auto model = staged("predict", model_path, [&] { return brf::load_model(model_path); });
  const auto matrix =
      staged("predict", features, [&] { return stats::load_features_csv(features); });
  ScoreTable table{matrix.ids, matrix.labels, {}};
  table.scores = staged("predict", features, [&] {
    return model.predict_margin(brf::MatrixView(matrix.values, matrix.rows(), matrix.cols()));
  });
  staged("predict", out, [&] {
    ensure_parent(out);
    save_scores_csv(table, out, provenance("predict", to_json(model.config), model.config.seed));
    return 0;
  });
  return table;
}

metrics::EvalReport cmd_eval(const fs::path& scores, const fs::path& out, const fs::path& csv_out,
                             std::string_view method, std::optional<std::uint64_t> seed) {
  const auto table = staged("eval", scores, [&] { return load_scores_csv(scores); });
  const auto report =
      staged("eval", scores, [&] { return metrics::evaluate(table.scores, table.labels); });
  if (!out.empty()) {
    staged("eval", out, [&] {
      ensure_parent(out);
      write_text(out, to_json(report).dump(2) + "\n");
      return 0;
    });
  }
  if (!csv_out.empty()) {
    staged("eval", csv_out, [&] {
      ensure_parent(csv_out);
      const bool fresh = !fs::exists(csv_out);
      std::ofstream csv(csv_out, std::ios::binary | std::ios::app);
      if (!csv) throw IoError("cannot write " + csv_out.string());
      if (fresh) csv << "method,seed,auroc,fpr\n";
      csv << method << ',' << (seed ? std::to_string(*seed) : std::string()) << ','
          << format_double(report.auroc) << ',' << format_double(report.fpr_at_95tpr) << '\n';
      return 0;
    });
  }
  return report;
}

defectgen::Corpus cmd_gen_defects(const GenDefectsRequest& req, const fs::path& out) {
  const SegmentationMap seg =
      staged("gen-defects", req.segmap, [&] { return io::read_segmap(req.segmap); });
  std::vector<defectgen::SourceImage> sources;
  std::vector<std::string> extensions;
  staged("gen-defects", req.images_dir, [&] {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(req.images_dir)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no .pgm/.ppm images found");
    for (const auto& f : files) {
      sources.push_back({f.stem().string(), io::read_pnm(f)});
      extensions.push_back(f.extension().string());
    }
    return 0;
  });
  const auto corpus = staged("gen-defects", req.images_dir, [&] {
    return defectgen::generate_corpus(sources, seg, req.count, req.seed, req.options, req.threads);
  });
  staged("gen-defects", out, [&] {
    fs::create_directories(out);
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
      std::ostringstream name;
      name << "defect_" << std::setw(5) << std::setfill('0') << i
           << (corpus.images[i].channels == 3 ? ".ppm" : ".pgm");
      io::write_pnm(corpus.images[i], out / name.str());
    }
    std::ostringstream log;
    defectgen::write_spec_log(log, corpus.log);
    write_text(out / "defects.csv", log.str());
    return 0;
  });
  return corpus;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "manifest") c.manifest = value.get<std::string>();
      else if (key == "segmap") c.segmap = value.get<std::string>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "protocol") c.protocol = parse_protocol(value.get<std::string>());
      else if (key == "seeds") c.seeds = value.get<std::vector<std::uint64_t>>();
      else if (key == "preset") c.preset = brf::parse_preset(value.get<std::string>());
      else if (key == "brf") c.brf_overrides = value;
      else if (key == "setup") {
        const auto text = value.get<std::string>();
        c.setup = text == "auto" ? std::nullopt : std::optional<Setup>(parse_setup(text));
      }
      else if (key == "detector") c.detector = value.get<std::size_t>();
      else if (key == "low_shot_bad") c.split.low_shot_bad = value.get<std::size_t>();
      else if (key == "base_fraction") c.split.base_fraction = value.get<double>();
      else if (key == "variants") c.variants = value.get<std::vector<std::string>>();
      else if (key == "save_models") c.save_models = value.get<bool>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else throw ValidationError("unknown run config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return c;
}

json RunConfig::to_json() const {
  return json{{"manifest", manifest.string()},
              {"segmap", segmap.string()},
              {"out", out.string()},
              {"protocol", segad::to_string(protocol)},
              {"seeds", seeds},
              {"preset", brf::to_string(preset)},
              {"brf", brf_overrides},
              {"setup", setup ? std::string(pipeline::to_string(*setup)) : std::string("auto")},
              {"detector", detector},
              {"low_shot_bad", split.low_shot_bad},
              {"base_fraction", split.base_fraction},
              {"variants", variants},
              {"save_models", save_models}};
}

void RunConfig::validate() const {
  if (manifest.empty() || segmap.empty() || out.empty()) {
    throw ValidationError("manifest, segmap and out are required");
  }
  if (seeds.empty()) throw ValidationError("seed list must not be empty");
  if (variants.empty()) throw ValidationError("variant list must not be empty");
  for (const auto& v : variants) {
    if (std::find(kKnownVariants.begin(), kKnownVariants.end(), v) == kKnownVariants.end()) {
      throw ValidationError("unknown variant '" + v + "'");
    }
  }
  apply_json(brf::preset(preset), brf_overrides);
}

namespace {

const std::map<std::string, std::string>& variant_labels() {
  static const std::map<std::string, std::string> labels{
      {"an_det", "An.Det."}, {"one_seg", "One Seg."}, {"max", "Max."},
      {"bt", "BT"},          {"rf", "RF"},            {"segad", "SegAD"}};
  return labels;
}

brf::MatrixView view(const stats::FeatureMatrix& m) {
  return brf::MatrixView(m.values, m.rows(), m.cols());
}

json aggregate_json(const std::vector<double>& values) {
  const auto a = metrics::aggregate(values);
  return json{{"mean", a.mean}, {"std", a.std}, {"per_seed", a.per_seed}};
}

}  // namespace

json cmd_bench(const RunConfig& config) {
  staged("bench", config.out, [&] {
    config.validate();
    return 0;
  });
  const DatasetManifest manifest =
      staged("load manifest", config.manifest, [&] { return load_manifest(config.manifest); });
  const SegmentationMap seg =
      staged("load segmap", config.segmap, [&] { return io::read_segmap(config.segmap); });
  const Setup setup = config.setup.value_or(default_setup(manifest));
  // The output directory is left out so reports from two locations compare equal.
  json config_json = config.to_json();
  config_json.erase("out");
  staged("bench", config.out, [&] {
    fs::create_directories(config.out);
    return 0;
  });

  auto wants = [&](const char* v) {
    return std::find(config.variants.begin(), config.variants.end(), v) != config.variants.end();
  };
  const bool need_full = wants("segad") || wants("bt") || wants("rf");

  // Features do not depend on the seed; extract every sample once per layout.
  const SegmentationMap single = SegmentationMap::single(seg.width(), seg.height());
  stats::FeatureMatrix full_seg, max_seg, full_single, global_max;
  staged("extract", config.manifest, [&] {
    using stats::FeatureMode;
    if (need_full) {
      full_seg = stats::extract_corpus(
          manifest, seg, std::nullopt,
          extract_options(manifest, setup, config.detector, FeatureMode::full, config.threads));
    }
    if (wants("max")) {
      max_seg = stats::extract_corpus(
          manifest, seg, std::nullopt,
          extract_options(manifest, setup, config.detector, FeatureMode::max_only, config.threads));
    }
    if (wants("one_seg")) {
      full_single = stats::extract_corpus(
          manifest, single, std::nullopt,
          extract_options(manifest, setup, config.detector, FeatureMode::full, config.threads));
    }
    if (wants("an_det")) {
      auto o = extract_options(manifest, setup, config.detector, FeatureMode::max_only, config.threads);
      o.include_score = false;
      global_max = stats::extract_corpus(manifest, single, std::nullopt, o);
    }
    return 0;
  });

  std::map<std::string, std::vector<double>> auroc_by_variant, fpr_by_variant;
  std::vector<double> detector_share(setup == Setup::single_ad ? 1 : manifest.num_detectors, 0.0);
  double score_share = 0.0;
  std::size_t importance_runs = 0;
  json per_seed = json::array();
  std::ostringstream csv;
  csv << "method,seed,auroc,fpr\n";

  for (const std::uint64_t seed : config.seeds) {
    const fs::path seed_dir = config.out / ("seed_" + std::to_string(seed));
    const DatasetManifest split = staged("split", config.manifest, [&] {
      return split_dataset(manifest, config.protocol, seed, config.split);
    });
    std::vector<std::size_t> train_rows, test_rows;
    std::size_t train_good = 0;
    std::size_t train_bad = 0;
    for (std::size_t i = 0; i < split.samples.size(); ++i) {
      const auto& s = split.samples[i];
      if (s.split == SplitTag::segad_train) {
        train_rows.push_back(i);
        (s.label == Label::bad ? train_bad : train_good)++;
      } else if (s.split == SplitTag::test) {
        test_rows.push_back(i);
      }
    }
    staged("split", seed_dir, [&] {
      fs::create_directories(seed_dir);
      json split_cfg{{"protocol", segad::to_string(config.protocol)},
                     {"low_shot_bad", config.split.low_shot_bad},
                     {"base_fraction", config.split.base_fraction}};
      save_manifest(split, seed_dir / "manifest.csv", provenance("split", split_cfg, seed));
      return 0;
    });

    json results = json::object();
    for (const auto& variant : config.variants) {
      metrics::EvalReport report;
      if (variant == "an_det") {
        // Average of the per-detector global-max scorers.
        const auto test = global_max.select(test_rows);
        double auroc_sum = 0.0;
        double fpr_sum = 0.0;
        for (std::size_t k = 0; k < test.cols(); ++k) {
          std::vector<double> scores(test.rows());
          for (std::size_t r = 0; r < test.rows(); ++r) scores[r] = test.row(r)[k];
          report = staged("eval", seed_dir, [&] { return metrics::evaluate(scores, test.labels); });
          auroc_sum += report.auroc;
          fpr_sum += report.fpr_at_95tpr;
        }
        report.auroc = auroc_sum / static_cast<double>(test.cols());
        report.fpr_at_95tpr = fpr_sum / static_cast<double>(test.cols());
      } else {
        const stats::FeatureMatrix& all = variant == "max"       ? max_seg
                                          : variant == "one_seg" ? full_single
                                                                 : full_seg;
        brf::Preset preset = config.preset;
        if (variant == "bt") preset = brf::Preset::bt;
        if (variant == "rf") preset = brf::Preset::rf;
        brf::BrfConfig cfg = brf::preset(preset);
        if (variant != "bt" && variant != "rf") cfg = apply_json(cfg, config.brf_overrides);
        cfg.seed = seed;

        const auto train = all.select(train_rows);
        const auto test = all.select(test_rows);
        brf::TrainOptions opts;
        opts.threads = config.threads;
        const auto model =
            staged("train", seed_dir, [&] { return brf::train(view(train), train.labels, cfg, opts); });
        if (config.save_models) {
          staged("train", seed_dir, [&] {
            brf::save_model(model, seed_dir / ("model_" + variant + ".json"));
            return 0;
          });
        }
        ScoreTable table{test.ids, test.labels, model.predict_margin(view(test))};
        staged("predict", seed_dir, [&] {
          save_scores_csv(table, seed_dir / ("scores_" + variant + ".csv"),
                          provenance("predict", to_json(cfg), seed));
          return 0;
        });
        report = staged("eval", seed_dir, [&] { return metrics::evaluate(table.scores, table.labels); });

        if (variant == "segad") {
          const auto importance = model.feature_importance();
          double total = 0.0;
          for (double g : importance) total += g;
          if (total > 0.0) {
            for (std::size_t f = 0; f < importance.size(); ++f) {
              const auto slot = all.layout.decode(f);
              if (slot.is_score) {
                score_share += importance[f] / total;
              } else {
                detector_share[slot.detector] += importance[f] / total;
              }
            }
            ++importance_runs;
          }
        }
      }
      auroc_by_variant[variant].push_back(report.auroc);
      fpr_by_variant[variant].push_back(report.fpr_at_95tpr);
      results[variant] = {{"auroc", report.auroc}, {"fpr_at_95tpr", report.fpr_at_95tpr}};
      csv << variant << ',' << seed << ',' << format_double(report.auroc) << ','
          << format_double(report.fpr_at_95tpr) << '\n';
    }
    per_seed.push_back(json{{"seed", seed},
                            {"train", {{"n_good", train_good}, {"n_bad", train_bad}}},
                            {"n_test", test_rows.size()},
                            {"results", results}});
  }

  json variants = json::array();
  for (const auto& v : config.variants) {
    variants.push_back(json{{"name", v},
                            {"label", variant_labels().at(v)},
                            {"auroc", aggregate_json(auroc_by_variant[v])},
                            {"fpr_at_95tpr", aggregate_json(fpr_by_variant[v])}});
  }
  json report{{"provenance", provenance("bench", config_json, std::nullopt)},
              {"config", config_json},
              {"setup", to_string(setup)},
              {"variants", variants},
              {"per_seed", per_seed}};
  if (importance_runs > 0) {
    json shares = json::array();
    for (double s : detector_share) shares.push_back(s / static_cast<double>(importance_runs));
    report["segad_gain_share"] = {{"per_detector", shares},
                                  {"classifier_score", score_share / static_cast<double>(importance_runs)}};
  }

  staged("report", config.out, [&] {
    write_text(config.out / "report.json", report.dump(2) + "\n");
    write_text(config.out / "report.csv", csv.str());
    write_text(config.out / "ablation.txt", format_ablation(report));
    return 0;
  });
  return report;
}

std::string format_ablation(const json& report) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "Method" << std::setw(22) << "Cl. AUROC"
      << "FPR@95TPR\n";
  out << std::fixed << std::setprecision(1);
  for (const auto& v : report.at("variants")) {
    std::ostringstream auroc, fpr;
    auroc << std::fixed << std::setprecision(1) << 100.0 * v["auroc"]["mean"].get<double>()
          << " +- " << 100.0 * v["auroc"]["std"].get<double>();
    fpr << std::fixed << std::setprecision(1) << 100.0 * v["fpr_at_95tpr"]["mean"].get<double>()
        << " +- " << 100.0 * v["fpr_at_95tpr"]["std"].get<double>();
    out << std::setw(12) << v["label"].get<std::string>() << std::setw(22) << auroc.str()
        << fpr.str() << '\n';
  }
  return out.str();
}

}  // namespace segad::pipeline
