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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segad/core.hpp"

namespace segad::stats {

inline constexpr double kTailQuantile = 0.995;

// Values of `map` at the pixels of segment `segment`, in row-major order.
std::vector<double> segment_values(const AnomalyMap& map, const SegmentationMap& seg,
                                   std::size_t segment);

// Linear interpolation between order statistics at h = (n - 1) * p.
double quantile(std::span<const double> values, double p);
// Same result as quantile() but reorders `values` (nth_element) instead of copying.
double quantile_inplace(std::span<double> values, double p);

double mean(std::span<const double> values);
// Population moments. Skewness and excess kurtosis are 0 for a zero-variance list.
double skewness(std::span<const double> values);
double kurtosis(std::span<const double> values);

struct SegmentStats {
  double quantile_995 = 0.0;
  double skew = 0.0;
  double kurtosis = 0.0;
  double mean = 0.0;
};

SegmentStats segment_stats(std::span<const double> values);

enum class Statistic : std::uint8_t { quantile, skewness, kurtosis, mean, maximum };

// kFull is the four-statistic layout. kMaxOnly replaces it with a single
// per-segment maximum (ablation baseline).
enum class FeatureMode : std::uint8_t { full, max_only };

// Maps (statistic, detector k, segment l) to a vector position. With a score
// the classifier output sits at index 0; then one block per statistic, each
// block k-major and l-minor.
struct FeatureLayout {
  std::size_t detectors = 1;
  std::size_t segments = 1;
  bool has_score = false;
  FeatureMode mode = FeatureMode::full;

  struct Slot {
    bool is_score = false;
    Statistic stat = Statistic::quantile;
    std::size_t detector = 0;
    std::size_t segment = 0;
  };

  std::size_t statistics_per_segment() const noexcept { return mode == FeatureMode::full ? 4 : 1; }
  std::size_t size() const noexcept {
    return detectors * segments * statistics_per_segment() + (has_score ? 1 : 0);
  }
  std::size_t index(Statistic stat, std::size_t detector, std::size_t segment) const;
  std::size_t score_index() const;
  Slot decode(std::size_t index) const;
  // Column name such as "q_k0_l3" or "g".
  std::string name(std::size_t index) const;

  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureVector {
  FeatureLayout layout;
  std::vector<double> values;
};

FeatureVector extract_features(std::span<const AnomalyMap> maps, const SegmentationMap& seg,
                               std::optional<double> score,
                               FeatureMode mode = FeatureMode::full);

// Row-major design matrix with per-row ids and labels.
struct FeatureMatrix {
  FeatureLayout layout;
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<double> values;

  std::size_t rows() const noexcept { return ids.size(); }
  std::size_t cols() const noexcept { return layout.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols(), cols());
  }
  void append(const std::string& id, Label label, std::span<const double> row);
  // Keeps rows whose index is listed, in the given order.
  FeatureMatrix select(std::span<const std::size_t> rows) const;
};

struct ExtractOptions {
  FeatureMode mode = FeatureMode::full;
  bool include_score = true;            // ignored when the manifest has no scores
  std::vector<std::size_t> detectors;   // subset of map columns; empty = all
  std::size_t threads = 1;
};

// One feature row per sample whose split tag matches `filter` (all samples
// when unset), in manifest order. Map loading failures are reported as
// IoError/FormatError naming the sample id.
FeatureMatrix extract_corpus(const DatasetManifest& manifest, const SegmentationMap& seg,
                             std::optional<SplitTag> filter, const ExtractOptions& options = {});

// CSV: `id,label,<feature names...>`; a first line starting with '#' is a
// provenance comment.
void write_features_csv(std::ostream& out, const FeatureMatrix& matrix);
void save_features_csv(const FeatureMatrix& matrix, const std::filesystem::path& path,
                       std::string_view provenance = {});
FeatureMatrix read_features_csv(std::istream& in);
FeatureMatrix load_features_csv(const std::filesystem::path& path);

}  // namespace segad::stats
