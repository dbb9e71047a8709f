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

#include "segad/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "segad/errors.hpp"
#include "segad/random.hpp"
#include "segad/text.hpp"

namespace segad {

AnomalyMap::AnomalyMap(std::size_t width, std::size_t height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width_ == 0 || height_ == 0) {
    throw DimensionError("anomaly map must have positive width and height");
  }
  if (values_.size() != width_ * height_) {
    throw DimensionError("anomaly map holds " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(width_ * height_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NonFiniteError("non-finite anomaly score at pixel " + std::to_string(i), i);
    }
  }
}

SegmentationMap::SegmentationMap(std::size_t width, std::size_t height,
                                 std::vector<std::uint32_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (width_ == 0 || height_ == 0) {
    throw DimensionError("segmentation map must have positive width and height");
  }
  if (labels_.size() != width_ * height_) {
    throw DimensionError("segmentation map holds " + std::to_string(labels_.size()) +
                         " labels, expected " + std::to_string(width_ * height_));
  }
  const std::uint32_t max_label = *std::max_element(labels_.begin(), labels_.end());
  pixels_.resize(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels_.size(); ++i) pixels_[labels_[i]].push_back(i);
  for (std::size_t l = 0; l < pixels_.size(); ++l) {
    if (pixels_[l].empty()) {
      throw GapError("segment index " + std::to_string(l) + " is absent (L = " +
                     std::to_string(pixels_.size()) + ")");
    }
  }
}

SegmentationMap SegmentationMap::single(std::size_t width, std::size_t height) {
  return SegmentationMap(width, height, std::vector<std::uint32_t>(width * height, 0));
}

std::span<const std::size_t> SegmentationMap::pixels(std::size_t segment) const {
  if (segment >= pixels_.size()) {
    throw IndexOutOfRangeError("segment " + std::to_string(segment) + " out of range, L = " +
                               std::to_string(pixels_.size()));
  }
  return pixels_[segment];
}

std::string_view to_string(Label label) { return label == Label::bad ? "bad" : "good"; }

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::base_model: return "base_model";
    case SplitTag::segad_train: return "segad_train";
    case SplitTag::test: return "test";
    case SplitTag::unused: return "unused";
  }
  return "";
}

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::one_class: return "one_class";
    case Protocol::high_shot: return "high_shot";
    case Protocol::low_shot: return "low_shot";
  }
  return "";
}

Label parse_label(std::string_view text) {
  if (text == "good" || text == "0") return Label::good;
  if (text == "bad" || text == "1") return Label::bad;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "base_model") return SplitTag::base_model;
  if (text == "segad_train") return SplitTag::segad_train;
  if (text == "test") return SplitTag::test;
  if (text == "unused") return SplitTag::unused;
  throw ParseError("unknown split tag '" + std::string(text) + "'");
}

Protocol parse_protocol(std::string_view text) {
  std::string norm(text);
  std::replace(norm.begin(), norm.end(), '-', '_');
  if (norm == "one_class") return Protocol::one_class;
  if (norm == "high_shot") return Protocol::high_shot;
  if (norm == "low_shot") return Protocol::low_shot;
  throw ValidationError("unknown protocol '" + std::string(text) + "'");
}

bool DatasetManifest::has_scores() const noexcept {
  return !samples.empty() && samples.front().classifier_score.has_value();
}

std::filesystem::path DatasetManifest::resolve(const std::string& map_path) const {
  std::filesystem::path p(map_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> ids;
  const bool scores = has_scores();
  for (const auto& s : samples) {
    if (s.id.empty()) throw ParseError("sample with empty id");
    if (!ids.insert(s.id).second) throw DuplicateIdError("duplicate sample id '" + s.id + "'");
    if (s.anomaly_map_paths.empty()) {
      throw InconsistencyError("sample '" + s.id + "' lists no anomaly maps");
    }
    if (s.anomaly_map_paths.size() != num_detectors) {
      throw InconsistencyError("sample '" + s.id + "' lists " +
                               std::to_string(s.anomaly_map_paths.size()) +
                               " anomaly maps, expected " + std::to_string(num_detectors));
    }
    if (s.classifier_score.has_value() != scores) {
      throw InconsistencyError("sample '" + s.id + "' disagrees on classifier score presence");
    }
    if (s.classifier_score && !std::isfinite(*s.classifier_score)) {
      throw ParseError("sample '" + s.id + "' has a non-finite classifier score");
    }
  }
}

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 5 || header[0] != "id" || header[1] != "label" || header[2] != "score" ||
      header.back() != "split") {
    throw ParseError("manifest header must be id,label,score,map_1,...,map_K,split");
  }
  manifest.num_detectors = header.size() - 4;
  for (std::size_t k = 0; k < manifest.num_detectors; ++k) {
    if (header[3 + k] != "map_" + std::to_string(k + 1)) {
      throw ParseError("manifest column " + std::to_string(4 + k) + " must be map_" +
                       std::to_string(k + 1));
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_csv_line(line);
    const std::string where = "manifest line " + std::to_string(line_no);
    if (fields.size() < 5) throw ParseError(where + ": too few columns");

    SampleRecord rec;
    rec.id = fields[0];
    try {
      rec.label = parse_label(fields[1]);
      if (!fields[2].empty()) rec.classifier_score = parse_double(fields[2]);
      if (!fields.back().empty()) rec.split = parse_split_tag(fields.back());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    for (std::size_t i = 3; i + 1 < fields.size(); ++i) {
      if (!fields[i].empty()) rec.anomaly_map_paths.push_back(fields[i]);
    }
    if (rec.anomaly_map_paths.size() != manifest.num_detectors) {
      throw InconsistencyError(where + ": sample '" + rec.id + "' lists " +
                               std::to_string(rec.anomaly_map_paths.size()) +
                               " anomaly maps, expected " +
                               std::to_string(manifest.num_detectors));
    }
    manifest.samples.push_back(std::move(rec));
  }
  manifest.validate();
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  out << "id,label,score";
  for (std::size_t k = 0; k < manifest.num_detectors; ++k) out << ",map_" << k + 1;
  out << ",split\n";
  for (const auto& s : manifest.samples) {
    out << s.id << ',' << to_string(s.label) << ',';
    if (s.classifier_score) out << format_double(*s.classifier_score);
    for (const auto& p : s.anomaly_map_paths) out << ',' << p;
    out << ',';
    if (s.split) out << to_string(*s.split);
    out << '\n';
  }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path,
                   std::string_view provenance) {
  // Map paths are rewritten relative to the new file so the copy stays loadable.
  namespace fs = std::filesystem;
  DatasetManifest copy = manifest;
  const fs::path target_dir = fs::absolute(path).parent_path().lexically_normal();
  for (auto& s : copy.samples) {
    for (auto& p : s.anomaly_map_paths) {
      const fs::path source = fs::absolute(manifest.resolve(p)).lexically_normal();
      const fs::path rel = source.lexically_relative(target_dir);
      p = (rel.empty() ? source : rel).generic_string();
    }
  }
  copy.base_dir = target_dir;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  if (!provenance.empty()) out << "# " << provenance << '\n';
  write_manifest(out, copy);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

namespace {

constexpr std::uint64_t kGoodStream = 1;
constexpr std::uint64_t kBadStream = 2;

}  // namespace

DatasetManifest split_dataset(const DatasetManifest& manifest, Protocol protocol,
                              std::uint64_t seed, const SplitOptions& options) {
  if (!(options.base_fraction > 0.0 && options.base_fraction < 1.0)) {
    throw ValidationError("base fraction must lie in (0, 1)");
  }

  DatasetManifest out = manifest;
  std::vector<std::size_t> goods;
  std::vector<std::size_t> bads;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (out.samples[i].split) continue;
    (out.samples[i].label == Label::good ? goods : bads).push_back(i);
  }

  // Odd counts leave the extra sample in the base_model half.
  const std::size_t n_good = goods.size();
  const auto n_segad = static_cast<std::size_t>(
      std::floor((1.0 - options.base_fraction) * static_cast<double>(n_good) + 1e-9));
  if (n_good < 2 || n_segad == 0 || n_segad == n_good) {
    throw InsufficientSamplesError("need at least one untagged good sample per half, have " +
                                   std::to_string(n_good) + " in total");
  }
  Rng good_rng(derive_seed(seed, {kGoodStream}));
  shuffle(std::span(goods), good_rng);
  for (std::size_t j = 0; j < n_good; ++j) {
    out.samples[goods[j]].split = j < n_good - n_segad ? SplitTag::base_model
                                                       : SplitTag::segad_train;
  }

  std::size_t n_take = 0;
  switch (protocol) {
    case Protocol::one_class: n_take = 0; break;
    case Protocol::high_shot: n_take = bads.size(); break;
    case Protocol::low_shot:
      n_take = std::min(options.low_shot_bad, bads.size());
      Rng bad_rng(derive_seed(seed, {kBadStream}));
      shuffle(std::span(bads), bad_rng);
      break;
  }
  for (std::size_t j = 0; j < bads.size(); ++j) {
    out.samples[bads[j]].split = j < n_take ? SplitTag::segad_train : SplitTag::unused;
  }
  return out;
}

}  // namespace segad
