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

#include "segad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "segad/errors.hpp"
#include "segad/io.hpp"
#include "segad/parallel.hpp"
#include "segad/text.hpp"

namespace segad::stats {

std::vector<double> segment_values(const AnomalyMap& map, const SegmentationMap& seg,
                                   std::size_t segment) {
  if (map.width() != seg.width() || map.height() != seg.height()) {
    throw DimensionError("anomaly map and segmentation map differ in size");
  }
  const auto pixels = seg.pixels(segment);
  const auto values = map.values();
  std::vector<double> out;
  out.reserve(pixels.size());
  for (std::size_t p : pixels) out.push_back(values[p]);
  return out;
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> copy(values.begin(), values.end());
  return quantile_inplace(copy, p);
}

double quantile_inplace(std::span<double> values, double p) {
  if (values.empty()) throw EmptyInputError("quantile of an empty list");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile fraction must lie in [0, 1]");
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  if (lo + 1 >= values.size()) return v_lo;
  const double v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                        values.end());
  return v_lo + (h - static_cast<double>(lo)) * (v_hi - v_lo);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("mean of an empty list");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(std::span<const double> values) {
  Moments m;
  m.mean = mean(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return m;  // exact zero variance, even if the mean rounded
  for (double v : values) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const auto n = static_cast<double>(values.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

double skew_of(const Moments& m) { return m.m2 > 0.0 ? m.m3 / std::pow(m.m2, 1.5) : 0.0; }
double kurt_of(const Moments& m) { return m.m2 > 0.0 ? m.m4 / (m.m2 * m.m2) - 3.0 : 0.0; }

}  // namespace

double skewness(std::span<const double> values) { return skew_of(central_moments(values)); }

double kurtosis(std::span<const double> values) { return kurt_of(central_moments(values)); }

SegmentStats segment_stats(std::span<const double> values) {
  const Moments m = central_moments(values);
  std::vector<double> scratch(values.begin(), values.end());
  return SegmentStats{quantile_inplace(scratch, kTailQuantile), skew_of(m), kurt_of(m), m.mean};
}

namespace {

std::size_t block_of(Statistic stat, FeatureMode mode) {
  if (mode == FeatureMode::max_only) {
    if (stat != Statistic::maximum) throw ValidationError("max-only layout holds maxima only");
    return 0;
  }
  switch (stat) {
    case Statistic::quantile: return 0;
    case Statistic::skewness: return 1;
    case Statistic::kurtosis: return 2;
    case Statistic::mean: return 3;
    case Statistic::maximum: break;
  }
  throw ValidationError("full layout holds no maxima");
}

constexpr Statistic kFullOrder[] = {Statistic::quantile, Statistic::skewness,
                                    Statistic::kurtosis, Statistic::mean};

const char* prefix_of(Statistic stat) {
  switch (stat) {
    case Statistic::quantile: return "q";
    case Statistic::skewness: return "z";
    case Statistic::kurtosis: return "c";
    case Statistic::mean: return "m";
    case Statistic::maximum: return "max";
  }
  return "?";
}

}  // namespace

std::size_t FeatureLayout::index(Statistic stat, std::size_t detector, std::size_t segment) const {
  if (detector >= detectors || segment >= segments) {
    throw IndexOutOfRangeError("feature slot (k=" + std::to_string(detector) +
                               ", l=" + std::to_string(segment) + ") outside layout");
  }
  const std::size_t block = block_of(stat, mode);
  return (has_score ? 1 : 0) + block * detectors * segments + detector * segments + segment;
}

std::size_t FeatureLayout::score_index() const {
  if (!has_score) throw IndexOutOfRangeError("layout has no classifier score");
  return 0;
}

FeatureLayout::Slot FeatureLayout::decode(std::size_t idx) const {
  if (idx >= size()) throw IndexOutOfRangeError("feature index " + std::to_string(idx));
  Slot slot;
  if (has_score) {
    if (idx == 0) {
      slot.is_score = true;
      return slot;
    }
    --idx;
  }
  const std::size_t per_block = detectors * segments;
  const std::size_t block = idx / per_block;
  const std::size_t rem = idx % per_block;
  slot.stat = mode == FeatureMode::full ? kFullOrder[block] : Statistic::maximum;
  slot.detector = rem / segments;
  slot.segment = rem % segments;
  return slot;
}

std::string FeatureLayout::name(std::size_t idx) const {
  const Slot s = decode(idx);
  if (s.is_score) return "g";
  return std::string(prefix_of(s.stat)) + "_k" + std::to_string(s.detector) + "_l" +
         std::to_string(s.segment);
}

FeatureVector extract_features(std::span<const AnomalyMap> maps, const SegmentationMap& seg,
                               std::optional<double> score, FeatureMode mode) {
  if (maps.empty()) throw ValidationError("at least one anomaly map is required");
  for (const auto& m : maps) {
    if (m.width() != seg.width() || m.height() != seg.height()) {
      throw DimensionError("anomaly map " + std::to_string(m.width()) + "x" +
                           std::to_string(m.height()) + " does not match segmentation map " +
                           std::to_string(seg.width()) + "x" + std::to_string(seg.height()));
    }
  }

  FeatureVector out;
  out.layout = FeatureLayout{maps.size(), seg.num_segments(), score.has_value(), mode};
  out.values.assign(out.layout.size(), 0.0);
  if (score) out.values[0] = *score;

  std::vector<double> buffer;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto values = maps[k].values();
    for (std::size_t l = 0; l < seg.num_segments(); ++l) {
      const auto pixels = seg.pixels(l);
      buffer.resize(pixels.size());
      for (std::size_t i = 0; i < pixels.size(); ++i) buffer[i] = values[pixels[i]];

      if (mode == FeatureMode::max_only) {
        out.values[out.layout.index(Statistic::maximum, k, l)] =
            *std::max_element(buffer.begin(), buffer.end());
        continue;
      }
      const SegmentStats s = segment_stats(buffer);
      out.values[out.layout.index(Statistic::quantile, k, l)] = s.quantile_995;
      out.values[out.layout.index(Statistic::skewness, k, l)] = s.skew;
      out.values[out.layout.index(Statistic::kurtosis, k, l)] = s.kurtosis;
      out.values[out.layout.index(Statistic::mean, k, l)] = s.mean;
    }
  }
  return out;
}

void FeatureMatrix::append(const std::string& id, Label label, std::span<const double> row) {
  if (row.size() != cols()) {
    throw DimensionError("feature row has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(cols()));
  }
  ids.push_back(id);
  labels.push_back(label);
  values.insert(values.end(), row.begin(), row.end());
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> picked) const {
  FeatureMatrix out;
  out.layout = layout;
  for (std::size_t i : picked) out.append(ids.at(i), labels.at(i), row(i));
  return out;
}

FeatureMatrix extract_corpus(const DatasetManifest& manifest, const SegmentationMap& seg,
                             std::optional<SplitTag> filter, const ExtractOptions& options) {
  std::vector<std::size_t> detectors = options.detectors;
  if (detectors.empty()) {
    for (std::size_t k = 0; k < manifest.num_detectors; ++k) detectors.push_back(k);
  }
  for (std::size_t k : detectors) {
    if (k >= manifest.num_detectors) {
      throw IndexOutOfRangeError("detector " + std::to_string(k) + " not in manifest (K = " +
                                 std::to_string(manifest.num_detectors) + ")");
    }
  }
  const bool with_score = options.include_score && manifest.has_scores();

  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (!filter || manifest.samples[i].split == filter) picked.push_back(i);
  }

  FeatureMatrix out;
  out.layout = FeatureLayout{detectors.size(), seg.num_segments(), with_score, options.mode};
  std::vector<std::vector<double>> rows(picked.size());
  parallel_for(picked.size(), options.threads, [&](std::size_t j) {
    const SampleRecord& s = manifest.samples[picked[j]];
    std::vector<AnomalyMap> maps;
    maps.reserve(detectors.size());
    try {
      for (std::size_t k : detectors) {
        maps.push_back(io::read_amap(manifest.resolve(s.anomaly_map_paths[k])));
      }
      std::optional<double> score;
      if (with_score) score = s.classifier_score;
      rows[j] = extract_features(maps, seg, score, options.mode).values;
    } catch (const IoError& e) {
      throw IoError("sample '" + s.id + "': " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("sample '" + s.id + "': " + e.what());
    } catch (const DimensionError& e) {
      throw DimensionError("sample '" + s.id + "': " + e.what());
    }
  });
  for (std::size_t j = 0; j < picked.size(); ++j) {
    const SampleRecord& s = manifest.samples[picked[j]];
    out.append(s.id, s.label, rows[j]);
  }
  return out;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& matrix) {
  out << "id,label";
  for (std::size_t c = 0; c < matrix.cols(); ++c) out << ',' << matrix.layout.name(c);
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << matrix.ids[r] << ',' << to_string(matrix.labels[r]);
    for (double v : matrix.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_features_csv(const FeatureMatrix& matrix, const std::filesystem::path& path,
                       std::string_view provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (!provenance.empty()) out << "# " << provenance << '\n';
  write_features_csv(out, matrix);
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

FeatureLayout layout_from_header(const std::vector<std::string>& names) {
  FeatureLayout layout;
  std::size_t first = 0;
  if (!names.empty() && names[0] == "g") {
    layout.has_score = true;
    first = 1;
  }
  if (first >= names.size()) throw ParseError("feature CSV has no feature columns");
  layout.mode = names[first].rfind("max_", 0) == 0 ? FeatureMode::max_only : FeatureMode::full;
  std::size_t max_k = 0;
  std::size_t max_l = 0;
  for (std::size_t i = first; i < names.size(); ++i) {
    const auto kpos = names[i].find("_k");
    const auto lpos = names[i].find("_l", kpos == std::string::npos ? 0 : kpos + 2);
    if (kpos == std::string::npos || lpos == std::string::npos) {
      throw ParseError("unrecognized feature column '" + names[i] + "'");
    }
    const auto k = parse_int(std::string_view(names[i]).substr(kpos + 2, lpos - kpos - 2));
    const auto l = parse_int(std::string_view(names[i]).substr(lpos + 2));
    if (k < 0 || l < 0) throw ParseError("negative index in column '" + names[i] + "'");
    max_k = std::max(max_k, static_cast<std::size_t>(k));
    max_l = std::max(max_l, static_cast<std::size_t>(l));
  }
  layout.detectors = max_k + 1;
  layout.segments = max_l + 1;
  if (layout.size() != names.size()) throw ParseError("feature CSV columns do not form a layout");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (layout.name(i) != names[i]) {
      throw ParseError("feature column " + std::to_string(i) + " is '" + names[i] +
                       "', expected '" + layout.name(i) + "'");
    }
  }
  return layout;
}

}  // namespace

FeatureMatrix read_features_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw ParseError("feature CSV header must start with id,label");
  }
  FeatureMatrix m;
  m.layout = layout_from_header(std::vector<std::string>(header.begin() + 2, header.end()));
  std::vector<double> row(m.cols());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("feature CSV line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = parse_double(fields[c + 2]);
    m.append(fields[0], parse_label(fields[1]), row);
  }
  return m;
}

FeatureMatrix load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_features_csv(in);
}

}  // namespace segad::stats
