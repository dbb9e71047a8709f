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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segad {

// Per-pixel anomaly scores emitted by one detector, row-major. Values are kept
// in single precision, the precision of the on-disk format.
class AnomalyMap {
 public:
  // Throws DimensionError on a zero extent or size mismatch and
  // NonFiniteError on NaN/inf.
  AnomalyMap(std::size_t width, std::size_t height, std::vector<float> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<float> values_;
};

// Partition of the image into L mutually exclusive segments. Every index in
// [0, L) occurs at least once.
class SegmentationMap {
 public:
  // L is inferred as max(label) + 1. Throws GapError when an index below L is
  // missing and DimensionError on shape problems.
  SegmentationMap(std::size_t width, std::size_t height, std::vector<std::uint32_t> labels);

  // All pixels in segment 0 ("one segment" mask).
  static SegmentationMap single(std::size_t width, std::size_t height);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t num_segments() const noexcept { return pixels_.size(); }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::uint32_t at(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }

  // Row-major pixel offsets belonging to segment l.
  std::span<const std::size_t> pixels(std::size_t segment) const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::vector<std::size_t>> pixels_;
};

enum class Label : std::uint8_t { good = 0, bad = 1 };

enum class SplitTag : std::uint8_t { base_model, segad_train, test, unused };

enum class Protocol : std::uint8_t { one_class, high_shot, low_shot };

std::string_view to_string(Label label);
std::string_view to_string(SplitTag tag);
std::string_view to_string(Protocol protocol);
Label parse_label(std::string_view text);
SplitTag parse_split_tag(std::string_view text);
// Accepts both "high_shot" and "high-shot" spellings.
Protocol parse_protocol(std::string_view text);

struct SampleRecord {
  std::string id;
  Label label = Label::good;
  std::vector<std::string> anomaly_map_paths;  // K entries
  std::optional<double> classifier_score;
  std::optional<SplitTag> split;  // empty = not yet assigned
};

struct DatasetManifest {
  std::vector<SampleRecord> samples;
  std::size_t num_detectors = 0;
  // Directory that relative map paths are resolved against.
  std::filesystem::path base_dir;

  bool has_scores() const noexcept;
  std::filesystem::path resolve(const std::string& map_path) const;
  // Enforces the manifest invariants; throws the matching ValidationError.
  void validate() const;
};

// CSV manifest: header `id,label,score,map_1,...,map_K,split`. Lines starting
// with '#' are comments.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
// Writes `path` with map paths made relative to its directory.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path,
                   std::string_view provenance = {});

struct SplitOptions {
  // Bad samples drawn for the low-shot protocol.
  std::size_t low_shot_bad = 100;
  // Share of untagged good training samples assigned to base_model.
  double base_fraction = 0.5;
};

// Assigns split tags to every sample that has none. Samples that already carry
// a tag (the test set, pinned synthetic defects) are left as they are.
// Untagged good samples are shuffled and cut into base_model / segad_train;
// untagged bad samples become segad_train or unused depending on the protocol.
DatasetManifest split_dataset(const DatasetManifest& manifest, Protocol protocol,
                              std::uint64_t seed, const SplitOptions& options = {});

}  // namespace segad
