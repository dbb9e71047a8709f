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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "segad/core.hpp"
#include "segad/image.hpp"
#include "segad/random.hpp"

// Synthetic disturbances for training without real defects: Gaussian blur or
// a thin gray rectangle, confined to one segment (or a part of it).
namespace segad::defectgen {

enum class DefectKind : std::uint8_t { blur, rectangle };

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool contains(std::size_t px, std::size_t py) const noexcept {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  bool operator==(const Rect&) const = default;
};

struct DefectSpec {
  DefectKind kind = DefectKind::blur;
  std::uint32_t segment = 0;
  bool whole_segment = true;
  Rect region;            // segment bounding box, or a part of it
  double sigma = 0.0;     // blur only
  Rect rectangle;         // rectangle only, already clipped to the image
  std::uint8_t shade = 0; // rectangle only

  bool operator==(const DefectSpec&) const = default;
};

// Sampling ranges. None of these are prescribed values; they are chosen to
// give visible but local disturbances on images of a few hundred pixels.
struct DefectOptions {
  double sigma_min = 2.0;
  double sigma_max = 8.0;
  std::size_t thickness_min = 2;
  std::size_t thickness_max = 10;
  std::size_t length_min = 10;
  double length_max_fraction = 0.4;  // of the segment bounding box's long side
  double sub_region_probability = 0.5;
  std::vector<std::uint32_t> excluded_segments;  // e.g. background
};

std::vector<Rect> segment_bounding_boxes(const SegmentationMap& seg);

DefectSpec sample_defect(const SegmentationMap& seg, Rng& rng, const DefectOptions& options = {});

// Throws ValidationError for specs that do not fit `seg`.
void validate_spec(const DefectSpec& spec, const SegmentationMap& seg);

// Only pixels inside the affected area and inside the segment change.
GrayImage apply_defect(const GrayImage& image, const SegmentationMap& seg, const DefectSpec& spec);

struct SourceImage {
  std::string id;
  GrayImage image;
};

struct DefectLogEntry {
  std::size_t index = 0;
  std::string source_id;
  DefectSpec spec;
  bool operator==(const DefectLogEntry&) const = default;
};

struct Corpus {
  std::vector<GrayImage> images;
  std::vector<DefectLogEntry> log;
};

// Output i perturbs source i mod |sources| with a spec drawn from the
// substream (seed, i); the result does not depend on `threads`.
Corpus generate_corpus(std::span<const SourceImage> sources, const SegmentationMap& seg,
                       std::size_t n, std::uint64_t seed, const DefectOptions& options = {},
                       std::size_t threads = 1);

// Re-applies every logged spec to its source image.
std::vector<GrayImage> replay(std::span<const DefectLogEntry> log,
                              std::span<const SourceImage> sources, const SegmentationMap& seg);

// CSV with header
// index,source_id,kind,segment,whole_segment,region_x,region_y,region_w,region_h,
// sigma,rect_x,rect_y,rect_w,rect_h,shade
void write_spec_log(std::ostream& out, std::span<const DefectLogEntry> log);
std::vector<DefectLogEntry> read_spec_log(std::istream& in);

}  // namespace segad::defectgen
