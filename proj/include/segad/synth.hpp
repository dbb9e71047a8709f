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

#include "segad/core.hpp"

// Synthetic benchmark corpus: a static 7-segment layout and anomaly maps from
// simulated detectors. Bad samples carry a localized bump in one segment that
// lifts that segment's upper tail; every sample carries sparse heavy-tailed
// spikes in a distractor strip, so the global maximum of a map is mostly noise.
namespace segad::synth {

struct SynthConfig {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t n_good = 2000;
  std::size_t n_bad = 600;
  // Share of each class tagged `test`; the rest stays untagged for splitting.
  double test_fraction = 0.5;
  std::size_t detectors = 1;
  bool with_classifier_score = false;
  std::uint64_t seed = 2024;
};

inline constexpr std::uint32_t kBackgroundSegment = 0;
inline constexpr std::uint32_t kDistractorSegment = 6;

// Background, a large disk, two wires, two solder dots, and a bottom strip.
SegmentationMap make_layout(std::size_t width, std::size_t height);

AnomalyMap make_map(const SegmentationMap& seg, bool anomalous, std::uint64_t seed);

// Writes segmap.pgm, maps/<id>_k<k>.amap and manifest.csv under `dir` and
// returns the manifest (paths relative to `dir`).
DatasetManifest write_corpus(const SynthConfig& config, const std::filesystem::path& dir);

}  // namespace segad::synth
