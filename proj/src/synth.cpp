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

#include "segad/synth.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "segad/errors.hpp"
#include "segad/io.hpp"
#include "segad/random.hpp"

namespace segad::synth {

namespace {

struct SegmentNoise {
  double offset;
  double sd;
};

// Indexed by segment: background, disk, wire, wire, dot, dot, distractor.
constexpr std::array<SegmentNoise, 7> kNoise{{{0.10, 0.05},
                                              {0.30, 0.10},
                                              {0.90, 0.15},
                                              {0.90, 0.15},
                                              {0.45, 0.12},
                                              {0.45, 0.12},
                                              {0.20, 0.05}}};

struct Bump {
  std::uint32_t segment = 0;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double strength = 0.0;  // in units of the segment's noise sd
};

Bump sample_bump(const SegmentationMap& seg, Rng& rng) {
  Bump b;
  b.segment = static_cast<std::uint32_t>(1 + rng.below(5));  // disk, wires, dots
  const auto pixels = seg.pixels(b.segment);
  const std::size_t p = pixels[rng.below(pixels.size())];
  b.cx = static_cast<double>(p % seg.width());
  b.cy = static_cast<double>(p / seg.width());
  b.radius = rng.uniform(1.5, 3.0);
  b.strength = rng.uniform(1.5, 3.0);
  return b;
}

AnomalyMap render(const SegmentationMap& seg, const Bump* bump, double sensitivity, Rng& rng) {
  const std::size_t W = seg.width();
  std::vector<float> values(W * seg.height());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SegmentNoise n = kNoise[seg.labels()[i]];
    values[i] = static_cast<float>(n.offset + n.sd * rng.normal());
  }

  // Sparse Pareto-tailed spikes in the distractor strip.
  const auto strip = seg.pixels(kDistractorSegment);
  const std::size_t spikes = 1 + rng.below(4);
  for (std::size_t s = 0; s < spikes; ++s) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    values[strip[rng.below(strip.size())]] += static_cast<float>(0.5 * std::pow(u, -1.0 / 1.2));
  }

  if (bump) {
    const double sd = kNoise[bump->segment].sd;
    for (std::size_t p : seg.pixels(bump->segment)) {
      const double dx = static_cast<double>(p % W) - bump->cx;
      const double dy = static_cast<double>(p / W) - bump->cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d > bump->radius) continue;
      values[p] += static_cast<float>(sensitivity * bump->strength * sd * (1.0 - 0.5 * d / bump->radius));
    }
  }
  return AnomalyMap(W, seg.height(), std::move(values));
}

}  // namespace

SegmentationMap make_layout(std::size_t width, std::size_t height) {
  if (width < 16 || height < 16) throw ValidationError("synthetic layout needs at least 16x16");
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  std::vector<std::uint32_t> labels(width * height, kBackgroundSegment);
  auto in_disk = [](double x, double y, double cx, double cy, double r) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  };
  for (std::size_t yi = 0; yi < height; ++yi) {
    for (std::size_t xi = 0; xi < width; ++xi) {
      const double x = static_cast<double>(xi) + 0.5;
      const double y = static_cast<double>(yi) + 0.5;
      std::uint32_t l = kBackgroundSegment;
      if (in_disk(x, y, 0.5 * w, 0.45 * h, 0.34 * std::min(w, h))) l = 1;
      if (x >= 0.35 * w && x < 0.41 * w && y >= 0.12 * h && y < 0.55 * h) l = 2;
      if (x >= 0.59 * w && x < 0.65 * w && y >= 0.12 * h && y < 0.55 * h) l = 3;
      if (in_disk(x, y, 0.38 * w, 0.62 * h, 0.08 * std::min(w, h))) l = 4;
      if (in_disk(x, y, 0.62 * w, 0.62 * h, 0.08 * std::min(w, h))) l = 5;
      if (y >= 0.90 * h) l = kDistractorSegment;
      labels[yi * width + xi] = l;
    }
  }
  return SegmentationMap(width, height, std::move(labels));
}

AnomalyMap make_map(const SegmentationMap& seg, bool anomalous, std::uint64_t seed) {
  Rng rng(seed);
  if (!anomalous) return render(seg, nullptr, 1.0, rng);
  const Bump bump = sample_bump(seg, rng);
  return render(seg, &bump, 1.0, rng);
}

DatasetManifest write_corpus(const SynthConfig& config, const std::filesystem::path& dir) {
  if (config.detectors == 0) throw ValidationError("at least one detector is required");
  std::filesystem::create_directories(dir / "maps");
  const SegmentationMap seg = make_layout(config.width, config.height);
  io::write_segmap(seg, dir / "segmap.pgm");

  DatasetManifest manifest;
  manifest.num_detectors = config.detectors;
  manifest.base_dir = dir;

  const auto n_test_good = static_cast<std::size_t>(config.test_fraction * static_cast<double>(config.n_good));
  const auto n_test_bad = static_cast<std::size_t>(config.test_fraction * static_cast<double>(config.n_bad));
  const std::size_t total = config.n_good + config.n_bad;
  for (std::size_t i = 0; i < total; ++i) {
    const bool bad = i >= config.n_good;
    const std::size_t class_index = bad ? i - config.n_good : i;
    std::ostringstream id;
    id << (bad ? "bad_" : "good_") << std::setw(5) << std::setfill('0') << class_index;

    SampleRecord rec;
    rec.id = id.str();
    rec.label = bad ? Label::bad : Label::good;
    if (class_index < (bad ? n_test_bad : n_test_good)) rec.split = SplitTag::test;

    Rng sample_rng(derive_seed(config.seed, {i}));
    Bump bump;
    if (bad) bump = sample_bump(seg, sample_rng);
    for (std::size_t k = 0; k < config.detectors; ++k) {
      // Detectors see the same defect with different noise and sensitivity.
      Rng rng(derive_seed(config.seed, {i, k + 1}));
      const double sensitivity = 1.0 - 0.15 * static_cast<double>(k);
      const AnomalyMap map = render(seg, bad ? &bump : nullptr, std::max(0.25, sensitivity), rng);
      const std::string rel = "maps/" + rec.id + "_k" + std::to_string(k) + ".amap";
      io::write_amap(map, dir / rel);
      rec.anomaly_map_paths.push_back(rel);
    }
    if (config.with_classifier_score) {
      rec.classifier_score = (bad ? 1.0 : 0.0) + 1.5 * sample_rng.normal();
    }
    manifest.samples.push_back(std::move(rec));
  }
  save_manifest(manifest, dir / "manifest.csv");
  return manifest;
}

}  // namespace segad::synth
