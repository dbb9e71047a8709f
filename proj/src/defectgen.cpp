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

#include "segad/defectgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "segad/errors.hpp"
#include "segad/parallel.hpp"
#include "segad/text.hpp"

namespace segad::defectgen {

std::vector<Rect> segment_bounding_boxes(const SegmentationMap& seg) {
  const std::size_t L = seg.num_segments();
  std::vector<std::size_t> x0(L, std::numeric_limits<std::size_t>::max()), y0 = x0;
  std::vector<std::size_t> x1(L, 0), y1(L, 0);
  for (std::size_t y = 0; y < seg.height(); ++y) {
    for (std::size_t x = 0; x < seg.width(); ++x) {
      const auto l = seg.at(x, y);
      x0[l] = std::min(x0[l], x);
      y0[l] = std::min(y0[l], y);
      x1[l] = std::max(x1[l], x);
      y1[l] = std::max(y1[l], y);
    }
  }
  std::vector<Rect> boxes(L);
  for (std::size_t l = 0; l < L; ++l) {
    boxes[l] = Rect{x0[l], y0[l], x1[l] - x0[l] + 1, y1[l] - y0[l] + 1};
  }
  return boxes;
}

namespace {

// Rectangle of size w x h centred on (cx, cy), clipped to `bounds`.
Rect centred_clip(std::int64_t cx, std::int64_t cy, std::size_t w, std::size_t h,
                  const Rect& bounds) {
  const auto bx0 = static_cast<std::int64_t>(bounds.x);
  const auto by0 = static_cast<std::int64_t>(bounds.y);
  const auto bx1 = bx0 + static_cast<std::int64_t>(bounds.width);
  const auto by1 = by0 + static_cast<std::int64_t>(bounds.height);
  const std::int64_t x0 = std::max(bx0, cx - static_cast<std::int64_t>(w / 2));
  const std::int64_t y0 = std::max(by0, cy - static_cast<std::int64_t>(h / 2));
  const std::int64_t x1 = std::min(bx1, cx - static_cast<std::int64_t>(w / 2) + static_cast<std::int64_t>(w));
  const std::int64_t y1 = std::min(by1, cy - static_cast<std::int64_t>(h / 2) + static_cast<std::int64_t>(h));
  return Rect{static_cast<std::size_t>(x0), static_cast<std::size_t>(y0),
              static_cast<std::size_t>(x1 - x0), static_cast<std::size_t>(y1 - y0)};
}

}  // namespace

DefectSpec sample_defect(const SegmentationMap& seg, Rng& rng, const DefectOptions& options) {
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t l = 0; l < seg.num_segments(); ++l) {
    if (std::find(options.excluded_segments.begin(), options.excluded_segments.end(), l) ==
        options.excluded_segments.end()) {
      candidates.push_back(l);
    }
  }
  // Excluding everything would leave nothing to perturb; fall back to all segments.
  if (candidates.empty()) {
    for (std::uint32_t l = 0; l < seg.num_segments(); ++l) candidates.push_back(l);
  }

  DefectSpec spec;
  spec.kind = rng.below(2) == 0 ? DefectKind::blur : DefectKind::rectangle;
  spec.segment = candidates[rng.below(candidates.size())];

  const Rect bbox = segment_bounding_boxes(seg)[spec.segment];
  const auto pixels = seg.pixels(spec.segment);
  auto random_segment_pixel = [&](const Rect& within) {
    // Rejection over the segment's pixels; the first draw lies inside `within`
    // whenever `within` is the bounding box.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const std::size_t p = pixels[rng.below(pixels.size())];
      const std::size_t px = p % seg.width();
      const std::size_t py = p / seg.width();
      if (within.contains(px, py)) return std::pair{px, py};
    }
    return std::pair{within.x, within.y};
  };

  spec.whole_segment = !rng.bernoulli(options.sub_region_probability);
  spec.region = bbox;
  if (!spec.whole_segment) {
    const std::size_t w = static_cast<std::size_t>(rng.between(
        static_cast<std::int64_t>(std::max<std::size_t>(1, bbox.width / 4)),
        static_cast<std::int64_t>(bbox.width)));
    const std::size_t h = static_cast<std::size_t>(rng.between(
        static_cast<std::int64_t>(std::max<std::size_t>(1, bbox.height / 4)),
        static_cast<std::int64_t>(bbox.height)));
    const auto [cx, cy] = random_segment_pixel(bbox);
    spec.region = centred_clip(static_cast<std::int64_t>(cx), static_cast<std::int64_t>(cy), w, h, bbox);
  }

  if (spec.kind == DefectKind::blur) {
    spec.sigma = rng.uniform(options.sigma_min, options.sigma_max);
    return spec;
  }

  const std::size_t long_side = std::max(bbox.width, bbox.height);
  const auto length_max = std::max<std::size_t>(
      options.length_min,
      static_cast<std::size_t>(options.length_max_fraction * static_cast<double>(long_side)));
  const auto length = static_cast<std::size_t>(rng.between(
      static_cast<std::int64_t>(options.length_min), static_cast<std::int64_t>(length_max)));
  const auto thickness = static_cast<std::size_t>(rng.between(
      static_cast<std::int64_t>(options.thickness_min),
      static_cast<std::int64_t>(options.thickness_max)));
  const bool horizontal = rng.below(2) == 0;
  const auto [cx, cy] = random_segment_pixel(spec.region);
  const Rect image_bounds{0, 0, seg.width(), seg.height()};
  spec.rectangle = centred_clip(static_cast<std::int64_t>(cx), static_cast<std::int64_t>(cy),
                                horizontal ? length : thickness,
                                horizontal ? thickness : length, image_bounds);
  spec.shade = static_cast<std::uint8_t>(rng.below(256));
  return spec;
}

void validate_spec(const DefectSpec& spec, const SegmentationMap& seg) {
  auto inside = [&](const Rect& r) {
    return r.width > 0 && r.height > 0 && r.x + r.width <= seg.width() &&
           r.y + r.height <= seg.height();
  };
  if (spec.segment >= seg.num_segments()) throw ValidationError("defect segment out of range");
  if (!inside(spec.region)) throw ValidationError("defect region outside the image");
  if (spec.kind == DefectKind::blur && !(spec.sigma > 0.0 && std::isfinite(spec.sigma))) {
    throw ValidationError("blur sigma must be > 0");
  }
  if (spec.kind == DefectKind::rectangle && !inside(spec.rectangle)) {
    throw ValidationError("defect rectangle outside the image");
  }
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return k;
}

// Separable truncated Gaussian over `area`; taps falling outside the image are
// dropped and the remaining weights renormalized. Returns area.width *
// area.height * channels values.
std::vector<double> blur_area(const GrayImage& img, const Rect& area, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  const auto W = static_cast<std::int64_t>(img.width);
  const auto H = static_cast<std::int64_t>(img.height);
  const std::size_t C = img.channels;

  const std::int64_t ax0 = static_cast<std::int64_t>(area.x);
  const std::int64_t ay0 = static_cast<std::int64_t>(area.y);
  const std::int64_t ax1 = ax0 + static_cast<std::int64_t>(area.width);
  const std::int64_t ay1 = ay0 + static_cast<std::int64_t>(area.height);
  const std::int64_t ry0 = std::max<std::int64_t>(0, ay0 - radius);
  const std::int64_t ry1 = std::min(H, ay1 + radius);

  // Horizontal pass on the rows the vertical pass will read.
  std::vector<double> horiz(static_cast<std::size_t>(ry1 - ry0) * area.width * C);
  for (std::int64_t y = ry0; y < ry1; ++y) {
    for (std::int64_t x = ax0; x < ax1; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        double norm = 0.0;
        for (std::int64_t d = -radius; d <= radius; ++d) {
          const std::int64_t xs = x + d;
          if (xs < 0 || xs >= W) continue;
          const double w = kernel[static_cast<std::size_t>(d + radius)];
          acc += w * img.at(static_cast<std::size_t>(xs), static_cast<std::size_t>(y), c);
          norm += w;
        }
        horiz[(static_cast<std::size_t>(y - ry0) * area.width + static_cast<std::size_t>(x - ax0)) * C + c] =
            acc / norm;
      }
    }
  }

  std::vector<double> out(area.width * area.height * C);
  for (std::int64_t y = ay0; y < ay1; ++y) {
    for (std::int64_t x = ax0; x < ax1; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        double norm = 0.0;
        for (std::int64_t d = -radius; d <= radius; ++d) {
          const std::int64_t ys = y + d;
          if (ys < 0 || ys >= H) continue;
          const double w = kernel[static_cast<std::size_t>(d + radius)];
          acc += w * horiz[(static_cast<std::size_t>(ys - ry0) * area.width +
                            static_cast<std::size_t>(x - ax0)) * C + c];
          norm += w;
        }
        out[(static_cast<std::size_t>(y - ay0) * area.width + static_cast<std::size_t>(x - ax0)) * C + c] =
            acc / norm;
      }
    }
  }
  return out;
}

}  // namespace

GrayImage apply_defect(const GrayImage& image, const SegmentationMap& seg, const DefectSpec& spec) {
  if (image.width != seg.width() || image.height != seg.height()) {
    throw DimensionError("image and segmentation map differ in size");
  }
  validate_spec(spec, seg);
  GrayImage out = image;

  if (spec.kind == DefectKind::rectangle) {
    const Rect& r = spec.rectangle;
    for (std::size_t y = r.y; y < r.y + r.height; ++y) {
      for (std::size_t x = r.x; x < r.x + r.width; ++x) {
        if (seg.at(x, y) != spec.segment || !spec.region.contains(x, y)) continue;
        for (std::size_t c = 0; c < out.channels; ++c) out.at(x, y, c) = spec.shade;
      }
    }
    return out;
  }

  const Rect& area = spec.region;
  const auto blurred = blur_area(image, area, spec.sigma);
  for (std::size_t y = area.y; y < area.y + area.height; ++y) {
    for (std::size_t x = area.x; x < area.x + area.width; ++x) {
      if (seg.at(x, y) != spec.segment) continue;
      for (std::size_t c = 0; c < out.channels; ++c) {
        const double v = blurred[((y - area.y) * area.width + (x - area.x)) * out.channels + c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Corpus generate_corpus(std::span<const SourceImage> sources, const SegmentationMap& seg,
                       std::size_t n, std::uint64_t seed, const DefectOptions& options,
                       std::size_t threads) {
  if (n == 0) throw ValidationError("corpus size must be >= 1");
  if (sources.empty()) throw EmptyInputError("no source images");
  Corpus corpus;
  corpus.images.resize(n);
  corpus.log.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const SourceImage& src = sources[i % sources.size()];
    Rng rng(derive_seed(seed, {i}));
    DefectLogEntry entry{i, src.id, sample_defect(seg, rng, options)};
    corpus.images[i] = apply_defect(src.image, seg, entry.spec);
    corpus.log[i] = std::move(entry);
  });
  return corpus;
}

std::vector<GrayImage> replay(std::span<const DefectLogEntry> log,
                              std::span<const SourceImage> sources, const SegmentationMap& seg) {
  std::vector<GrayImage> out;
  out.reserve(log.size());
  for (const auto& entry : log) {
    const auto it = std::find_if(sources.begin(), sources.end(),
                                 [&](const SourceImage& s) { return s.id == entry.source_id; });
    if (it == sources.end()) {
      throw ValidationError("spec log references unknown source '" + entry.source_id + "'");
    }
    out.push_back(apply_defect(it->image, seg, entry.spec));
  }
  return out;
}

void write_spec_log(std::ostream& out, std::span<const DefectLogEntry> log) {
  out << "index,source_id,kind,segment,whole_segment,region_x,region_y,region_w,region_h,"
         "sigma,rect_x,rect_y,rect_w,rect_h,shade\n";
  for (const auto& e : log) {
    const DefectSpec& s = e.spec;
    out << e.index << ',' << e.source_id << ','
        << (s.kind == DefectKind::blur ? "blur" : "rectangle") << ',' << s.segment << ','
        << (s.whole_segment ? 1 : 0) << ',' << s.region.x << ',' << s.region.y << ','
        << s.region.width << ',' << s.region.height << ',' << format_double(s.sigma) << ','
        << s.rectangle.x << ',' << s.rectangle.y << ',' << s.rectangle.width << ','
        << s.rectangle.height << ',' << static_cast<int>(s.shade) << '\n';
  }
}

std::vector<DefectLogEntry> read_spec_log(std::istream& in) {
  std::string line;
  std::vector<DefectLogEntry> log;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 15) throw ParseError("spec log row has " + std::to_string(f.size()) + " fields");
    auto u = [&](std::size_t i) {
      const auto v = parse_int(f[i]);
      if (v < 0) throw ParseError("negative value in spec log");
      return static_cast<std::size_t>(v);
    };
    DefectLogEntry e;
    e.index = u(0);
    e.source_id = f[1];
    if (f[2] == "blur") {
      e.spec.kind = DefectKind::blur;
    } else if (f[2] == "rectangle") {
      e.spec.kind = DefectKind::rectangle;
    } else {
      throw ParseError("unknown defect kind '" + f[2] + "'");
    }
    e.spec.segment = static_cast<std::uint32_t>(u(3));
    e.spec.whole_segment = u(4) != 0;
    e.spec.region = Rect{u(5), u(6), u(7), u(8)};
    e.spec.sigma = parse_double(f[9]);
    e.spec.rectangle = Rect{u(10), u(11), u(12), u(13)};
    const auto shade = u(14);
    if (shade > 255) throw ParseError("shade out of range");
    e.spec.shade = static_cast<std::uint8_t>(shade);
    log.push_back(std::move(e));
  }
  return log;
}

}  // namespace segad::defectgen
