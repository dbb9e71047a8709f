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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "segad/errors.hpp"
#include "segad/io.hpp"
#include "segad/random.hpp"
#include "segad/stats.hpp"
#include "test_util.hpp"

using namespace segad;
using namespace segad::stats;

namespace {

std::vector<double> random_list(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  const auto kind = rng.below(4);
  for (auto& x : v) {
    switch (kind) {
      case 0: x = rng.normal(); break;
      case 1: x = -std::log(1.0 - rng.uniform()); break;
      case 2: x = static_cast<double>(rng.below(5)); break;
      default: x = 10.0 * rng.uniform() - 3.0; break;
    }
  }
  return v;
}

AnomalyMap random_map(Rng& rng, std::size_t w, std::size_t h) {
  std::vector<float> v(w * h);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return AnomalyMap(w, h, std::move(v));
}

SegmentationMap random_seg(Rng& rng, std::size_t w, std::size_t h, std::uint32_t segments) {
  std::vector<std::uint32_t> labels(w * h);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = i < segments ? static_cast<std::uint32_t>(i) : static_cast<std::uint32_t>(rng.below(segments));
  }
  return SegmentationMap(w, h, std::move(labels));
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("segment values select by label") {
  const AnomalyMap map(2, 2, {1, 2, 3, 4});
  const SegmentationMap seg(2, 2, {0, 0, 1, 1});
  CHECK(segment_values(map, seg, 0) == std::vector<double>{1, 2});
  CHECK(segment_values(map, seg, 1) == std::vector<double>{3, 4});
  CHECK_THROWS_AS(segment_values(map, seg, 5), IndexOutOfRangeError);
  CHECK_THROWS_AS(segment_values(AnomalyMap(1, 4, {1, 2, 3, 4}), seg, 0), DimensionError);
}

TEST_CASE("segment value counts cover a 512x512 map") {
  Rng rng(1);
  const auto map = random_map(rng, 512, 512);
  const auto seg = random_seg(rng, 512, 512, 7);
  std::size_t total = 0;
  for (std::size_t l = 0; l < 7; ++l) total += segment_values(map, seg, l).size();
  CHECK(total == 262144);
}

TEST_CASE("quantile examples") {
  CHECK(quantile(std::vector<double>{5}, 0.995) == 5.0);
  CHECK(quantile(std::vector<double>{3, 1, 2}, 0.5) == 2.0);
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 0.0);
  const double expected = oracle::quantile_sorted(v, 0.995);
  CHECK(expected == doctest::Approx(994.005).epsilon(1e-12));
  CHECK(quantile(v, 0.995) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(quantile(v, 0.0) == 0.0);
  CHECK(quantile(v, 1.0) == 999.0);
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), EmptyInputError);
  CHECK_THROWS_AS(quantile(std::vector<double>{1}, 1.5), ValidationError);
}

TEST_CASE("moment examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(mean(a) == 2.0);
  CHECK(skewness(a) == 0.0);
  const std::vector<double> c{7, 7, 7};
  CHECK(skewness(c) == 0.0);
  CHECK(kurtosis(c) == 0.0);
  const std::vector<double> d{0, 0, 0, 1};
  const auto ref = oracle::moments(d);
  CHECK(ref.skew == doctest::Approx(1.1547).epsilon(1e-4));
  CHECK(skewness(d) == doctest::Approx(ref.skew).epsilon(1e-12));
  CHECK(kurtosis(d) == doctest::Approx(ref.kurt).epsilon(1e-12));
  CHECK_THROWS_AS(mean(std::vector<double>{}), EmptyInputError);
  CHECK_THROWS_AS(skewness(std::vector<double>{}), EmptyInputError);
  CHECK_THROWS_AS(kurtosis(std::vector<double>{}), EmptyInputError);
}

TEST_CASE("statistics agree with brute-force references") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_list(rng, 1 + rng.below(2000));
    const auto ref = oracle::moments(v);
    CHECK(close(quantile(v, kTailQuantile), oracle::quantile_sorted(v, kTailQuantile), 1e-9));
    CHECK(close(mean(v), ref.mean, 1e-9));
    CHECK(close(skewness(v), ref.skew, 1e-9));
    CHECK(close(kurtosis(v), ref.kurt, 1e-9));
    const auto s = segment_stats(v);
    CHECK(s.quantile_995 == quantile(v, kTailQuantile));
    CHECK(s.mean == mean(v));
    CHECK(s.skew == skewness(v));
    CHECK(s.kurtosis == kurtosis(v));
  }
}

TEST_CASE("statistics are permutation invariant") {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    auto v = random_list(rng, 2 + rng.below(500));
    const auto before = segment_stats(v);
    shuffle(std::span<double>(v), rng);
    const auto after = segment_stats(v);
    CHECK(after.quantile_995 == before.quantile_995);
    CHECK(close(after.mean, before.mean, 1e-12));
    CHECK(close(after.skew, before.skew, 1e-9));
    CHECK(close(after.kurtosis, before.kurtosis, 1e-9));
  }
}

TEST_CASE("statistics follow affine maps") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_list(rng, 2 + rng.below(500));
    const double a = 0.1 + 5.0 * rng.uniform();
    const double b = 10.0 * rng.uniform() - 5.0;
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const auto s = segment_stats(v);
    const auto u = segment_stats(w);
    CHECK(close(u.mean, a * s.mean + b, 1e-9));
    CHECK(close(u.quantile_995, a * s.quantile_995 + b, 1e-9));
    if (std::ranges::min(v) != std::ranges::max(v)) {
      CHECK(close(u.skew, s.skew, 1e-7));
      CHECK(close(u.kurtosis, s.kurtosis, 1e-7));
    }
  }
}

TEST_CASE("feature layout is a bijection") {
  for (bool score : {false, true}) {
    for (auto mode : {FeatureMode::full, FeatureMode::max_only}) {
      const FeatureLayout layout{3, 5, score, mode};
      std::vector<int> hits(layout.size(), 0);
      const std::vector<Statistic> stats = mode == FeatureMode::full
          ? std::vector<Statistic>{Statistic::quantile, Statistic::skewness, Statistic::kurtosis, Statistic::mean}
          : std::vector<Statistic>{Statistic::maximum};
      if (score) hits[layout.score_index()]++;
      for (auto s : stats) {
        for (std::size_t k = 0; k < 3; ++k) {
          for (std::size_t l = 0; l < 5; ++l) {
            const auto idx = layout.index(s, k, l);
            REQUIRE(idx < layout.size());
            hits[idx]++;
            const auto slot = layout.decode(idx);
            CHECK_FALSE(slot.is_score);
            CHECK(slot.stat == s);
            CHECK(slot.detector == k);
            CHECK(slot.segment == l);
          }
        }
      }
      for (int h : hits) CHECK(h == 1);
      CHECK_THROWS_AS(layout.decode(layout.size()), IndexOutOfRangeError);
    }
  }
  const FeatureLayout layout{2, 3, true, FeatureMode::full};
  CHECK(layout.name(0) == "g");
  CHECK(layout.index(Statistic::quantile, 0, 0) == 1);
  CHECK(layout.index(Statistic::quantile, 1, 0) == 4);
  CHECK(layout.index(Statistic::skewness, 0, 0) == 7);
  CHECK_THROWS_AS(layout.index(Statistic::quantile, 2, 0), IndexOutOfRangeError);
}

TEST_CASE("feature vector of four detectors and seven segments") {
  Rng rng(3);
  const auto seg = random_seg(rng, 32, 32, 7);
  std::vector<AnomalyMap> maps;
  for (int k = 0; k < 4; ++k) maps.push_back(random_map(rng, 32, 32));
  const auto f = extract_features(maps, seg, 0.25);
  CHECK(f.values.size() == 113);
  CHECK(f.values[0] == 0.25);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t l = 0; l < 7; ++l) {
      const auto v = segment_values(maps[k], seg, l);
      CHECK(f.values[f.layout.index(Statistic::quantile, k, l)] == oracle::quantile_sorted(v, 0.995));
      const auto ref = oracle::moments(v);
      CHECK(close(f.values[f.layout.index(Statistic::mean, k, l)], ref.mean, 1e-9));
      CHECK(close(f.values[f.layout.index(Statistic::skewness, k, l)], ref.skew, 1e-9));
      CHECK(close(f.values[f.layout.index(Statistic::kurtosis, k, l)], ref.kurt, 1e-9));
    }
  }
}

TEST_CASE("constant single-segment map") {
  const AnomalyMap map(4, 4, std::vector<float>(16, 3.0f));
  const auto f = extract_features(std::span(&map, 1), SegmentationMap::single(4, 4), std::nullopt);
  CHECK(f.values == std::vector<double>{3.0, 0.0, 0.0, 3.0});
}

TEST_CASE("duplicated detector gives duplicated blocks") {
  Rng rng(4);
  const auto seg = random_seg(rng, 16, 16, 3);
  const auto m = random_map(rng, 16, 16);
  const std::vector<AnomalyMap> maps{m, m};
  const auto f = extract_features(maps, seg, std::nullopt);
  for (auto s : {Statistic::quantile, Statistic::skewness, Statistic::kurtosis, Statistic::mean}) {
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(f.values[f.layout.index(s, 0, l)] == f.values[f.layout.index(s, 1, l)]);
    }
  }
}

TEST_CASE("max-only features") {
  Rng rng(5);
  const auto seg = random_seg(rng, 16, 16, 4);
  const auto m = random_map(rng, 16, 16);
  const auto f = extract_features(std::span(&m, 1), seg, std::nullopt, FeatureMode::max_only);
  REQUIRE(f.values.size() == 4);
  for (std::size_t l = 0; l < 4; ++l) {
    const auto v = segment_values(m, seg, l);
    CHECK(f.values[l] == std::ranges::max(v));
  }
}

TEST_CASE("extraction rejects mismatched maps") {
  const AnomalyMap m(3, 3, std::vector<float>(9, 0.0f));
  CHECK_THROWS_AS(extract_features(std::span(&m, 1), SegmentationMap::single(4, 4), std::nullopt), DimensionError);
}

TEST_CASE("extraction is repeatable bit for bit") {
  Rng rng(6);
  const auto seg = random_seg(rng, 24, 24, 5);
  std::vector<AnomalyMap> maps{random_map(rng, 24, 24), random_map(rng, 24, 24)};
  const auto a = extract_features(maps, seg, 1.0);
  const auto b = extract_features(maps, seg, 1.0);
  CHECK(a.values == b.values);
}

TEST_CASE("corpus extraction shape, order, filtering and errors") {
  testutil::TempDir dir;
  Rng rng(11);
  const auto seg = random_seg(rng, 8, 8, 7);
  DatasetManifest m;
  m.num_detectors = 1;
  m.base_dir = dir.path();
  for (int i = 0; i < 10; ++i) {
    SampleRecord r;
    r.id = "img_" + std::to_string(i);
    r.label = i % 3 == 0 ? Label::bad : Label::good;
    r.anomaly_map_paths = {r.id + ".amap"};
    r.split = i < 6 ? SplitTag::segad_train : SplitTag::test;
    io::write_amap(random_map(rng, 8, 8), dir / (r.id + ".amap"));
    m.samples.push_back(r);
  }
  const auto train = extract_corpus(m, seg, SplitTag::segad_train);
  CHECK(train.rows() == 6);
  CHECK(train.cols() == 28);
  for (std::size_t i = 0; i < 6; ++i) CHECK(train.ids[i] == m.samples[i].id);

  ExtractOptions par;
  par.threads = 4;
  const auto again = extract_corpus(m, seg, SplitTag::segad_train, par);
  CHECK(again.values == train.values);

  const auto none = extract_corpus(m, seg, SplitTag::base_model);
  CHECK(none.rows() == 0);

  std::filesystem::remove(dir / "img_3.amap");
  try {
    extract_corpus(m, seg, std::nullopt);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("img_3") != std::string::npos);
  }
}

TEST_CASE("feature CSV round-trips exactly") {
  Rng rng(12);
  FeatureMatrix m;
  m.layout = FeatureLayout{2, 3, true, FeatureMode::full};
  for (int r = 0; r < 5; ++r) {
    std::vector<double> row(m.layout.size());
    for (auto& x : row) x = rng.normal() * 1e3;
    m.append("r" + std::to_string(r), r % 2 ? Label::bad : Label::good, row);
  }
  std::stringstream s;
  write_features_csv(s, m);
  const auto back = read_features_csv(s);
  CHECK(back.layout == m.layout);
  CHECK(back.ids == m.ids);
  CHECK(back.labels == m.labels);
  CHECK(back.values == m.values);

  std::istringstream bad("id,label,foo\nx,good,1\n");
  CHECK_THROWS_AS(read_features_csv(bad), ParseError);
}
