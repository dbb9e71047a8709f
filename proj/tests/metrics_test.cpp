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

#include "oracles.hpp"
#include "segad/errors.hpp"
#include "segad/metrics.hpp"
#include "segad/random.hpp"

using namespace segad;
using namespace segad::metrics;

namespace {

const Label G = Label::good;
const Label B = Label::bad;

struct Data {
  std::vector<double> s;
  std::vector<Label> y;
};

Data random_scores(Rng& rng, std::size_t n) {
  Data d;
  d.y.push_back(G);
  d.y.push_back(B);
  while (d.y.size() < n) d.y.push_back(rng.bernoulli(0.4) ? B : G);
  const bool coarse = rng.bernoulli(0.5);
  for (auto l : d.y) {
    double v = rng.normal() + (l == B ? 0.8 : 0.0);
    if (coarse) v = std::round(v * 4.0) / 4.0;
    d.s.push_back(v);
  }
  return d;
}

}  // namespace

TEST_CASE("auroc examples") {
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<Label>{G, G, B, B}) == 1.0);
  CHECK(auroc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<Label>{G, B, G, B}) == 0.5);
  const std::vector<double> s{0.3, 0.7, 0.5, 0.6};
  const std::vector<Label> y{G, G, B, B};
  CHECK(auroc(s, y) == oracle::pairwise_auroc(s, y));
  CHECK(auroc(s, y) == 0.5);
}

TEST_CASE("auroc rejects single-class and mismatched input") {
  CHECK_THROWS_AS(auroc(std::vector<double>{1, 2}, std::vector<Label>{G, G}), SingleClassError);
  CHECK_THROWS_AS(auroc(std::vector<double>{1, 2}, std::vector<Label>{G}), ValidationError);
  CHECK_THROWS_AS(fpr_at_tpr(std::vector<double>{1, 2}, std::vector<Label>{B, B}), SingleClassError);
}

TEST_CASE("auroc matches the pairwise count") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto d = random_scores(rng, 2 + rng.below(400));
    CHECK(auroc(d.s, d.y) == oracle::pairwise_auroc(d.s, d.y));
  }
}

TEST_CASE("auroc is rank based and antisymmetric") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto d = random_scores(rng, 2 + rng.below(300));
    std::vector<double> tr(d.s.size()), neg(d.s.size());
    for (std::size_t i = 0; i < d.s.size(); ++i) {
      tr[i] = std::exp(0.5 * d.s[i]) + 3.0;
      neg[i] = -d.s[i];
    }
    const double a = auroc(d.s, d.y);
    CHECK(auroc(tr, d.y) == a);
    CHECK(a + auroc(neg, d.y) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fpr examples") {
  auto r = fpr_at_tpr(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<Label>{G, G, B, B});
  CHECK(r.fpr == 0.0);
  CHECK(r.threshold == 0.8);

  // 20 bad, one of them holding the lowest score overall.
  std::vector<double> s;
  std::vector<Label> y;
  s.push_back(-10.0);
  y.push_back(B);
  for (int i = 0; i < 19; ++i) {
    s.push_back(1.0 + i);
    y.push_back(B);
  }
  for (int i = 0; i < 30; ++i) {
    s.push_back(0.03 * i);
    y.push_back(G);
  }
  r = fpr_at_tpr(s, y);
  const auto ref = oracle::threshold_sweep(s, y, 0.95);
  CHECK(r.threshold == 1.0);
  CHECK(r.threshold == ref.threshold);
  CHECK(r.fpr == ref.fpr);
  CHECK(r.fpr == 0.0);
}

TEST_CASE("fpr on identical class distributions") {
  std::vector<double> s;
  std::vector<Label> y;
  for (int i = 0; i < 20; ++i) {
    s.push_back(i);
    y.push_back(G);
    s.push_back(i);
    y.push_back(B);
  }
  const auto r = fpr_at_tpr(s, y);
  const auto ref = oracle::threshold_sweep(s, y, 0.95);
  CHECK(r.fpr == ref.fpr);
  CHECK(r.threshold == ref.threshold);
  CHECK(r.fpr == 0.95);
}

TEST_CASE("fpr matches the exhaustive sweep and is monotone in the target") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto d = random_scores(rng, 2 + rng.below(300));
    double last = -1.0;
    for (double target : {0.5, 0.8, 0.9, 0.95, 0.99, 1.0}) {
      const auto r = fpr_at_tpr(d.s, d.y, target);
      const auto ref = oracle::threshold_sweep(d.s, d.y, target);
      CHECK(r.fpr == ref.fpr);
      CHECK(r.threshold == ref.threshold);
      CHECK(r.fpr >= last);
      last = r.fpr;
    }
  }
}

TEST_CASE("evaluate reports counts") {
  const auto e = evaluate(std::vector<double>{0.1, 0.2, 0.8, 0.9, 0.3}, std::vector<Label>{G, G, B, B, G});
  CHECK(e.auroc == 1.0);
  CHECK(e.fpr_at_95tpr == 0.0);
  CHECK(e.threshold_used == 0.8);
  CHECK(e.n_good == 3);
  CHECK(e.n_bad == 2);
}

TEST_CASE("aggregate examples") {
  auto a = aggregate(std::vector<double>{1, 1, 1});
  CHECK(a.mean == 1.0);
  CHECK(a.std == 0.0);
  a = aggregate(std::vector<double>{0, 1});
  CHECK(a.mean == 0.5);
  CHECK(a.std == 0.5);
  const std::vector<double> v{88.3, 89.1, 88.7, 88.9, 88.5};
  double m = 0.0;
  for (double x : v) m += x;
  m /= 5.0;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  a = aggregate(v);
  CHECK(a.mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(a.std == doctest::Approx(std::sqrt(ss / 5.0)).epsilon(1e-12));
  CHECK(a.mean == doctest::Approx(88.7).epsilon(1e-12));
  CHECK(a.std == doctest::Approx(std::sqrt(0.08)).epsilon(1e-9));
  CHECK(a.per_seed == v);
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), EmptyInputError);
}
