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
#include <functional>

#include "oracles.hpp"
#include "segad/brf.hpp"
#include "segad/errors.hpp"
#include "segad/random.hpp"
#include "test_util.hpp"

using namespace segad;
using namespace segad::brf;

namespace {

struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<Label> y;
  MatrixView view() const { return MatrixView(x, rows, cols); }
};

Dataset random_dataset(Rng& rng, std::size_t rows, std::size_t cols, bool integer_values) {
  Dataset d{rows, cols, std::vector<double>(rows * cols), std::vector<Label>(rows)};
  for (std::size_t r = 0; r < rows; ++r) {
    d.y[r] = rng.bernoulli(0.5) ? Label::bad : Label::good;
    for (std::size_t c = 0; c < cols; ++c) {
      double v = integer_values ? static_cast<double>(rng.below(6)) : rng.normal();
      if (d.y[r] == Label::bad && c == 0) v += 1.0;
      d.x[r * cols + c] = v;
    }
  }
  return d;
}

BrfConfig stump_config() {
  BrfConfig cfg = preset(Preset::brf);
  cfg.num_rounds = 1;
  cfg.trees_per_round = 1;
  cfg.learning_rate = 1.0;
  cfg.max_depth = 1;
  cfg.subsample_rows = 1.0;
  cfg.colsample_per_tree = 1.0;
  cfg.colsample_per_node = 1.0;
  cfg.l1_alpha = 0.0;
  return cfg;
}

BrfConfig small_config(std::uint64_t seed) {
  BrfConfig cfg = preset(Preset::brf);
  cfg.num_rounds = 3;
  cfg.trees_per_round = 8;
  cfg.max_depth = 3;
  cfg.seed = seed;
  return cfg;
}

// Negative log-likelihood of the logistic model at a raw margin.
double logistic_loss(double m, Label y) {
  return y == Label::bad ? std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

void collect_structure(const Tree& t, std::vector<std::pair<int, int>>& out) {
  for (const auto& n : t.nodes) out.emplace_back(n.feature, n.left);
}

}  // namespace

TEST_CASE("preset values") {
  const auto b = preset(Preset::brf);
  CHECK(b.num_rounds == 10);
  CHECK(b.trees_per_round == 200);
  CHECK(b.learning_rate == 0.3);
  CHECK(b.max_depth == 5);
  CHECK(b.subsample_rows == 0.6);
  CHECK(b.colsample_per_tree == 0.6);
  CHECK(b.colsample_per_node == 0.6);
  CHECK(b.l1_alpha == 1.0);
  CHECK(b.l2_lambda == 1.0);
  const auto r = preset(Preset::rf);
  CHECK(r.num_rounds == 1);
  CHECK(r.trees_per_round == 2000);
  CHECK(r.learning_rate == 1.0);
  CHECK(r.max_depth == 5);
  const auto t = preset(Preset::bt);
  CHECK(t.num_rounds == 2000);
  CHECK(t.trees_per_round == 1);
  CHECK(t.colsample_per_tree == 1.0);
  CHECK(t.learning_rate == 0.3);
  CHECK(parse_preset("rf") == Preset::rf);
  CHECK_THROWS_AS(parse_preset("gbm"), ValidationError);
}

TEST_CASE("config validation") {
  auto cfg = preset(Preset::brf);
  CHECK_NOTHROW(cfg.validate());
  cfg.subsample_rows = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = preset(Preset::brf);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = preset(Preset::brf);
  cfg.trees_per_round = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = preset(Preset::brf);
  cfg.l1_alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("logistic gradient examples") {
  auto a = logistic_grad_hess(0.0, Label::bad);
  CHECK(a.grad == -0.5);
  CHECK(a.hess == 0.25);
  a = logistic_grad_hess(0.0, Label::good);
  CHECK(a.grad == 0.5);
  CHECK(a.hess == 0.25);
  const double p = 1.0 / (1.0 + std::exp(-2.0));
  a = logistic_grad_hess(2.0, Label::bad);
  CHECK(a.grad == doctest::Approx(p - 1.0).epsilon(1e-14));
  CHECK(a.hess == doctest::Approx(p * (1.0 - p)).epsilon(1e-14));
  CHECK(a.grad == doctest::Approx(-0.1192).epsilon(1e-3));
  CHECK(a.hess == doctest::Approx(0.1050).epsilon(1e-3));
}

TEST_CASE("logistic gradient matches finite differences") {
  for (double m : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
    for (Label y : {Label::good, Label::bad}) {
      const auto gh = logistic_grad_hess(m, y);
      const double e1 = 1e-5;
      const double g = (logistic_loss(m + e1, y) - logistic_loss(m - e1, y)) / (2 * e1);
      const double e2 = 1e-4;
      const double h = (logistic_loss(m + e2, y) - 2 * logistic_loss(m, y) + logistic_loss(m - e2, y)) / (e2 * e2);
      CHECK(std::abs(gh.grad - g) <= 1e-6);
      CHECK(std::abs(gh.hess - h) <= 1e-4);
    }
  }
}

TEST_CASE("leaf weight and split gain closed forms") {
  BrfConfig cfg;
  cfg.l1_alpha = 1.0;
  cfg.l2_lambda = 1.0;
  CHECK(leaf_weight(2.0, 3.0, cfg) == doctest::Approx(-0.25));
  CHECK(leaf_weight(0.5, 10.0, cfg) == 0.0);
  cfg.l1_alpha = 0.0;
  CHECK(leaf_weight(-2.0, 3.0, cfg) == doctest::Approx(0.5));
  CHECK(split_gain(-0.5, 0.25, 0.5, 0.25, cfg) == doctest::Approx(0.2));
  BrfConfig no_l2 = cfg;
  no_l2.l2_lambda = 0.0;
  CHECK(split_gain(0.7, 2.0, 0.7, 2.0, no_l2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(split_gain(0.7, 2.0, 0.7, 2.0, cfg) < 0.0);
  CHECK(split_gain(-1.0, 0.5, 1.0, 0.5, cfg) > 0.0);
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.4, 1.0) == 0.0);
}

TEST_CASE("larger L1 never grows a leaf weight") {
  Rng rng(13);
  for (int t = 0; t < 500; ++t) {
    const double g = 10.0 * rng.normal();
    const double h = 5.0 * rng.uniform();
    BrfConfig lo;
    BrfConfig hi;
    lo.l1_alpha = 3.0 * rng.uniform();
    hi.l1_alpha = lo.l1_alpha + 3.0 * rng.uniform();
    CHECK(std::abs(leaf_weight(g, h, hi)) <= std::abs(leaf_weight(g, h, lo)));
  }
}

TEST_CASE("round combination averages trees") {
  const std::vector<double> outs{1.0, 2.0, 3.0, 6.0};
  CHECK(combine_round(outs, 0.5) == doctest::Approx(1.5));
}

TEST_CASE("stump on four ordered values splits between 1 and 2") {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<Label> y{Label::good, Label::good, Label::bad, Label::bad};
  std::vector<double> g, h;
  for (auto l : y) {
    const auto gh = logistic_grad_hess(0.0, l);
    g.push_back(gh.grad);
    h.push_back(gh.hess);
  }
  auto cfg = stump_config();
  cfg.min_child_weight = 0.0;
  Rng rng(0);
  const auto tree = build_tree(MatrixView(x, 4, 1), g, h, cfg, rng);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold > 1.0);
  CHECK(tree.nodes[0].threshold <= 2.0);
  const auto ref = oracle::exhaustive_split(x, 4, 1, g, h, 0.0, 1.0, 0.0);
  CHECK(tree.nodes[0].threshold == ref.threshold);
}

TEST_CASE("identical gradient rows give a single leaf") {
  const std::vector<double> x{0, 1, 2, 3, 4, 5};
  const std::vector<double> g(6, -0.5), h(6, 0.25);
  Rng rng(0);
  auto cfg = preset(Preset::brf);
  cfg.subsample_rows = 1.0;
  const auto tree = build_tree(MatrixView(x, 6, 1), g, h, cfg, rng);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.depth() == 0);
  CHECK(tree.nodes[0].weight == doctest::Approx(-oracle::soft(-3.0, 1.0) / (1.5 + 1.0)));
}

TEST_CASE("depth cap is respected") {
  Rng data_rng(21);
  const auto d = random_dataset(data_rng, 200, 4, false);
  std::vector<double> g, h;
  for (auto l : d.y) {
    const auto gh = logistic_grad_hess(0.0, l);
    g.push_back(gh.grad);
    h.push_back(gh.hess);
  }
  for (std::size_t depth : {1u, 2u, 4u}) {
    auto cfg = preset(Preset::brf);
    cfg.max_depth = depth;
    cfg.min_child_weight = 0.0;
    cfg.l1_alpha = 0.0;
    Rng rng(depth);
    const auto tree = build_tree(d.view(), g, h, cfg, rng);
    CHECK(tree.depth() <= depth);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      if (n.is_leaf()) continue;
      CHECK(n.left > static_cast<int>(i));
      CHECK(n.right > static_cast<int>(i));
    }
  }
}

TEST_CASE("stump matches the exhaustive scan") {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const auto d = random_dataset(rng, 2 + rng.below(49), 1 + rng.below(5), t % 2 == 0);
    const auto model = train(d.view(), d.y, stump_config());
    std::vector<double> g, h;
    for (auto l : d.y) {
      const auto gh = logistic_grad_hess(0.0, l);
      g.push_back(gh.grad);
      h.push_back(gh.hess);
    }
    const auto ref = oracle::exhaustive_split(d.x, d.rows, d.cols, g, h, 0.0, 1.0, 1.0);
    const auto& tree = model.rounds[0][0];
    if (!ref.found) {
      CHECK(tree.nodes.size() == 1);
      continue;
    }
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == static_cast<int>(ref.feature));
    CHECK(tree.nodes[0].threshold == ref.threshold);
    CHECK(std::abs(tree.nodes[tree.nodes[0].left].weight - (-ref.g_left / (ref.h_left + 1.0))) <= 1e-9);
    CHECK(std::abs(tree.nodes[tree.nodes[0].right].weight - (-ref.g_right / (ref.h_right + 1.0))) <= 1e-9);
  }
}

TEST_CASE("best split gain matches the scan on arbitrary gradients") {
  Rng rng(32);
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 2 + rng.below(60);
    const std::size_t cols = 1 + rng.below(5);
    std::vector<double> x(rows * cols), g(rows), h(rows);
    for (auto& v : x) v = rng.normal();
    for (std::size_t r = 0; r < rows; ++r) {
      g[r] = rng.normal();
      h[r] = 0.05 + rng.uniform();
    }
    auto cfg = stump_config();
    cfg.l1_alpha = 0.3 * rng.uniform();
    cfg.min_child_weight = 0.5 * rng.uniform();
    Rng tree_rng(1);
    const auto tree = build_tree(MatrixView(x, rows, cols), g, h, cfg, tree_rng);
    const auto ref = oracle::exhaustive_split(x, rows, cols, g, h, cfg.l1_alpha, cfg.l2_lambda, cfg.min_child_weight);
    if (!ref.found) {
      CHECK(tree.nodes.size() == 1);
    } else {
      REQUIRE(tree.nodes.size() == 3);
      CHECK(tree.nodes[0].gain == doctest::Approx(ref.gain).epsilon(1e-12));
    }
  }
}

TEST_CASE("composition: one stump scaled by the learning rate") {
  Rng rng(41);
  const auto d = random_dataset(rng, 40, 3, false);
  auto cfg = stump_config();
  cfg.learning_rate = 0.3;
  const auto model = train(d.view(), d.y, cfg);
  const auto& tree = model.rounds[0][0];
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto row = d.view().row(r);
    CHECK(model.predict_margin(row) == doctest::Approx(0.3 * tree.predict(row)).epsilon(1e-15));
  }
}

TEST_CASE("empty model predicts the base margin") {
  BrfModel model;
  model.config.base_margin = 0.75;
  model.feature_count = 2;
  const std::vector<double> row{1.0, 2.0};
  CHECK(model.predict_margin(row) == 0.75);
  CHECK_THROWS_AS(model.predict_margin(std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("separable pair is ranked correctly") {
  const std::vector<double> x{0.0, 1.0};
  const std::vector<Label> y{Label::good, Label::bad};
  auto cfg = preset(Preset::brf);
  cfg.min_child_weight = 0.0;
  cfg.subsample_rows = 1.0;
  cfg.colsample_per_tree = 1.0;
  cfg.colsample_per_node = 1.0;
  cfg.l1_alpha = 0.0;
  const auto model = train(MatrixView(x, 2, 1), y, cfg);
  CHECK(model.predict_margin(std::vector<double>{1.0}) > model.predict_margin(std::vector<double>{0.0}));
}

TEST_CASE("training errors and warnings") {
  CHECK_THROWS_AS(train(MatrixView({}, 0, 3), {}, preset(Preset::brf)), EmptyInputError);
  const std::vector<double> x{0, 1, 2};
  const std::vector<Label> y{Label::good, Label::good, Label::good};
  std::string warning;
  TrainOptions opts;
  opts.on_warning = [&](const std::string& w) { warning = w; };
  auto cfg = small_config(1);
  const auto model = train(MatrixView(x, 3, 1), y, cfg, opts);
  CHECK_FALSE(warning.empty());
  CHECK(model.rounds.size() == cfg.num_rounds);
  const std::vector<double> bad{0, std::nan(""), 2};
  CHECK_THROWS_AS(train(MatrixView(bad, 3, 1), y, cfg), ValidationError);
}

TEST_CASE("training is deterministic and thread independent") {
  Rng rng(51);
  const auto d = random_dataset(rng, 120, 6, false);
  const auto cfg = small_config(9);
  const auto a = train(d.view(), d.y, cfg);
  const auto b = train(d.view(), d.y, cfg);
  TrainOptions par;
  par.threads = 4;
  const auto c = train(d.view(), d.y, cfg, par);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) == serialize(c));
  auto other = cfg;
  other.seed = 10;
  CHECK(serialize(train(d.view(), d.y, other)) != serialize(a));
}

TEST_CASE("model structure invariants") {
  Rng rng(52);
  const auto d = random_dataset(rng, 150, 5, false);
  const auto cfg = small_config(2);
  const auto model = train(d.view(), d.y, cfg);
  CHECK(model.rounds.size() == cfg.num_rounds);
  CHECK(model.feature_count == 5);
  for (const auto& forest : model.rounds) {
    CHECK(forest.size() == cfg.trees_per_round);
    for (const auto& tree : forest) {
      CHECK(tree.depth() <= cfg.max_depth);
      for (const auto& n : tree.nodes) {
        if (n.is_leaf()) continue;
        CHECK(n.feature < 5);
        CHECK(n.left >= 0);
        CHECK(n.right >= 0);
      }
    }
  }
  const auto imp = model.feature_importance();
  CHECK(imp.size() == 5);
  CHECK(imp[0] > 0.0);
}

TEST_CASE("serialization round-trips and rejects bad documents") {
  Rng rng(61);
  const auto d = random_dataset(rng, 80, 4, false);
  const auto model = train(d.view(), d.y, small_config(3));
  const auto doc = serialize(model);
  const auto back = deserialize(doc);
  CHECK(back == model);
  CHECK(serialize(back) == doc);

  CHECK_THROWS_AS(deserialize(doc.substr(0, doc.size() / 2)), ParseError);
  auto j = nlohmann::json::parse(doc);
  j["version"] = "99";
  CHECK_THROWS_AS(deserialize(j.dump()), VersionError);
  j["version"] = 99;
  CHECK_THROWS_AS(deserialize(j.dump()), VersionError);
  j = nlohmann::json::parse(doc);
  j["format"] = "other";
  CHECK_THROWS_AS(deserialize(j.dump()), ParseError);
  j = nlohmann::json::parse(doc);
  j["rounds"][0][0]["left"][0] = 100000;
  CHECK_THROWS_AS(deserialize(j.dump()), ParseError);

  testutil::TempDir dir;
  save_model(model, dir / "m.json");
  CHECK(load_model(dir / "m.json") == model);
  CHECK_THROWS_AS(load_model(dir / "missing.json"), IoError);
}

TEST_CASE("predictions match an independent walk of the document") {
  Rng rng(71);
  const auto d = random_dataset(rng, 50, 5, false);
  const auto model = train(d.view(), d.y, small_config(4));
  const auto doc = nlohmann::json::parse(serialize(model));
  const auto batch = model.predict_margin(d.view());
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto row = d.view().row(r);
    CHECK(model.predict_margin(row) == oracle::walk_model(doc, row));
    CHECK(batch[r] == model.predict_margin(row));
  }
}

TEST_CASE("strictly increasing column transform keeps tree structure") {
  Rng rng(81);
  auto d = random_dataset(rng, 100, 3, false);
  const auto cfg = small_config(5);
  const auto before = train(d.view(), d.y, cfg);
  for (std::size_t r = 0; r < d.rows; ++r) d.x[r * 3 + 1] = std::exp(d.x[r * 3 + 1]);
  const auto after = train(d.view(), d.y, cfg);
  for (std::size_t i = 0; i < before.rounds.size(); ++i) {
    for (std::size_t t = 0; t < before.rounds[i].size(); ++t) {
      std::vector<std::pair<int, int>> a, b;
      collect_structure(before.rounds[i][t], a);
      collect_structure(after.rounds[i][t], b);
      CHECK(a == b);
    }
  }
}
