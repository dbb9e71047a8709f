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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segad/core.hpp"
#include "segad/random.hpp"

// Boosted random forest: second-order gradient boosting on the logistic loss
// where every boosting round fits a whole forest of CART trees on the same
// gradient statistics, each tree on its own row and column subsample. The
// model emits raw margins (no sigmoid); larger means more anomalous.
namespace segad::brf {

struct BrfConfig {
  std::size_t num_rounds = 10;
  std::size_t trees_per_round = 200;
  double learning_rate = 0.3;
  std::size_t max_depth = 5;
  double subsample_rows = 0.6;
  double colsample_per_tree = 0.6;
  double colsample_per_node = 0.6;
  double l1_alpha = 1.0;
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;
  double base_margin = 0.0;
  std::uint64_t seed = 0;

  // Throws ValidationError when a field is outside its domain.
  void validate() const;
  bool operator==(const BrfConfig&) const = default;
};

enum class Preset : std::uint8_t { brf, rf, bt };

BrfConfig preset(Preset name);
Preset parse_preset(std::string_view name);
std::string_view to_string(Preset name);

struct GradHess {
  double grad = 0.0;
  double hess = 0.0;
};

// Logistic loss on a raw margin: g = p - y, h = p (1 - p), p = sigmoid(margin).
GradHess logistic_grad_hess(double margin, Label label);

double soft_threshold(double g, double alpha);
// -soft(G, alpha) / (H + lambda)
double leaf_weight(double sum_grad, double sum_hess, const BrfConfig& cfg);
// 0.5 * [score(L) + score(R) - score(L u R)], score(G, H) = soft(G, alpha)^2 / (H + lambda).
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  const BrfConfig& cfg);

// Contribution of one round to the margin: learning_rate * mean(tree outputs).
// Training and scoring both go through here, so swapping the aggregation rule
// (e.g. to a plain sum) is a one-line change.
double combine_round(std::span<const double> tree_outputs, double learning_rate);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // value < threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  bool default_left = true;   // reserved for missing values
  double weight = 0.0;        // leaf output (also kept on internal nodes)
  double gain = 0.0;          // split gain, 0 for leaves

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Flat pre-order node array, root at index 0.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  // Index of the leaf reached by `row`.
  std::size_t leaf_index(std::span<const double> row) const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

// Non-owning row-major matrix.
struct MatrixView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatrixView() = default;
  MatrixView(std::span<const double> v, std::size_t r, std::size_t c);
  std::span<const double> row(std::size_t i) const { return values.subspan(i * cols, cols); }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Row indices sorted by each column (ties by row index). Computed once per
// training run and shared by every tree.
class PresortedColumns {
 public:
  explicit PresortedColumns(const MatrixView& x);
  std::span<const std::uint32_t> order(std::size_t col) const { return orders_[col]; }

 private:
  std::vector<std::vector<std::uint32_t>> orders_;
};

// Greedy exact-split CART on second-order statistics. Draws the row subsample,
// the per-tree column set and every per-node column subset from `rng`.
Tree build_tree(const MatrixView& x, std::span<const double> grad, std::span<const double> hess,
                const BrfConfig& cfg, Rng& rng, const PresortedColumns* presorted = nullptr);

struct BrfModel {
  BrfConfig config;
  std::size_t feature_count = 0;
  std::vector<std::vector<Tree>> rounds;

  // Raw margin: base_margin + sum over rounds of combine_round(tree outputs).
  double predict_margin(std::span<const double> row) const;
  std::vector<double> predict_margin(const MatrixView& x) const;
  // Total split gain per feature.
  std::vector<double> feature_importance() const;
  bool operator==(const BrfModel&) const = default;
};

struct TrainOptions {
  // Workers for the trees of one round. The model does not depend on it.
  std::size_t threads = 1;
  // Receives non-fatal diagnostics (single-class data). Defaults to stderr.
  std::function<void(const std::string&)> on_warning;
};

BrfModel train(const MatrixView& x, std::span<const Label> labels, const BrfConfig& cfg,
               const TrainOptions& options = {});

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON document with a config echo and per-tree node arrays.
std::string serialize(const BrfModel& model);
// Throws ParseError on malformed or truncated input and VersionError on an
// unknown format version.
BrfModel deserialize(std::string_view document);

void save_model(const BrfModel& model, const std::filesystem::path& path);
BrfModel load_model(const std::filesystem::path& path);

}  // namespace segad::brf
