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

#include "segad/brf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "segad/errors.hpp"
#include "segad/parallel.hpp"

namespace segad::brf {

using nlohmann::json;

void BrfConfig::validate() const {
  auto fraction_ok = [](double f) { return f > 0.0 && f <= 1.0; };
  if (num_rounds < 1 || trees_per_round < 1 || max_depth < 1) {
    throw ValidationError("num_rounds, trees_per_round and max_depth must be >= 1");
  }
  if (!fraction_ok(subsample_rows) || !fraction_ok(colsample_per_tree) ||
      !fraction_ok(colsample_per_node)) {
    throw ValidationError("subsampling fractions must lie in (0, 1]");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(l1_alpha >= 0.0) || !(l2_lambda >= 0.0) || !(min_child_weight >= 0.0)) {
    throw ValidationError("l1_alpha, l2_lambda and min_child_weight must be >= 0");
  }
  if (!std::isfinite(base_margin)) throw ValidationError("base_margin must be finite");
}

BrfConfig preset(Preset name) {
  BrfConfig cfg;  // defaults are the BRF preset
  switch (name) {
    case Preset::brf: break;
    case Preset::rf:
      cfg.num_rounds = 1;
      cfg.trees_per_round = 2000;
      cfg.learning_rate = 1.0;
      break;
    case Preset::bt:
      cfg.num_rounds = 2000;
      cfg.trees_per_round = 1;
      cfg.colsample_per_tree = 1.0;
      break;
  }
  return cfg;
}

Preset parse_preset(std::string_view name) {
  if (name == "brf") return Preset::brf;
  if (name == "rf") return Preset::rf;
  if (name == "bt") return Preset::bt;
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

std::string_view to_string(Preset name) {
  switch (name) {
    case Preset::brf: return "brf";
    case Preset::rf: return "rf";
    case Preset::bt: return "bt";
  }
  return "";
}

GradHess logistic_grad_hess(double margin, Label label) {
  const double p = 1.0 / (1.0 + std::exp(-margin));
  const double y = label == Label::bad ? 1.0 : 0.0;
  return {p - y, p * (1.0 - p)};
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double leaf_weight(double sum_grad, double sum_hess, const BrfConfig& cfg) {
  const double denom = sum_hess + cfg.l2_lambda;
  if (!(denom > 0.0)) return 0.0;
  return -soft_threshold(sum_grad, cfg.l1_alpha) / denom;
}

namespace {

double structure_score(double g, double h, const BrfConfig& cfg) {
  const double denom = h + cfg.l2_lambda;
  if (!(denom > 0.0)) return 0.0;
  const double s = soft_threshold(g, cfg.l1_alpha);
  return s * s / denom;
}

}  // namespace

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  const BrfConfig& cfg) {
  return 0.5 * (structure_score(grad_left, hess_left, cfg) +
                structure_score(grad_right, hess_right, cfg) -
                structure_score(grad_left + grad_right, hess_left + hess_right, cfg));
}

double combine_round(std::span<const double> tree_outputs, double learning_rate) {
  double sum = 0.0;
  for (double v : tree_outputs) sum += v;
  return learning_rate * (sum / static_cast<double>(tree_outputs.size()));
}

std::size_t Tree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                                          : n.right);
  }
  return i;
}

double Tree::predict(std::span<const double> row) const { return nodes[leaf_index(row)].weight; }

std::size_t Tree::depth() const {
  std::vector<std::size_t> depth_of(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

MatrixView::MatrixView(std::span<const double> v, std::size_t r, std::size_t c)
    : values(v), rows(r), cols(c) {
  if (v.size() != r * c) {
    throw DimensionError("matrix holds " + std::to_string(v.size()) + " values, expected " +
                         std::to_string(r * c));
  }
}

PresortedColumns::PresortedColumns(const MatrixView& x) : orders_(x.cols) {
  for (std::size_t c = 0; c < x.cols; ++c) {
    auto& order = orders_[c];
    order.resize(x.rows);
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, c) < x(b, c); });
  }
}

namespace {

// Size of a subsample; never below one.
std::size_t sample_count(std::size_t n, double fraction) {
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

// k distinct entries of `pool` in ascending order (partial Fisher-Yates).
std::vector<std::uint32_t> draw_sorted(std::vector<std::uint32_t> pool, std::size_t k, Rng& rng) {
  if (k < pool.size()) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct SplitCandidate {
  double gain = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
  bool found = false;
};

class TreeBuilder {
 public:
  TreeBuilder(const MatrixView& x, std::span<const double> grad, std::span<const double> hess,
              const BrfConfig& cfg, Rng& rng, const PresortedColumns& presorted)
      : x_(x), grad_(grad), hess_(hess), cfg_(cfg), rng_(rng) {
    std::vector<std::uint32_t> all_rows(x.rows);
    std::iota(all_rows.begin(), all_rows.end(), 0U);
    const auto rows = draw_sorted(all_rows, sample_count(x.rows, cfg.subsample_rows), rng_);
    std::vector<char> in_sample(x.rows, 0);
    for (auto r : rows) in_sample[r] = 1;

    std::vector<std::uint32_t> all_cols(x.cols);
    std::iota(all_cols.begin(), all_cols.end(), 0U);
    tree_cols_ = draw_sorted(all_cols, sample_count(x.cols, cfg.colsample_per_tree), rng_);

    // Per tree column: sampled rows sorted by that column. A node owns the
    // same [begin, end) range in every list.
    sorted_.resize(tree_cols_.size());
    for (std::size_t j = 0; j < tree_cols_.size(); ++j) {
      auto& list = sorted_[j];
      list.reserve(rows.size());
      for (auto r : presorted.order(tree_cols_[j])) {
        if (in_sample[r]) list.push_back(r);
      }
    }
    goes_left_.assign(x.rows, 0);
    scratch_.resize(rows.size());
  }

  Tree build() {
    Tree tree;
    grow(tree, 0, sorted_.empty() ? 0 : sorted_[0].size(), 0);
    return tree;
  }

 private:
  std::int32_t grow(Tree& tree, std::size_t begin, std::size_t end, std::size_t depth) {
    const auto self = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    double g_sum = 0.0;
    double h_sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      g_sum += grad_[sorted_[0][i]];
      h_sum += hess_[sorted_[0][i]];
    }
    tree.nodes[self].weight = leaf_weight(g_sum, h_sum, cfg_);
    if (depth >= cfg_.max_depth || end - begin < 2) return self;

    const SplitCandidate best = find_split(begin, end, g_sum, h_sum);
    if (!best.found) return self;

    const std::size_t n_left = partition(begin, end, best);
    TreeNode& node = tree.nodes[self];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.gain = best.gain;
    const std::int32_t left = grow(tree, begin, begin + n_left, depth + 1);
    const std::int32_t right = grow(tree, begin + n_left, end, depth + 1);
    tree.nodes[self].left = left;
    tree.nodes[self].right = right;
    return self;
  }

  SplitCandidate find_split(std::size_t begin, std::size_t end, double g_sum, double h_sum) {
    std::vector<std::uint32_t> slots(tree_cols_.size());
    std::iota(slots.begin(), slots.end(), 0U);
    const auto node_slots =
        draw_sorted(std::move(slots), sample_count(tree_cols_.size(), cfg_.colsample_per_node), rng_);

    SplitCandidate best;
    for (auto slot : node_slots) {
      const std::size_t feature = tree_cols_[slot];
      const auto& list = sorted_[slot];
      double g_left = 0.0;
      double h_left = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const std::uint32_t r = list[i];
        g_left += grad_[r];
        h_left += hess_[r];
        const double v = x_(r, feature);
        const double v_next = x_(list[i + 1], feature);
        if (!(v < v_next)) continue;
        const double h_right = h_sum - h_left;
        if (h_left < cfg_.min_child_weight || h_right < cfg_.min_child_weight) continue;
        const double gain = split_gain(g_left, h_left, g_sum - g_left, h_right, cfg_);
        if (gain > 0.0 && (!best.found || gain > best.gain)) {
          double threshold = std::midpoint(v, v_next);
          if (!(threshold > v)) threshold = v_next;
          best = {gain, feature, threshold, true};
        }
      }
    }
    return best;
  }

  // Stable partition of every column list; returns the left child size.
  std::size_t partition(std::size_t begin, std::size_t end, const SplitCandidate& split) {
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t r = sorted_[0][i];
      goes_left_[r] = x_(r, split.feature) < split.threshold ? 1 : 0;
      n_left += goes_left_[r];
    }
    for (auto& list : sorted_) {
      std::size_t l = begin;
      std::size_t s = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (goes_left_[list[i]]) {
          list[l++] = list[i];
        } else {
          scratch_[s++] = list[i];
        }
      }
      std::copy_n(scratch_.begin(), s, list.begin() + static_cast<std::ptrdiff_t>(l));
    }
    return n_left;
  }

  const MatrixView& x_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const BrfConfig& cfg_;
  Rng& rng_;
  std::vector<std::uint32_t> tree_cols_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
};

}  // namespace

Tree build_tree(const MatrixView& x, std::span<const double> grad, std::span<const double> hess,
                const BrfConfig& cfg, Rng& rng, const PresortedColumns* presorted) {
  if (x.rows == 0 || x.cols == 0) throw EmptyInputError("cannot build a tree on an empty matrix");
  if (grad.size() != x.rows || hess.size() != x.rows) {
    throw DimensionError("gradient statistics do not match the row count");
  }
  if (presorted) return TreeBuilder(x, grad, hess, cfg, rng, *presorted).build();
  const PresortedColumns local(x);
  return TreeBuilder(x, grad, hess, cfg, rng, local).build();
}

double BrfModel::predict_margin(std::span<const double> row) const {
  if (row.size() != feature_count) {
    throw DimensionError("model expects " + std::to_string(feature_count) + " features, got " +
                         std::to_string(row.size()));
  }
  double margin = config.base_margin;
  std::vector<double> outputs;
  for (const auto& forest : rounds) {
    outputs.resize(forest.size());
    for (std::size_t t = 0; t < forest.size(); ++t) outputs[t] = forest[t].predict(row);
    margin += combine_round(outputs, config.learning_rate);
  }
  return margin;
}

std::vector<double> BrfModel::predict_margin(const MatrixView& x) const {
  if (x.cols != feature_count) {
    throw DimensionError("model expects " + std::to_string(feature_count) + " features, got " +
                         std::to_string(x.cols));
  }
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_margin(x.row(i));
  return out;
}

std::vector<double> BrfModel::feature_importance() const {
  std::vector<double> gain(feature_count, 0.0);
  for (const auto& forest : rounds) {
    for (const auto& tree : forest) {
      for (const auto& node : tree.nodes) {
        if (!node.is_leaf()) gain[static_cast<std::size_t>(node.feature)] += node.gain;
      }
    }
  }
  return gain;
}

BrfModel train(const MatrixView& x, std::span<const Label> labels, const BrfConfig& cfg,
               const TrainOptions& options) {
  cfg.validate();
  if (x.rows == 0) throw EmptyInputError("cannot train on an empty dataset");
  if (x.cols == 0) throw DimensionError("feature count must be >= 1");
  if (labels.size() != x.rows) throw DimensionError("label count does not match row count");
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (!std::isfinite(x.values[i])) {
      throw ValidationError("non-finite feature at row " + std::to_string(i / x.cols) +
                            ", column " + std::to_string(i % x.cols));
    }
  }
  const auto n_bad = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::bad));
  if (n_bad == 0 || n_bad == labels.size()) {
    const std::string msg = "training data holds a single class (" +
                            std::to_string(labels.size()) + " samples)";
    if (options.on_warning) {
      options.on_warning(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  }

  BrfModel model;
  model.config = cfg;
  model.feature_count = x.cols;
  model.rounds.reserve(cfg.num_rounds);

  const PresortedColumns presorted(x);
  std::vector<double> margins(x.rows, cfg.base_margin);
  std::vector<double> grad(x.rows);
  std::vector<double> hess(x.rows);
  std::vector<double> outputs(cfg.trees_per_round);

  for (std::size_t r = 0; r < cfg.num_rounds; ++r) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const GradHess gh = logistic_grad_hess(margins[i], labels[i]);
      grad[i] = gh.grad;
      hess[i] = gh.hess;
    }
    std::vector<Tree> forest(cfg.trees_per_round);
    parallel_for(cfg.trees_per_round, options.threads, [&](std::size_t t) {
      Rng rng(derive_seed(cfg.seed, {r, t}));
      forest[t] = build_tree(x, grad, hess, cfg, rng, &presorted);
    });
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t t = 0; t < forest.size(); ++t) outputs[t] = forest[t].predict(x.row(i));
      margins[i] += combine_round(outputs, cfg.learning_rate);
    }
    model.rounds.push_back(std::move(forest));
  }
  return model;
}

namespace {

json config_to_json(const BrfConfig& c) {
  return json{{"num_rounds", c.num_rounds},
              {"trees_per_round", c.trees_per_round},
              {"learning_rate", c.learning_rate},
              {"max_depth", c.max_depth},
              {"subsample_rows", c.subsample_rows},
              {"colsample_per_tree", c.colsample_per_tree},
              {"colsample_per_node", c.colsample_per_node},
              {"l1_alpha", c.l1_alpha},
              {"l2_lambda", c.l2_lambda},
              {"min_child_weight", c.min_child_weight},
              {"base_margin", c.base_margin},
              {"seed", c.seed}};
}

BrfConfig config_from_json(const json& j) {
  BrfConfig c;
  c.num_rounds = j.at("num_rounds").get<std::size_t>();
  c.trees_per_round = j.at("trees_per_round").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_depth = j.at("max_depth").get<std::size_t>();
  c.subsample_rows = j.at("subsample_rows").get<double>();
  c.colsample_per_tree = j.at("colsample_per_tree").get<double>();
  c.colsample_per_node = j.at("colsample_per_node").get<double>();
  c.l1_alpha = j.at("l1_alpha").get<double>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.min_child_weight = j.at("min_child_weight").get<double>();
  c.base_margin = j.at("base_margin").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Column-wise node arrays, the same shape for every tree.
json tree_to_json(const Tree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), default_left = json::array(), weight = json::array(),
       gain = json::array();
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    default_left.push_back(n.default_left ? 1 : 0);
    weight.push_back(n.weight);
    gain.push_back(n.gain);
  }
  return json{{"feature", feature}, {"threshold", threshold}, {"left", left},
              {"right", right},     {"default_left", default_left},
              {"weight", weight},   {"gain", gain}};
}

Tree tree_from_json(const json& j, std::size_t feature_count) {
  const auto& feature = j.at("feature");
  const std::size_t n = feature.size();
  const char* keys[] = {"threshold", "left", "right", "default_left", "weight", "gain"};
  for (const char* k : keys) {
    if (j.at(k).size() != n) throw ParseError(std::string("tree array '") + k + "' length mismatch");
  }
  if (n == 0) throw ParseError("tree without nodes");
  Tree tree;
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = tree.nodes[i];
    node.feature = feature[i].get<std::int32_t>();
    node.threshold = j["threshold"][i].get<double>();
    node.left = j["left"][i].get<std::int32_t>();
    node.right = j["right"][i].get<std::int32_t>();
    node.default_left = j["default_left"][i].get<int>() != 0;
    node.weight = j["weight"][i].get<double>();
    node.gain = j["gain"][i].get<double>();
    if (node.is_leaf()) continue;
    // Pre-order layout: children always follow their parent.
    const auto in_range = [&](std::int32_t c) {
      return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n);
    };
    if (static_cast<std::size_t>(node.feature) >= feature_count || !in_range(node.left) ||
        !in_range(node.right)) {
      throw ParseError("tree node " + std::to_string(i) + " references out-of-range data");
    }
  }
  return tree;
}

}  // namespace

std::string serialize(const BrfModel& model) {
  json rounds = json::array();
  for (const auto& forest : model.rounds) {
    json trees = json::array();
    for (const auto& tree : forest) trees.push_back(tree_to_json(tree));
    rounds.push_back(std::move(trees));
  }
  json doc{{"format", "segad-brf"},
           {"version", kModelFormatVersion},
           {"config", config_to_json(model.config)},
           {"feature_count", model.feature_count},
           {"rounds", std::move(rounds)}};
  return doc.dump() + "\n";
}

BrfModel deserialize(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::exception& e) {
    throw ParseError(std::string("model document does not parse: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "segad-brf") {
      throw ParseError("not a segad-brf model document");
    }
    const auto& v = doc.at("version");
    const int version = v.is_string() ? std::stoi(v.get<std::string>()) : v.get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("unsupported model format version " + std::to_string(version));
    }
    BrfModel model;
    model.config = config_from_json(doc.at("config"));
    model.config.validate();
    model.feature_count = doc.at("feature_count").get<std::size_t>();
    const auto& rounds = doc.at("rounds");
    if (rounds.size() != model.config.num_rounds) {
      throw ParseError("model has " + std::to_string(rounds.size()) + " rounds, config says " +
                       std::to_string(model.config.num_rounds));
    }
    for (const auto& forest : rounds) {
      if (forest.size() != model.config.trees_per_round) {
        throw ParseError("round with " + std::to_string(forest.size()) + " trees, config says " +
                         std::to_string(model.config.trees_per_round));
      }
      std::vector<Tree> trees;
      trees.reserve(forest.size());
      for (const auto& t : forest) trees.push_back(tree_from_json(t, model.feature_count));
      model.rounds.push_back(std::move(trees));
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("malformed model version field");
  } catch (const ValidationError& e) {
    if (dynamic_cast<const VersionError*>(&e) || dynamic_cast<const ParseError*>(&e)) throw;
    throw ParseError(std::string("model config invalid: ") + e.what());
  }
}

void save_model(const BrfModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model " + path.string());
  out << serialize(model);
  if (!out) throw IoError("failed writing model " + path.string());
}

BrfModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace segad::brf
