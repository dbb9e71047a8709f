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

#include "segad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segad/errors.hpp"

namespace segad::metrics {

namespace {

struct ClassCounts {
  std::size_t good = 0;
  std::size_t bad = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("scores and labels differ in length");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("non-finite score at index " + std::to_string(i));
    (labels[i] == Label::bad ? c.bad : c.good)++;
  }
  if (c.good == 0 || c.bad == 0) throw SingleClassError("both classes are required");
  return c;
}

std::vector<std::size_t> order_ascending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const Label> labels) {
  const ClassCounts counts = check_inputs(scores, labels);
  const auto order = order_ascending(scores);

  // Walk groups of equal scores; each bad sample in a group beats every good
  // sample below the group and ties with the goods inside it. All partial
  // sums are multiples of 0.5 and exact in double.
  double wins = 0.0;
  double goods_below = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double goods = 0.0;
    double bads = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == Label::bad ? bads : goods) += 1.0;
      ++j;
    }
    wins += bads * (goods_below + 0.5 * goods);
    goods_below += goods;
    i = j;
  }
  return wins / (static_cast<double>(counts.bad) * static_cast<double>(counts.good));
}

FprAtTpr fpr_at_tpr(std::span<const double> scores, std::span<const Label> labels,
                    double target_tpr) {
  const ClassCounts counts = check_inputs(scores, labels);
  if (!(target_tpr >= 0.0 && target_tpr <= 1.0)) {
    throw ValidationError("target TPR must lie in [0, 1]");
  }
  auto order = order_ascending(scores);
  std::reverse(order.begin(), order.end());

  // Lower the threshold one distinct score at a time until TPR is reached.
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] == Label::bad ? tp : fp)++;
      ++i;
    }
    if (static_cast<double>(tp) / static_cast<double>(counts.bad) >= target_tpr) {
      return {static_cast<double>(fp) / static_cast<double>(counts.good), t};
    }
  }
  // Unreachable: the lowest score yields TPR = 1.
  return {1.0, scores[order.back()]};
}

EvalReport evaluate(std::span<const double> scores, std::span<const Label> labels) {
  const ClassCounts counts = check_inputs(scores, labels);
  const FprAtTpr f = fpr_at_tpr(scores, labels, 0.95);
  return EvalReport{auroc(scores, labels), f.fpr, f.threshold, counts.good, counts.bad};
}

SeedAggregate aggregate(std::span<const double> per_seed) {
  if (per_seed.empty()) throw EmptyInputError("no per-seed values to aggregate");
  SeedAggregate a;
  a.per_seed.assign(per_seed.begin(), per_seed.end());
  double sum = 0.0;
  for (double v : per_seed) sum += v;
  const auto n = static_cast<double>(per_seed.size());
  a.mean = sum / n;
  double ss = 0.0;
  for (double v : per_seed) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / n);
  // Rounding can push the mean a hair outside [min, max] for near-equal inputs.
  const auto [lo, hi] = std::minmax_element(per_seed.begin(), per_seed.end());
  a.mean = std::clamp(a.mean, *lo, *hi);
  return a;
}

}  // namespace segad::metrics
