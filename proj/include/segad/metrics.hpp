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
#include <span>
#include <string>
#include <vector>

#include "segad/core.hpp"

namespace segad::metrics {

struct EvalReport {
  double auroc = 0.0;
  double fpr_at_95tpr = 0.0;
  double threshold_used = 0.0;
  std::size_t n_good = 0;
  std::size_t n_bad = 0;
};

struct FprAtTpr {
  double fpr = 0.0;
  double threshold = 0.0;
};

struct SeedAggregate {
  double mean = 0.0;
  double std = 0.0;  // population (n-denominator)
  std::vector<double> per_seed;
};

// Mann-Whitney AUROC: the share of (bad, good) pairs where the bad sample
// scores higher, ties counting one half. Throws SingleClassError.
double auroc(std::span<const double> scores, std::span<const Label> labels);

// Largest threshold t whose TPR over `score >= t` reaches target_tpr, and the
// share of good samples with score >= t at that threshold.
FprAtTpr fpr_at_tpr(std::span<const double> scores, std::span<const Label> labels,
                    double target_tpr = 0.95);

EvalReport evaluate(std::span<const double> scores, std::span<const Label> labels);

SeedAggregate aggregate(std::span<const double> per_seed);

}  // namespace segad::metrics
