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
#include <functional>

namespace segad {

// Worker count: SEGAD_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t default_threads();

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// processed exactly once; callers write results into per-index slots so the
// outcome never depends on scheduling. The first exception thrown by any
// task is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace segad
