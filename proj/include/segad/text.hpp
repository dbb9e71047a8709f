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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace segad {

// Splits a comma-separated line. No quoting: ids and paths must not contain commas.
std::vector<std::string> split_csv_line(std::string_view line);

// Strict full-field parses; throw ParseError on trailing garbage or overflow.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

// 64-bit FNV-1a, used for provenance config hashes.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace segad
