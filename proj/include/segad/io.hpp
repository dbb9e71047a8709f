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
#include <filesystem>
#include <span>
#include <vector>

#include "segad/core.hpp"
#include "segad/image.hpp"

namespace segad::io {

// AMAP1 layout (all little-endian):
//   bytes 0..4   "AMAP1"
//   bytes 5..8   width  (u32)
//   bytes 9..12  height (u32)
//   then width*height IEEE-754 binary32 values, row-major.
inline constexpr char kAmapMagic[5] = {'A', 'M', 'A', 'P', '1'};
inline constexpr std::size_t kAmapHeaderSize = 13;

std::vector<std::byte> encode_amap(const AnomalyMap& map);
// Throws BadMagicError, TruncatedError (short or overlong payload) or
// NonFiniteError naming the pixel index.
AnomalyMap decode_amap(std::span<const std::byte> bytes);

AnomalyMap read_amap(const std::filesystem::path& path);
void write_amap(const AnomalyMap& map, const std::filesystem::path& path);

// Binary PNM, P5 (gray) or P6 (RGB), maxval <= 255.
std::vector<std::byte> encode_pnm(const GrayImage& image);
GrayImage decode_pnm(std::span<const std::byte> bytes);
GrayImage read_pnm(const std::filesystem::path& path);
void write_pnm(const GrayImage& image, const std::filesystem::path& path);

// 8-bit P5 whose pixel values are segment indices; L = max + 1.
SegmentationMap decode_segmap(std::span<const std::byte> bytes);
SegmentationMap read_segmap(const std::filesystem::path& path);
void write_segmap(const SegmentationMap& seg, const std::filesystem::path& path);

// Interop: 16-bit P5 (maxval 65535, big-endian samples) read as value / 65535.
AnomalyMap read_pgm16_as_amap(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace segad::io
