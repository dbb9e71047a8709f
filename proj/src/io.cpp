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

#include "segad/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "segad/errors.hpp"

namespace segad::io {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(std::span<const std::byte> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::byte> encode_amap(const AnomalyMap& map) {
  std::vector<std::byte> out;
  out.reserve(kAmapHeaderSize + 4 * map.size());
  for (char c : kAmapMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  for (float v : map.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

AnomalyMap decode_amap(std::span<const std::byte> bytes) {
  if (bytes.size() < sizeof(kAmapMagic) ||
      std::memcmp(bytes.data(), kAmapMagic, sizeof(kAmapMagic)) != 0) {
    throw BadMagicError("not an AMAP1 file (bad magic)");
  }
  if (bytes.size() < kAmapHeaderSize) throw TruncatedError("AMAP1 header truncated");
  const std::size_t width = get_u32(bytes, 5);
  const std::size_t height = get_u32(bytes, 9);
  if (width == 0 || height == 0) throw FormatError("AMAP1 header has a zero dimension");
  const std::size_t expected = kAmapHeaderSize + 4 * width * height;
  if (bytes.size() < expected) {
    throw TruncatedError("AMAP1 payload truncated: " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw FormatError("AMAP1 payload has " + std::to_string(bytes.size() - expected) +
                      " trailing bytes");
  }
  std::vector<float> values(width * height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kAmapHeaderSize + 4 * i));
  }
  return AnomalyMap(width, height, std::move(values));
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw IoError("cannot size " + path.string());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

AnomalyMap read_amap(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_amap(bytes);
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(path.string() + ": " + e.what(), e.index());
  } catch (const TruncatedError& e) {
    throw TruncatedError(path.string() + ": " + e.what());
  } catch (const BadMagicError& e) {
    throw BadMagicError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_amap(const AnomalyMap& map, const std::filesystem::path& path) {
  write_file(path, encode_amap(map));
}

namespace {

struct PnmHeader {
  char kind = '5';
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t data_offset = 0;
};

// Parses "P5"/"P6", width, height, maxval with '#' comments, then exactly one
// whitespace byte before the raster.
PnmHeader parse_pnm_header(std::span<const std::byte> b) {
  auto ch = [&](std::size_t i) { return static_cast<char>(b[i]); };
  if (b.size() < 2 || ch(0) != 'P' || (ch(1) != '5' && ch(1) != '6')) {
    throw BadMagicError("not a binary PNM file (expected P5 or P6)");
  }
  PnmHeader h;
  h.kind = ch(1);
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (true) {
      if (pos >= b.size()) throw TruncatedError("PNM header truncated");
      const char c = ch(pos);
      if (c == '#') {
        while (pos < b.size() && ch(pos) != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    if (!std::isdigit(static_cast<unsigned char>(ch(pos)))) {
      throw FormatError("PNM header has a non-numeric field");
    }
    std::size_t v = 0;
    while (pos < b.size() && std::isdigit(static_cast<unsigned char>(ch(pos)))) {
      v = v * 10 + static_cast<std::size_t>(ch(pos) - '0');
      if (v > (1U << 30)) throw FormatError("PNM header value too large");
      ++pos;
    }
    return v;
  };
  h.width = next_number();
  h.height = next_number();
  h.maxval = next_number();
  if (pos >= b.size() || !std::isspace(static_cast<unsigned char>(ch(pos)))) {
    throw TruncatedError("PNM header truncated");
  }
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0) throw FormatError("PNM has a zero dimension");
  if (h.maxval == 0 || h.maxval > 65535) throw FormatError("PNM maxval out of range");
  return h;
}

void check_payload(std::span<const std::byte> b, const PnmHeader& h, std::size_t sample_bytes) {
  const std::size_t channels = h.kind == '6' ? 3 : 1;
  const std::size_t expected = h.data_offset + h.width * h.height * channels * sample_bytes;
  if (b.size() < expected) {
    throw TruncatedError("PNM raster truncated: " + std::to_string(b.size()) +
                         " bytes, expected " + std::to_string(expected));
  }
  if (b.size() > expected) throw FormatError("PNM raster has trailing bytes");
}

}  // namespace

std::vector<std::byte> encode_pnm(const GrayImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("PNM supports 1 or 3 channels");
  }
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::byte> out;
  out.reserve(header.size() + image.pixels.size());
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  for (std::uint8_t p : image.pixels) out.push_back(static_cast<std::byte>(p));
  return out;
}

GrayImage decode_pnm(std::span<const std::byte> bytes) {
  const PnmHeader h = parse_pnm_header(bytes);
  if (h.maxval > 255) throw FormatError("only 8-bit PNM rasters are supported here");
  check_payload(bytes, h, 1);
  GrayImage img(h.width, h.height, h.kind == '6' ? 3 : 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const auto v = std::to_integer<std::uint8_t>(bytes[h.data_offset + i]);
    if (v > h.maxval) throw FormatError("PNM sample exceeds maxval");
    img.pixels[i] = v;
  }
  return img;
}

GrayImage read_pnm(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const TruncatedError& e) {
    throw TruncatedError(path.string() + ": " + e.what());
  } catch (const BadMagicError& e) {
    throw BadMagicError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pnm(const GrayImage& image, const std::filesystem::path& path) {
  write_file(path, encode_pnm(image));
}

SegmentationMap decode_segmap(std::span<const std::byte> bytes) {
  const GrayImage img = decode_pnm(bytes);
  if (img.channels != 1) throw FormatError("segmentation map must be a P5 (gray) PGM");
  return SegmentationMap(img.width, img.height,
                         std::vector<std::uint32_t>(img.pixels.begin(), img.pixels.end()));
}

SegmentationMap read_segmap(const std::filesystem::path& path) {
  try {
    return decode_segmap(read_file(path));
  } catch (const GapError& e) {
    throw GapError(path.string() + ": " + e.what());
  } catch (const TruncatedError& e) {
    throw TruncatedError(path.string() + ": " + e.what());
  } catch (const BadMagicError& e) {
    throw BadMagicError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_segmap(const SegmentationMap& seg, const std::filesystem::path& path) {
  if (seg.num_segments() > 256) throw ValidationError("PGM segmentation maps hold at most 256 segments");
  GrayImage img(seg.width(), seg.height(), 1);
  const auto labels = seg.labels();
  std::transform(labels.begin(), labels.end(), img.pixels.begin(),
                 [](std::uint32_t l) { return static_cast<std::uint8_t>(l); });
  write_pnm(img, path);
}

AnomalyMap read_pgm16_as_amap(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const PnmHeader h = parse_pnm_header(bytes);
  if (h.kind != '5' || h.maxval != 65535) {
    throw FormatError(path.string() + ": expected a 16-bit P5 PGM with maxval 65535");
  }
  check_payload(bytes, h, 2);
  std::vector<float> values(h.width * h.height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto hi = std::to_integer<std::uint32_t>(bytes[h.data_offset + 2 * i]);
    const auto lo = std::to_integer<std::uint32_t>(bytes[h.data_offset + 2 * i + 1]);
    values[i] = static_cast<float>(static_cast<double>((hi << 8) | lo) / 65535.0);
  }
  return AnomalyMap(h.width, h.height, std::move(values));
}

}  // namespace segad::io
