// Copyright 2026 The Tilefuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TILEFUSE_RASTER_H_
#define TILEFUSE_RASTER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace tilefuse {

// Multi-band 2-D pixel grid. Samples are stored row-major and
// band-interleaved-by-pixel: sample (x, y, b) lives at
// (y * width + x) * bands + b. 8-bit rasters keep one byte per sample,
// 16-bit rasters two.
class RasterImage {
 public:
  // Zero-filled raster. Throws InvalidArgument on bad dimensions, band
  // count (1..4) or bit depth (8 or 16).
  RasterImage(int width, int height, int bands, int bit_depth);

  // Takes ownership of an existing sample buffer and validates it.
  RasterImage(int width, int height, int bands, std::vector<std::uint8_t> samples);
  RasterImage(int width, int height, int bands, std::vector<std::uint16_t> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  int bands() const { return bands_; }
  int bit_depth() const { return bit_depth_; }
  std::size_t sample_count() const;

  std::uint16_t at(int x, int y, int band) const;
  void set(int x, int y, int band, std::uint16_t value);

  // Band names as carried by the planar container sidecar. Defaults to
  // DefaultBandNames(bands).
  const std::vector<std::string>& band_names() const { return band_names_; }
  void set_band_names(std::vector<std::string> names);

  // Direct buffer access; exactly one of these is non-empty depending on
  // bit_depth().
  const std::vector<std::uint8_t>& samples8() const;
  const std::vector<std::uint16_t>& samples16() const;
  std::vector<std::uint8_t>& mutable_samples8();
  std::vector<std::uint16_t>& mutable_samples16();

  bool operator==(const RasterImage& other) const = default;

 private:
  std::size_t index(int x, int y, int band) const {
    return (static_cast<std::size_t>(y) * width_ + x) * bands_ + band;
  }

  int width_ = 0;
  int height_ = 0;
  int bands_ = 0;
  int bit_depth_ = 8;
  std::vector<std::string> band_names_;
  std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>> data_;
};

// "blue","green","red","nir" for four bands, "band_<i>" otherwise.
std::vector<std::string> DefaultBandNames(int bands);

// Band selector. Four-band sources are ordered B,G,R,NIR.
class BandCombo {
 public:
  static BandCombo Rgb() { return BandCombo({2, 1, 0}); }
  static BandCombo NirGB() { return BandCombo({3, 1, 0}); }
  static BandCombo Custom(std::vector<int> indices) { return BandCombo(std::move(indices)); }

  // Accepts "rgb", "nirgb" or a comma-separated index list such as "3,1,0".
  static BandCombo Parse(const std::string& text);

  const std::vector<int>& indices() const { return indices_; }

 private:
  explicit BandCombo(std::vector<int> indices);
  std::vector<int> indices_;
};

// Output band i is input band combo.indices()[i]. Throws InvalidArgument
// when an index is out of range for the image.
RasterImage SelectBands(const RasterImage& image, const BandCombo& combo);

// Dispatches on extension: ".png" (8-bit, 1-4 channels) or ".bsq" (planar
// container with a ".bsq.json" sidecar).
RasterImage LoadRaster(const std::filesystem::path& path);
void SaveRaster(const RasterImage& image, const std::filesystem::path& path);

RasterImage LoadPng(const std::filesystem::path& path);
void SavePng(const RasterImage& image, const std::filesystem::path& path);

RasterImage LoadPlanar(const std::filesystem::path& path);
void SavePlanar(const RasterImage& image, const std::filesystem::path& path);

}  // namespace tilefuse

#endif  // TILEFUSE_RASTER_H_
