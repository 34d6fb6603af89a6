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

#include "tilefuse/raster.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "tilefuse/error.h"

namespace tilefuse {

namespace {

constexpr int kMaxBands = 4;

void CheckShape(int width, int height, int bands) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (bands < 1 || bands > kMaxBands) {
    throw InvalidArgument("unsupported band count " + std::to_string(bands));
  }
}

std::size_t ShapeSamples(int width, int height, int bands) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         static_cast<std::size_t>(bands);
}

std::string ToLower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::filesystem::path SidecarPath(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};

}  // namespace

RasterImage::RasterImage(int width, int height, int bands, int bit_depth)
    : width_(width), height_(height), bands_(bands), bit_depth_(bit_depth) {
  CheckShape(width, height, bands);
  const std::size_t n = ShapeSamples(width, height, bands);
  if (bit_depth == 8) {
    data_ = std::vector<std::uint8_t>(n, 0);
  } else if (bit_depth == 16) {
    data_ = std::vector<std::uint16_t>(n, 0);
  } else {
    throw InvalidArgument("unsupported bit depth " + std::to_string(bit_depth));
  }
  band_names_ = DefaultBandNames(bands);
}

RasterImage::RasterImage(int width, int height, int bands, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), bands_(bands), bit_depth_(8) {
  CheckShape(width, height, bands);
  if (samples.size() != ShapeSamples(width, height, bands)) {
    throw InvalidArgument("sample count does not match width x height x bands");
  }
  data_ = std::move(samples);
  band_names_ = DefaultBandNames(bands);
}

RasterImage::RasterImage(int width, int height, int bands, std::vector<std::uint16_t> samples)
    : width_(width), height_(height), bands_(bands), bit_depth_(16) {
  CheckShape(width, height, bands);
  if (samples.size() != ShapeSamples(width, height, bands)) {
    throw InvalidArgument("sample count does not match width x height x bands");
  }
  data_ = std::move(samples);
  band_names_ = DefaultBandNames(bands);
}

std::size_t RasterImage::sample_count() const { return ShapeSamples(width_, height_, bands_); }

std::uint16_t RasterImage::at(int x, int y, int band) const {
  if (bit_depth_ == 8) return std::get<0>(data_)[index(x, y, band)];
  return std::get<1>(data_)[index(x, y, band)];
}

void RasterImage::set(int x, int y, int band, std::uint16_t value) {
  if (bit_depth_ == 8) {
    if (value > 0xFF) throw InvalidArgument("sample value exceeds 8-bit range");
    std::get<0>(data_)[index(x, y, band)] = static_cast<std::uint8_t>(value);
  } else {
    std::get<1>(data_)[index(x, y, band)] = value;
  }
}

void RasterImage::set_band_names(std::vector<std::string> names) {
  if (static_cast<int>(names.size()) != bands_) {
    throw InvalidArgument("band name count does not match band count");
  }
  band_names_ = std::move(names);
}

const std::vector<std::uint8_t>& RasterImage::samples8() const {
  static const std::vector<std::uint8_t> kEmpty;
  return bit_depth_ == 8 ? std::get<0>(data_) : kEmpty;
}

const std::vector<std::uint16_t>& RasterImage::samples16() const {
  static const std::vector<std::uint16_t> kEmpty;
  return bit_depth_ == 16 ? std::get<1>(data_) : kEmpty;
}

std::vector<std::uint8_t>& RasterImage::mutable_samples8() {
  if (bit_depth_ != 8) throw InvalidArgument("raster is not 8-bit");
  return std::get<0>(data_);
}

std::vector<std::uint16_t>& RasterImage::mutable_samples16() {
  if (bit_depth_ != 16) throw InvalidArgument("raster is not 16-bit");
  return std::get<1>(data_);
}

std::vector<std::string> DefaultBandNames(int bands) {
  if (bands == 4) return {"blue", "green", "red", "nir"};
  std::vector<std::string> names;
  for (int i = 0; i < bands; ++i) names.push_back("band_" + std::to_string(i));
  return names;
}

BandCombo::BandCombo(std::vector<int> indices) : indices_(std::move(indices)) {
  if (indices_.empty() || static_cast<int>(indices_.size()) > kMaxBands) {
    throw InvalidArgument("band combination must select 1-4 bands");
  }
  for (int i : indices_) {
    if (i < 0) throw InvalidArgument("negative band index");
  }
}

BandCombo BandCombo::Parse(const std::string& text) {
  const std::string lower = ToLower(text);
  if (lower == "rgb") return Rgb();
  if (lower == "nirgb" || lower == "nir_g_b") return NirGB();
  std::vector<int> indices;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      indices.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad band selector '" + text + "'");
    }
  }
  return Custom(std::move(indices));
}

RasterImage SelectBands(const RasterImage& image, const BandCombo& combo) {
  const auto& idx = combo.indices();
  for (int i : idx) {
    if (i >= image.bands()) {
      throw InvalidArgument("band index " + std::to_string(i) + " out of range for " +
                            std::to_string(image.bands()) + "-band image");
    }
  }
  const int out_bands = static_cast<int>(idx.size());
  const std::size_t pixels = static_cast<std::size_t>(image.width()) * image.height();
  const int in_bands = image.bands();
  auto project = [&](const auto& src, auto& dst) {
    for (std::size_t p = 0; p < pixels; ++p) {
      for (int b = 0; b < out_bands; ++b) {
        dst[p * out_bands + b] = src[p * in_bands + idx[b]];
      }
    }
  };
  std::vector<std::string> names;
  for (int i : idx) names.push_back(image.band_names()[i]);
  if (image.bit_depth() == 8) {
    std::vector<std::uint8_t> out(pixels * out_bands);
    project(image.samples8(), out);
    RasterImage result(image.width(), image.height(), out_bands, std::move(out));
    result.set_band_names(std::move(names));
    return result;
  }
  std::vector<std::uint16_t> out(pixels * out_bands);
  project(image.samples16(), out);
  RasterImage result(image.width(), image.height(), out_bands, std::move(out));
  result.set_band_names(std::move(names));
  return result;
}

RasterImage LoadRaster(const std::filesystem::path& path) {
  const std::string ext = ToLower(path.extension().string());
  if (ext == ".png") return LoadPng(path);
  if (ext == ".bsq") return LoadPlanar(path);
  throw FormatError("unsupported raster format: " + path.string());
}

void SaveRaster(const RasterImage& image, const std::filesystem::path& path) {
  const std::string ext = ToLower(path.extension().string());
  if (ext == ".png") return SavePng(image, path);
  if (ext == ".bsq") return SavePlanar(image, path);
  throw FormatError("unsupported raster format: " + path.string());
}

RasterImage LoadPng(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    const std::string msg = png.message;
    png_image_free(&png);
    if (!std::filesystem::exists(path)) throw IoError("cannot open " + path.string());
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw FormatError("only 8-bit PNG is supported: " + path.string());
  }
  int bands = 0;
  const bool color = png.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = png.format & PNG_FORMAT_FLAG_ALPHA;
  if (color) {
    png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    bands = alpha ? 4 : 3;
  } else {
    png.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    bands = alpha ? 2 : 1;
  }
  const int width = static_cast<int>(png.width);
  const int height = static_cast<int>(png.height);
  std::vector<std::uint8_t> samples(ShapeSamples(width, height, bands));
  if (!png_image_finish_read(&png, nullptr, samples.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return RasterImage(width, height, bands, std::move(samples));
}

void SavePng(const RasterImage& image, const std::filesystem::path& path) {
  if (image.bit_depth() != 8) {
    throw InvalidArgument("PNG output requires an 8-bit raster; use the planar container");
  }
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for " + path.string());
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                        PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, image.width(), image.height(), 8, kColorTypes[image.bands() - 1],
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(image.width()) * image.bands();
  const std::uint8_t* base = image.samples8().data();
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(base + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw IoError("write failed for " + path.string());
}

RasterImage LoadPlanar(const std::filesystem::path& path) {
  std::ifstream header_in(SidecarPath(path));
  if (!header_in) throw IoError("cannot open sidecar " + SidecarPath(path).string());
  nlohmann::json header;
  try {
    header_in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar " + SidecarPath(path).string() + ": " + e.what());
  }
  int width = 0, height = 0, bands = 0, bit_depth = 0;
  std::vector<std::string> names;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    bands = header.at("bands").get<int>();
    bit_depth = header.at("bit_depth").get<int>();
    if (header.contains("band_names")) names = header.at("band_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar " + SidecarPath(path).string() + ": " + e.what());
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw FormatError("unsupported bit depth " + std::to_string(bit_depth));
  }
  if (bands < 1 || bands > kMaxBands) {
    throw FormatError("unsupported band count " + std::to_string(bands));
  }
  if (width < 1 || height < 1) throw FormatError("bad raster dimensions in sidecar");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const std::size_t bytes_per_sample = bit_depth / 8;
  const std::size_t expected = pixels * bands * bytes_per_sample;
  if (payload.size() != expected) {
    throw FormatError("payload length mismatch: expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(payload.size()));
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(payload.data());

  RasterImage image(width, height, bands, bit_depth);
  if (bit_depth == 8) {
    auto& out = image.mutable_samples8();
    for (int b = 0; b < bands; ++b) {
      const std::uint8_t* plane = bytes + b * pixels;
      for (std::size_t p = 0; p < pixels; ++p) out[p * bands + b] = plane[p];
    }
  } else {
    auto& out = image.mutable_samples16();
    for (int b = 0; b < bands; ++b) {
      const std::uint8_t* plane = bytes + b * pixels * 2;
      for (std::size_t p = 0; p < pixels; ++p) {
        out[p * bands + b] =
            static_cast<std::uint16_t>(plane[2 * p] | (static_cast<unsigned>(plane[2 * p + 1]) << 8));
      }
    }
  }
  if (!names.empty()) {
    if (static_cast<int>(names.size()) != bands) throw FormatError("band_names length mismatch");
    image.set_band_names(std::move(names));
  }
  return image;
}

void SavePlanar(const RasterImage& image, const std::filesystem::path& path) {
  const std::size_t pixels = static_cast<std::size_t>(image.width()) * image.height();
  const int bands = image.bands();
  std::vector<std::uint8_t> payload(pixels * bands * (image.bit_depth() / 8));
  if (image.bit_depth() == 8) {
    const auto& src = image.samples8();
    for (int b = 0; b < bands; ++b) {
      for (std::size_t p = 0; p < pixels; ++p) payload[b * pixels + p] = src[p * bands + b];
    }
  } else {
    const auto& src = image.samples16();
    for (int b = 0; b < bands; ++b) {
      std::uint8_t* plane = payload.data() + b * pixels * 2;
      for (std::size_t p = 0; p < pixels; ++p) {
        const std::uint16_t v = src[p * bands + b];
        plane[2 * p] = static_cast<std::uint8_t>(v & 0xFF);
        plane[2 * p + 1] = static_cast<std::uint8_t>(v >> 8);
      }
    }
  }

  nlohmann::ordered_json header;
  header["width"] = image.width();
  header["height"] = image.height();
  header["bands"] = bands;
  header["bit_depth"] = image.bit_depth();
  header["band_names"] = image.band_names();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed for " + path.string());
  std::ofstream side(SidecarPath(path), std::ios::trunc);
  if (!side) throw IoError("cannot write " + SidecarPath(path).string());
  side << header.dump(2) << '\n';
  if (!side) throw IoError("write failed for " + SidecarPath(path).string());
}

}  // namespace tilefuse
