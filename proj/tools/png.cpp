// Copyright 2026 The vtsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "png.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "vtsim/error.hpp"

namespace vtsim::cli {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const TactileImage& image) {
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(ErrorCode::kIo, "cannot create '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG encoding failed for '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int j = 0; j < image.height; ++j) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(j) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

TactileImage read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  TactileImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "PNG decoding failed for '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 8 || png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "'" + path.string() + "' is not 8-bit RGB");
  }
  img = TactileImage::blank(static_cast<int>(png_get_image_width(png, info)),
                            static_cast<int>(png_get_image_height(png, info)));
  for (int j = 0; j < img.height; ++j) {
    png_read_row(png, img.pixels.data() + static_cast<std::size_t>(j) * img.width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

TactileImage depth_colormap(const std::vector<float>& depth, int width, int height,
                            double max_depth) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {0.0, 0.0, 0.0},
      {0.25, 0.05, 0.45},
      {0.75, 0.2, 0.35},
      {0.98, 0.6, 0.1},
      {1.0, 1.0, 0.75},
  }};
  TactileImage img = TactileImage::blank(width, height);
  const double scale = max_depth > 0.0 ? 1.0 / max_depth : 0.0;
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      const double t = std::clamp(depth[static_cast<std::size_t>(j) * width + i] * scale, 0.0, 1.0);
      const double s = t * (kStops.size() - 1);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s), kStops.size() - 2);
      const double u = s - static_cast<double>(k);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - u) * kStops[k][c] + u * kStops[k + 1][c];
        img.at(i, j, c) = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  }
  return img;
}

}  // namespace vtsim::cli
