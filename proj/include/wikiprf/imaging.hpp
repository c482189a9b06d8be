// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace wikiprf::imaging {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Immutable RGB8 raster, row-major.
class Image {
 public:
  /// Throws Error(InvalidArgument) unless width, height > 0 and
  /// pixels.size() == width * height * 3.
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  Rgb at(int x, int y) const;

  bool operator==(const Image&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Half-open box [x1, x2) x [y1, y2).
struct BBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const BBox&) const = default;
  int width() const noexcept { return x2 - x1; }
  int height() const noexcept { return y2 - y1; }
};

/// Binary P6 with maxval 255 only. Errors: BadMagic, BadHeader, TruncatedPixels.
Image decode_ppm(std::span<const std::uint8_t> bytes);

/// Canonical "P6\n<w> <h>\n255\n" header followed by raw pixels.
std::vector<std::uint8_t> encode_ppm(const Image& image);

/// Accepts {"bbox_2d": [x1,y1,x2,y2]}, an array of such objects (first one
/// wins) or a bare 4-number array, optionally wrapped in a ```json fence or
/// surrounded by prose. Coordinates are rounded and clamped into the image.
/// Errors: NoBox, DegenerateBox.
BBox parse_bbox_json(std::string_view text, int width, int height);

/// Output pixel (u, v) is input pixel (x1 + u, y1 + v). The box must lie
/// within the image (Error(InvalidArgument) otherwise).
Image crop(const Image& image, const BBox& box);

Image flip_horizontal(const Image& image);

}  // namespace wikiprf::imaging
