// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>

#include "json.hpp"

#include "wikiprf/error.hpp"

namespace wikiprf::imaging {

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match dimensions");
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // PPM header fields are whitespace-separated decimal integers; '#' starts a comment.
  long next_int() {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]) != 0) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw Error(ErrorCode::BadHeader, "dimension too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::BadHeader, "expected integer");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || std::isspace(bytes_[pos_]) == 0) {
      throw Error(ErrorCode::BadHeader, "missing separator before raster");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_]) != 0) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

std::optional<BBox> box_from_array(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) return std::nullopt;
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) return std::nullopt;
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) return std::nullopt;
  }
  const auto to_int = [](double d) {
    return static_cast<int>(std::clamp(std::llround(d), -1'000'000'000LL, 1'000'000'000LL));
  };
  return BBox{to_int(v[0]), to_int(v[1]), to_int(v[2]), to_int(v[3])};
}

std::optional<BBox> box_from_json(const nlohmann::json& j) {
  if (j.is_object()) {
    const auto it = j.find("bbox_2d");
    if (it != j.end()) return box_from_array(*it);
    return std::nullopt;
  }
  if (j.is_array()) {
    if (auto bare = box_from_array(j)) return bare;
    if (!j.empty() && j.front().is_object()) return box_from_json(j.front());
  }
  return std::nullopt;
}

// Tries every '{' / '[' start position against its matching bracket.
std::optional<BBox> scan_for_box(std::string_view text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    const char open = text[start];
    if (open != '{' && open != '[') continue;
    const char close = open == '{' ? '}' : ']';
    int depth = 0;
    for (std::size_t end = start; end < text.size(); ++end) {
      if (text[end] == open) ++depth;
      if (text[end] == close && --depth == 0) {
        const auto parsed = nlohmann::json::parse(text.substr(start, end - start + 1), nullptr, false);
        if (!parsed.is_discarded()) {
          if (auto box = box_from_json(parsed)) return box;
        }
        break;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw Error(ErrorCode::BadMagic, "expected P6");
  HeaderReader reader(bytes);
  const long width = reader.next_int();
  const long height = reader.next_int();
  const long maxval = reader.next_int();
  if (width <= 0 || height <= 0) throw Error(ErrorCode::BadHeader, "non-positive dimensions");
  if (maxval != 255) throw Error(ErrorCode::BadHeader, "maxval must be 255");
  reader.single_space();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  const std::size_t offset = reader.position();
  if (bytes.size() - offset < need) throw Error(ErrorCode::TruncatedPixels, "raster shorter than header declares");
  return Image(static_cast<int>(width), static_cast<int>(height),
               std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                         bytes.begin() + static_cast<std::ptrdiff_t>(offset + need)));
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

BBox parse_bbox_json(std::string_view text, int width, int height) {
  auto box = scan_for_box(text);
  if (!box) throw Error(ErrorCode::NoBox, "no 4-number bbox in grounding output");
  BBox b{std::clamp(std::min(box->x1, box->x2), 0, width), std::clamp(std::min(box->y1, box->y2), 0, height),
         std::clamp(std::max(box->x1, box->x2), 0, width), std::clamp(std::max(box->y1, box->y2), 0, height)};
  if (b.x2 <= b.x1 || b.y2 <= b.y1) throw Error(ErrorCode::DegenerateBox, "bbox has zero area after clamping");
  return b;
}

Image crop(const Image& image, const BBox& box) {
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > image.width() || box.y2 > image.height() || box.x2 <= box.x1 ||
      box.y2 <= box.y1) {
    throw Error(ErrorCode::InvalidArgument, "bbox outside image");
  }
  const auto src = image.pixels();
  const auto row_bytes = static_cast<std::size_t>(box.width()) * 3;
  std::vector<std::uint8_t> out;
  out.reserve(row_bytes * static_cast<std::size_t>(box.height()));
  for (int y = box.y1; y < box.y2; ++y) {
    const auto begin = (static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width()) +
                        static_cast<std::size_t>(box.x1)) * 3;
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(begin),
               src.begin() + static_cast<std::ptrdiff_t>(begin + row_bytes));
  }
  return Image(box.width(), box.height(), std::move(out));
}

Image flip_horizontal(const Image& image) {
  const auto src = image.pixels();
  std::vector<std::uint8_t> out(src.size());
  const auto w = static_cast<std::size_t>(image.width());
  for (std::size_t y = 0; y < static_cast<std::size_t>(image.height()); ++y) {
    for (std::size_t u = 0; u < w; ++u) {
      const auto from = (y * w + (w - 1 - u)) * 3;
      const auto to = (y * w + u) * 3;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(from), 3, out.begin() + static_cast<std::ptrdiff_t>(to));
    }
  }
  return Image(image.width(), image.height(), std::move(out));
}

}  // namespace wikiprf::imaging
