#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace touchdigits::image {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

// 8-bit RGB raster with a few drawing primitives for report images.
class Image {
 public:
  Image(std::size_t width, std::size_t height, Rgb fill = kWhite);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  Rgb pixel(std::size_t x, std::size_t y) const;
  // Out-of-range coordinates are ignored.
  void set(long x, long y, Rgb color);
  void fill_rect(long x, long y, long w, long h, Rgb color);
  void line(long x0, long y0, long x1, long y1, Rgb color);
  // 3x5 bitmap font scaled by `scale`. Supports digits, space and . : - % and
  // upper-case letters; other characters render as blanks.
  void text(long x, long y, const std::string& s, Rgb color, long scale = 1);
  static long text_width(const std::string& s, long scale = 1);

  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> data_;
};

// Throws IoError on failure.
void write_png(const Image& img, const std::filesystem::path& path);

// Decodes an RGB PNG (used by tests and tools).
Image read_png(const std::filesystem::path& path);

}  // namespace touchdigits::image
