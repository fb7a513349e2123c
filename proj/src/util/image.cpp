#include "touchdigits/util/image.hpp"

#include <png.h>

#include <cstdlib>
#include <cstring>
#include <map>

#include "touchdigits/util/error.hpp"

namespace touchdigits::image {
namespace {

// Rows of a 3x5 glyph, top to bottom; bit 2 is the left column.
const std::map<char, std::array<std::uint8_t, 5>>& font() {
  static const std::map<char, std::array<std::uint8_t, 5>> glyphs{
      {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}},
      {'3', {7, 1, 7, 1, 7}}, {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}},
      {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 2, 2}}, {'8', {7, 5, 7, 5, 7}},
      {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {':', {0, 2, 0, 2, 0}},
      {'-', {0, 0, 7, 0, 0}}, {'%', {5, 1, 2, 4, 5}}, {'A', {2, 5, 7, 5, 5}},
      {'C', {7, 4, 4, 4, 7}}, {'E', {7, 4, 6, 4, 7}}, {'F', {7, 4, 6, 4, 4}},
      {'N', {5, 7, 7, 7, 5}}, {'O', {7, 5, 5, 5, 7}}, {'P', {7, 5, 7, 4, 4}},
      {'R', {6, 5, 6, 5, 5}}, {'T', {7, 2, 2, 2, 2}}, {'U', {5, 5, 5, 5, 7}},
      {'Y', {5, 5, 2, 2, 2}}, {'I', {7, 2, 2, 2, 7}}, {'L', {4, 4, 4, 4, 7}},
      {'S', {7, 4, 7, 1, 7}}, {'D', {6, 5, 5, 5, 6}}, {'G', {7, 4, 5, 5, 7}},
      {'M', {5, 7, 7, 5, 5}}, {'B', {6, 5, 6, 5, 6}}, {'H', {5, 5, 7, 5, 5}},
      {'K', {5, 5, 6, 5, 5}}, {'V', {5, 5, 5, 5, 2}}, {'W', {5, 5, 7, 7, 5}},
      {'X', {5, 5, 2, 5, 5}}, {'Z', {7, 1, 2, 4, 7}}, {'J', {1, 1, 1, 5, 7}},
      {'Q', {7, 5, 5, 7, 1}},
  };
  return glyphs;
}

}  // namespace

Image::Image(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), data_(width * height * 3) {
  if (width == 0 || height == 0) throw InvalidArgument("image dimensions must be positive");
  for (std::size_t i = 0; i < width * height; ++i) std::memcpy(&data_[i * 3], fill.data(), 3);
}

Rgb Image::pixel(std::size_t x, std::size_t y) const {
  const std::size_t i = (y * width_ + x) * 3;
  return {data_.at(i), data_.at(i + 1), data_.at(i + 2)};
}

void Image::set(long x, long y, Rgb color) {
  if (x < 0 || y < 0 || x >= static_cast<long>(width_) || y >= static_cast<long>(height_)) return;
  std::memcpy(&data_[(static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)) * 3], color.data(), 3);
}

void Image::fill_rect(long x, long y, long w, long h, Rgb color) {
  for (long r = y; r < y + h; ++r) {
    for (long c = x; c < x + w; ++c) set(c, r, color);
  }
}

void Image::line(long x0, long y0, long x1, long y1, Rgb color) {
  const long dx = std::labs(x1 - x0);
  const long dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1;
  const long sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    set(x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Image::text(long x, long y, const std::string& s, Rgb color, long scale) {
  long cursor = x;
  for (char ch : s) {
    auto it = font().find(ch);
    if (it != font().end()) {
      for (long row = 0; row < 5; ++row) {
        for (long col = 0; col < 3; ++col) {
          if (it->second[static_cast<std::size_t>(row)] & (4 >> col)) {
            fill_rect(cursor + col * scale, y + row * scale, scale, scale, color);
          }
        }
      }
    }
    cursor += 4 * scale;
  }
}

long Image::text_width(const std::string& s, long scale) {
  return s.empty() ? 0 : static_cast<long>(s.size()) * 4 * scale - scale;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image out;
  std::memset(&out, 0, sizeof out);
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.width());
  out.height = static_cast<png_uint_32>(img.height());
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, img.data().data(), 0, nullptr)) {
    const std::string why = out.message;
    png_image_free(&out);
    throw IoError("cannot write PNG " + path.string() + ": " + why);
  }
}

Image read_png(const std::filesystem::path& path) {
  png_image in;
  std::memset(&in, 0, sizeof in);
  in.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&in, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + in.message);
  }
  in.format = PNG_FORMAT_RGB;
  Image img(in.width, in.height);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(in));
  if (!png_image_finish_read(&in, nullptr, buffer.data(), 0, nullptr)) {
    const std::string why = in.message;
    png_image_free(&in);
    throw IoError("cannot decode PNG " + path.string() + ": " + why);
  }
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const std::size_t i = (y * img.width() + x) * 3;
      img.set(static_cast<long>(x), static_cast<long>(y), {buffer[i], buffer[i + 1], buffer[i + 2]});
    }
  }
  return img;
}

}  // namespace touchdigits::image
