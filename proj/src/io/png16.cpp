#include "rdc/io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <iostream>
#include <memory>

namespace rdc {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

DepthMap read_depth_png16(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw FormatError(path.string() + ": cannot open file");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.string() + ": not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": libpng initialization failed");
  }
  DepthMap depth;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG data");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": expected a 16-bit single-channel PNG (got bit depth " +
                      std::to_string(bit_depth) + ", color type " + std::to_string(color_type) + ")");
  }
  png_set_swap(png);  // PNG stores 16-bit samples big-endian
  png_read_update_info(png, info);

  depth = DepthMap(static_cast<int>(w), static_cast<int>(h));
  std::vector<std::uint16_t> row(w);
  for (png_uint_32 v = 0; v < h; ++v) {
    png_read_row(png, reinterpret_cast<png_bytep>(row.data()), nullptr);
    for (png_uint_32 u = 0; u < w; ++u)
      depth(static_cast<int>(u), static_cast<int>(v)) = row[u] / kPng16Scale;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return depth;
}

std::size_t write_depth_png16(const fs::path& path, const DepthMap& depth) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const int w = depth.width(), h = depth.height();
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  std::size_t saturated = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!depth.valid(u, v)) continue;
      const double scaled = std::nearbyint(depth(u, v) * kPng16Scale);
      std::uint16_t value;
      if (scaled > 65535.0) {
        value = 65535;
        ++saturated;
      } else {
        // Valid depths never encode as the invalid value 0.
        value = static_cast<std::uint16_t>(std::max(1.0, scaled));
      }
      pixels[static_cast<std::size_t>(v) * static_cast<std::size_t>(w) + static_cast<std::size_t>(u)] = value;
    }
  }
  if (saturated > 0)
    std::cerr << "warning: " << path.string() << ": " << saturated << " pixels beyond "
              << kPng16MaxDepth << " m saturated\n";

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw FormatError(path.string() + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(path.string() + ": libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(path.string() + ": PNG encoding failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  for (int v = 0; v < h; ++v)
    png_write_row(png, reinterpret_cast<png_const_bytep>(pixels.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(w)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return saturated;
}

}  // namespace rdc
