#pragma once

#include <png.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rdn/image.hpp"

namespace rdn {
namespace detail {

inline std::string lower_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

struct FileCloser {
  std::FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

inline Image planar_from_interleaved(const std::vector<std::uint8_t>& buf,
                                     int c, int h, int w) {
  Image img(c, h, w);
  for (int ci = 0; ci < c; ++ci) {
    float* dst = img.plane(ci);
    for (std::size_t p = 0; p < img.plane_size(); ++p) {
      dst[p] = static_cast<float>(buf[p * c + ci]) / 255.0f;
    }
  }
  return img;
}

inline Image read_png(const std::string& path) {
  FileCloser fc;
  fc.f = std::fopen(path.c_str(), "rb");
  if (!fc.f) throw IoError("cannot open '" + path + "' for reading");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "' is not a decodable PNG");
  }
  png_init_io(png, fc.f);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': unsupported channel count " +
                      std::to_string(channels));
  }
  buf.resize(static_cast<std::size_t>(w) * h * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = buf.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return planar_from_interleaved(buf, channels, static_cast<int>(h),
                                 static_cast<int>(w));
}

inline void write_png(const std::string& path, const Image& img) {
  FileCloser fc;
  fc.f = std::fopen(path.c_str(), "wb");
  if (!fc.f) throw IoError("cannot open '" + path + "' for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed writing '" + path + "'");
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, img.w, img.h, 8,
               img.is_gray() ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  buf.resize(static_cast<std::size_t>(img.w) * img.h * img.c);
  for (int ci = 0; ci < img.c; ++ci) {
    const float* src = img.plane(ci);
    for (std::size_t p = 0; p < img.plane_size(); ++p) {
      buf[p * img.c + ci] = quantize8(src[p]);
    }
  }
  rows.resize(img.h);
  for (int y = 0; y < img.h; ++y) {
    rows[y] = buf.data() + static_cast<std::size_t>(y) * img.w * img.c;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary PPM (P6) and PGM (P5), maxval 255.
inline Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") {
    throw FormatError("'" + path + "': expected P5/P6 magic, got '" + magic +
                      "'");
  }
  const int channels = (magic == "P6") ? 3 : 1;
  auto next_int = [&in, &path]() {
    // Skip whitespace and '#' comment lines between header fields.
    int ch = in.peek();
    while (ch == '#' || std::isspace(ch)) {
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else {
        in.get();
      }
      ch = in.peek();
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw FormatError("'" + path + "': bad header field");
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (w < 1 || h < 1) throw FormatError("'" + path + "': bad dimensions");
  if (maxval != 255) {
    throw FormatError("'" + path + "': only maxval 255 supported, got " +
                      std::to_string(maxval));
  }
  in.get();  // single whitespace byte before raster
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw FormatError("'" + path + "': truncated raster data");
  }
  return planar_from_interleaved(buf, channels, static_cast<int>(h),
                                 static_cast<int>(w));
}

inline void write_pnm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (img.is_gray() ? "P5" : "P6") << "\n"
      << img.w << " " << img.h << "\n255\n";
  std::vector<std::uint8_t> buf(img.data.size());
  for (int ci = 0; ci < img.c; ++ci) {
    const float* src = img.plane(ci);
    for (std::size_t p = 0; p < img.plane_size(); ++p) {
      buf[p * img.c + ci] = quantize8(src[p]);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace detail

inline bool is_image_path(const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

inline Image read_image(const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".ppm" || ext == ".pgm") return detail::read_pnm(path);
  throw InputError("unsupported image extension on '" + path +
                   "' (use .png, .ppm, or .pgm)");
}

inline void write_image(const std::string& path, const Image& img) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::write_png(path, img);
  if (ext == ".ppm" || ext == ".pgm") return detail::write_pnm(path, img);
  throw InputError("unsupported image extension on '" + path +
                   "' (use .png, .ppm, or .pgm)");
}

}  // namespace rdn
