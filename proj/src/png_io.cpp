// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>

#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"

namespace lfg::png {

namespace {

struct ReadCursor {
  const std::string* bytes;
  std::size_t pos;
};

void read_fn(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes->size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cur->bytes->data() + cur->pos, len);
  cur->pos += len;
}

void write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush_fn(png_structp) {}

// libpng is C; errors unwind with longjmp and are rethrown on the C++ side.
thread_local char g_last_error[256];

[[noreturn]] void error_fn(png_structp png, png_const_charp msg) {
  std::strncpy(g_last_error, msg, sizeof(g_last_error) - 1);
  g_last_error[sizeof(g_last_error) - 1] = '\0';
  png_longjmp(png, 1);
}

void warning_fn(png_structp, png_const_charp) {}

}  // namespace

std::string encode(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height)) {
    throw Error(ErrorCode::kInvalidArgument, "png encode: pixel buffer does not match dimensions");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_fn, warning_fn);
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, std::string("png encode: ") + g_last_error);
  }
  {
    png_set_write_fn(png, &out, write_fn, flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width));
    }
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

GrayImage decode(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw Error(ErrorCode::kCorrupt, "not a PNG file: " + name, name);
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_fn, warning_fn);
  png_infop info = png_create_info_struct(png);
  ReadCursor cur{&bytes, 0};
  GrayImage image;
  bool bad_layout = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kCorrupt, std::string(g_last_error) + " (" + name + ")", name);
  }
  {
    png_set_read_fn(png, &cur, read_fn);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(image.width)) {
      bad_layout = true;
    } else {
      image.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
      for (int y = 0; y < image.height; ++y) {
        png_read_row(png, image.pixels.data() + static_cast<std::size_t>(y) * image.width, nullptr);
      }
      png_read_end(png, nullptr);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bad_layout) throw Error(ErrorCode::kCorrupt, "unsupported PNG layout: " + name, name);
  return image;
}

GrayImage read(const std::filesystem::path& path) { return decode(read_file(path), path.filename().string()); }

void write(const std::filesystem::path& path, const GrayImage& image) { write_file_atomic(path, encode(image)); }

}  // namespace lfg::png
