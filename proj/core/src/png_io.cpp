#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "spal/raster.hpp"

namespace spal {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw FormatError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct DecodedGray {
  Extent extent;
  int bit_depth = 0;
  std::vector<std::uint16_t> values;
};

DecodedGray decode_gray(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  DecodedGray out;
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": " + (message.empty() ? "malformed PNG" : message));
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": label map must be a single-channel PNG");
  }
  if (bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  png_read_update_info(png, info);
  out.extent = {png_get_image_width(png, info), png_get_image_height(png, info)};
  out.bit_depth = bit_depth;
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * out.extent.height);
  rows.resize(out.extent.height);
  for (std::uint32_t y = 0; y < out.extent.height; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.values.resize(out.extent.area());
  for (std::uint32_t y = 0; y < out.extent.height; ++y) {
    const std::uint8_t* row = raw.data() + y * stride;
    for (std::uint32_t x = 0; x < out.extent.width; ++x) {
      out.values[std::size_t{y} * out.extent.width + x] =
          bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]) : row[x];
    }
  }
  return out;
}

void encode(const std::filesystem::path* path, std::vector<std::uint8_t>* sink, Extent extent, int color_type,
            int bit_depth, std::span<const std::uint8_t> bytes, std::size_t stride) {
  FilePtr file;
  if (path) {
    if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
    file = FilePtr(std::fopen(path->c_str(), "wb"));
    if (!file) throw Error("cannot write " + path->string());
  }
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encode failed: " + message);
  }
  if (file) {
    png_init_io(png, file.get());
  } else {
    png_set_write_fn(
        png, sink,
        [](png_structp p, png_bytep data, png_size_t len) {
          auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
          out->insert(out->end(), data, data + len);
        },
        [](png_structp) {});
  }
  png_set_IHDR(png, info, extent.width, extent.height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < extent.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage load_rgb_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(path.string() + ": " + image.message);
  }
  return RgbImage({image.width, image.height}, std::move(rgb));
}

void save_rgb_png(const RgbImage& image, const std::filesystem::path& path) {
  encode(&path, nullptr, image.extent(), PNG_COLOR_TYPE_RGB, 8, image.data(), 3 * std::size_t{image.width()});
}

void save_rgba_png(Extent extent, std::span<const std::uint8_t> rgba, const std::filesystem::path& path) {
  encode(&path, nullptr, extent, PNG_COLOR_TYPE_RGBA, 8, rgba, 4 * std::size_t{extent.width});
}

std::vector<std::uint8_t> encode_rgba_png(Extent extent, std::span<const std::uint8_t> rgba) {
  std::vector<std::uint8_t> out;
  encode(nullptr, &out, extent, PNG_COLOR_TYPE_RGBA, 8, rgba, 4 * std::size_t{extent.width});
  return out;
}

LabelMap load_label_map(const std::filesystem::path& path, ClassId num_classes, ClassId ignore_id) {
  DecodedGray gray = decode_gray(path);
  try {
    return LabelMap(gray.extent, std::move(gray.values), num_classes, ignore_id);
  } catch (const InvariantError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_label_map(const LabelMap& labels, const std::filesystem::path& path) {
  const bool wide = labels.num_classes() > 255 || labels.ignore_id() > 255;
  const std::size_t bpp = wide ? 2 : 1;
  std::vector<std::uint8_t> bytes(labels.size() * bpp);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (wide) {
      bytes[2 * i] = static_cast<std::uint8_t>(labels[i] >> 8);
      bytes[2 * i + 1] = static_cast<std::uint8_t>(labels[i] & 0xFF);
    } else {
      bytes[i] = static_cast<std::uint8_t>(labels[i]);
    }
  }
  encode(&path, nullptr, labels.extent(), PNG_COLOR_TYPE_GRAY, wide ? 16 : 8, bytes, bpp * labels.width());
}

}  // namespace spal
