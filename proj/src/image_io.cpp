#include "ssflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include "ssflow/error.hpp"

namespace ssflow {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors via longjmp; keep everything with a destructor
// outside the frames libpng unwinds through.
bool read_png_impl(std::FILE* fp, RawPng& out, std::vector<png_bytep>& rows,
                   std::vector<png_byte>& buffer) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_swap(png);  // host little-endian samples
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_png_impl(std::FILE* fp, const RawPng& in, std::vector<png_bytep>& rows,
                    std::vector<png_byte>& buffer) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  int color_type = PNG_COLOR_TYPE_GRAY;
  if (in.channels == 2) color_type = PNG_COLOR_TYPE_GRAY_ALPHA;
  if (in.channels == 3) color_type = PNG_COLOR_TYPE_RGB;
  if (in.channels == 4) color_type = PNG_COLOR_TYPE_RGB_ALPHA;
  png_init_io(png, fp);
  png_set_IHDR(png, info, in.width, in.height, in.bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (in.bit_depth == 16) png_set_swap(png);
  const std::size_t bytes = in.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = bytes * in.width * in.channels;
  buffer.resize(rowbytes * in.height);
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(in.samples[i] & 0xFF);
      buffer[2 * i + 1] = static_cast<png_byte>(in.samples[i] >> 8);
    } else {
      buffer[i] = static_cast<png_byte>(in.samples[i]);
    }
  }
  rows.resize(in.height);
  for (int y = 0; y < in.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

ImageGrid load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw FormatError(path + ": only binary P5/P6 supported");
  auto next_int = [&]() {
    int value = 0;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      break;
    }
    if (!(in >> value)) throw FormatError(path + ": malformed PNM header");
    return value;
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  in.get();  // single whitespace before raster
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError(path + ": invalid PNM dimensions");
  const int channels = magic == "P6" ? 3 : 1;
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raster(static_cast<std::size_t>(width) * height * channels * bytes);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    throw FormatError(path + ": truncated PNM raster");
  ImageGrid img(height, width, channels);
  auto data = img.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int v = bytes == 2 ? (raster[2 * i] << 8) | raster[2 * i + 1] : raster[i];
    data[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

RawPng read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("cannot open " + path);
  png_byte header[8] = {};
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw FormatError(path + ": not a PNG file");
  std::rewind(fp.get());
  RawPng out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (!read_png_impl(fp.get(), out, rows, buffer)) throw FormatError(path + ": corrupt PNG");
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = out.bit_depth == 16
                         ? static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8))
                         : buffer[i];
  }
  return out;
}

void write_png(const std::string& path, const RawPng& png) {
  require(png.bit_depth == 8 || png.bit_depth == 16, "write_png: bit depth must be 8 or 16");
  require(png.channels >= 1 && png.channels <= 4, "write_png: 1-4 channels");
  require(png.samples.size() ==
              static_cast<std::size_t>(png.width) * png.height * png.channels,
          "write_png: sample count mismatch");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("cannot create " + path);
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (!write_png_impl(fp.get(), png, rows, buffer)) throw FormatError(path + ": PNG write failed");
}

ImageGrid load_image(const std::string& path) {
  if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm"))
    return load_pnm(path);
  const RawPng png = read_png(path);
  if (png.bit_depth != 8)
    throw FormatError(path + ": expected an 8-bit image, got " + std::to_string(png.bit_depth) +
                      "-bit");
  // alpha is dropped
  const int channels = png.channels >= 3 ? 3 : 1;
  ImageGrid img(png.height, png.width, channels);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x)
      for (int c = 0; c < channels; ++c) img.at(y, x, c) = png.at(y, x, c) / 255.0;
  return img;
}

ImageGrid to_grayscale(const ImageGrid& img) {
  if (img.channels() == 1) return img;
  require(img.channels() == 3, "to_grayscale: expected 1 or 3 channels");
  ImageGrid out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
  return out;
}

void save_png8(const std::string& path, const ImageGrid& img) {
  require(img.channels() == 1 || img.channels() == 3, "save_png8: expected 1 or 3 channels");
  RawPng png{img.width(), img.height(), img.channels(), 8, {}};
  png.samples.reserve(img.data().size());
  for (double v : img.data()) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    png.samples.push_back(static_cast<std::uint16_t>(std::lround(c * 255.0)));
  }
  write_png(path, png);
}

void save_mask_png(const std::string& path, const Mask& mask) {
  RawPng png{mask.width(), mask.height(), 1, 8, {}};
  png.samples.reserve(mask.pixel_count());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) png.samples.push_back(mask.at(y, x) ? 255 : 0);
  write_png(path, png);
}

Mask load_mask_png(const std::string& path) {
  const RawPng png = read_png(path);
  if (png.channels != 1) throw FormatError(path + ": mask PNG must be single-channel");
  Mask mask(png.height, png.width, false);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x) mask.set(y, x, png.at(y, x, 0) != 0);
  return mask;
}

}  // namespace ssflow
