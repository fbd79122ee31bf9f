#include "hma/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#ifdef HMA_HAS_PNG
#include <png.h>
#endif

#include "hma/errors.hpp"

namespace hma {

namespace {

// Reads the next PGM header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  return token;
}

Eigen::MatrixXd read_pgm(std::ifstream& in, const std::filesystem::path& path) {
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") {
    throw ParseError(path.string() + ": not a PGM file");
  }
  int cols = 0, rows = 0, maxval = 0;
  try {
    cols = std::stoi(next_token(in));
    rows = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  if (cols < 1 || rows < 1 || maxval < 1 || maxval > 65535) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  Eigen::MatrixXd image(rows, cols);
  if (magic == "P2") {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const std::string value = next_token(in);
        if (value.empty()) throw ParseError(path.string() + ": truncated PGM data");
        image(i, j) = std::stod(value);
      }
    }
    return image;
  }
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(rows) * cols * bytes_per_sample);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
    throw ParseError(path.string() + ": truncated PGM data");
  }
  std::size_t offset = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (bytes_per_sample == 2) {
        image(i, j) = buffer[offset] * 256.0 + buffer[offset + 1];  // big-endian per netpbm
        offset += 2;
      } else {
        image(i, j) = buffer[offset++];
      }
    }
  }
  return image;
}

#ifdef HMA_HAS_PNG
Eigen::MatrixXd read_png_file(const std::filesystem::path& path) {
  std::FILE* file = std::fopen(path.string().c_str(), "rb");
  if (!file) throw MissingMedia("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(file);
    throw ParseError(path.string() + ": libpng initialization failed");
  }
  std::vector<png_bytep> row_pointers;
  std::vector<unsigned char> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(file);
    throw ParseError(path.string() + ": not a valid PNG file");
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const png_uint_32 cols = png_get_image_width(png, info);
  const png_uint_32 rows = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);  // Rec.601 luma
  }
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * rows);
  row_pointers.resize(rows);
  for (png_uint_32 i = 0; i < rows; ++i) row_pointers[i] = pixels.data() + i * stride;
  png_read_image(png, row_pointers.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(file);

  Eigen::MatrixXd image(rows, cols);
  for (png_uint_32 i = 0; i < rows; ++i) {
    for (png_uint_32 j = 0; j < cols; ++j) {
      image(i, j) = pixels[i * stride + j];
    }
  }
  return image;
}
#endif

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Eigen::MatrixXd read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingMedia("cannot open image " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.seekg(0);
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) {
    return read_pgm(in, path);
  }
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
#ifdef HMA_HAS_PNG
    in.close();
    return read_png_file(path);
#else
    throw DataError("PNG support was not built in; use PGM for " + path.string());
#endif
  }
  throw ParseError(path.string() + ": unsupported image format (expected PGM or PNG)");
}

Eigen::MatrixXd read_depth_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingMedia("cannot open depth map " + path.string());
  return read_pgm(in, path);
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (int i = 0; i < image.rows(); ++i) {
    for (int j = 0; j < image.cols(); ++j) {
      const unsigned char byte = quantize(image(i, j));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!out) throw DataError("failed writing image " + path.string());
}

void write_png(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
#ifdef HMA_HAS_PNG
  std::FILE* file = std::fopen(path.string().c_str(), "wb");
  if (!file) throw DataError("cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw DataError("libpng initialization failed");
  }
  std::vector<unsigned char> row(image.cols());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw DataError("failed writing image " + path.string());
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()),
               static_cast<png_uint_32>(image.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int i = 0; i < image.rows(); ++i) {
    for (int j = 0; j < image.cols(); ++j) row[j] = quantize(image(i, j));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(file);
#else
  (void)path;
  (void)image;
  throw DataError("PNG support was not built in; write PGM instead");
#endif
}

void write_image(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  const std::string ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") {
    write_png(path, image);
  } else {
    write_pgm(path, image);
  }
}

}  // namespace hma
