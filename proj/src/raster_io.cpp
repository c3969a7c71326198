#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "tomdistill/formats.hpp"

namespace tomdistill {

namespace {

std::vector<std::uint8_t> encode_png(const cv::Mat& mat,
                                     const fs::path& where) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", mat, buf)) {
    throw IoError("png encode failed for " + where.string());
  }
  return buf;
}

cv::Mat decode_unchanged(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  cv::Mat img = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
  if (img.empty()) throw FormatError(path.string() + ": not a readable image");
  return img;
}

}  // namespace

ScalarMap read_png16_depth(const fs::path& path) {
  const cv::Mat img = decode_unchanged(path);
  if (img.depth() != CV_16U || img.channels() != 1) {
    throw FormatError(path.string() +
                      ": expected a 16-bit single-channel PNG");
  }
  const std::size_t n = static_cast<std::size_t>(img.cols) * img.rows;
  std::vector<double> values(n);
  std::vector<std::uint8_t> valid(n);
  for (int y = 0; y < img.rows; ++y) {
    const auto* row = img.ptr<std::uint16_t>(y);
    for (int x = 0; x < img.cols; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.cols + x;
      values[i] = row[x];
      valid[i] = row[x] != 0 ? 1 : 0;
    }
  }
  return ScalarMap(img.cols, img.rows, MapSpace::kDepthMm, std::move(values),
                   std::move(valid));
}

void write_png16_depth(const ScalarMap& depth, const fs::path& path) {
  if (depth.space() != MapSpace::kDepthMm) {
    throw SpaceMismatchError("write_png16_depth: map is " +
                             std::string(to_string(depth.space())));
  }
  cv::Mat img(depth.height(), depth.width(), CV_16UC1);
  for (int y = 0; y < depth.height(); ++y) {
    auto* row = img.ptr<std::uint16_t>(y);
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid_at(x, y)) {
        row[x] = 0;
        continue;
      }
      const double mm = std::round(depth.at(x, y));
      if (mm < 1.0 || mm > 65535.0) {
        throw DomainError("write_png16_depth: depth " +
                          std::to_string(depth.at(x, y)) +
                          " mm does not fit a 16-bit container");
      }
      row[x] = static_cast<std::uint16_t>(mm);
    }
  }
  write_file_atomic(path, encode_png(img, path));
}

RgbImage read_rgb(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
  if (bgr.empty()) throw FormatError(path.string() + ": not a readable image");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(rgb.total()) * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(data.data() + static_cast<std::size_t>(y) * rgb.cols * 3,
                rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
  }
  return RgbImage(rgb.cols, rgb.rows, std::move(data));
}

std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image) {
  cv::Mat rgb(image.height(), image.width(), CV_8UC3,
              const_cast<std::uint8_t*>(image.data().data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return encode_png(bgr, "<rgb>");
}

void write_rgb_png(const RgbImage& image, const fs::path& path) {
  write_file_atomic(path, encode_rgb_png(image));
}

void write_mask_png(const TomMask& mask, const fs::path& path) {
  cv::Mat img(mask.height(), mask.width(), CV_8UC1,
              const_cast<std::uint8_t*>(mask.labels().data()));
  write_file_atomic(path, encode_png(img, path));
}

// OpenCV expands palette images to BGR, which loses the class ids, so class
// rasters go through libpng directly.
ClassRaster read_class_raster(const fs::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(
      std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: out of memory");
  }
  ClassRaster raster;
  std::string failure;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buf;
  // No objects with destructors may be created below until libpng is done.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
    failure = "expected a grayscale or palette class raster";
  } else if (depth > 8) {
    failure = "class raster deeper than 8 bits";
  }
  if (!failure.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": " + failure);
  }
  if (depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  buf.resize(static_cast<std::size_t>(raster.width) * raster.height);
  rows.resize(raster.height);
  for (int y = 0; y < raster.height; ++y) {
    rows[y] = buf.data() + static_cast<std::size_t>(y) * raster.width;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  raster.ids.assign(buf.begin(), buf.end());
  return raster;
}

void write_class_raster(const ClassRaster& raster, const fs::path& path) {
  if (raster.ids.size() !=
      static_cast<std::size_t>(raster.width) * raster.height) {
    throw DimensionError("write_class_raster: id count does not match w*h");
  }
  cv::Mat img(raster.height, raster.width, CV_8UC1);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const int id = raster.ids[static_cast<std::size_t>(y) * raster.width + x];
      if (id < 0 || id > 255) {
        throw DomainError("write_class_raster: id out of 8-bit range");
      }
      img.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(id);
    }
  }
  write_file_atomic(path, encode_png(img, path));
}

}  // namespace tomdistill
