#include "tomdistill/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tomdistill {

namespace {

void require_positive_extent(int width, int height, const char* what) {
  if (width <= 0 || height <= 0) {
    std::ostringstream msg;
    msg << what << ": extent must be positive, got " << width << "x"
        << height;
    throw DimensionError(msg.str());
  }
}

void require_quarterable(Extent e) {
  if (e.width < 4 || e.height < 4) {
    std::ostringstream msg;
    msg << "resize_quarter: input " << e.width << "x" << e.height
        << " is smaller than 4x4";
    throw DimensionError(msg.str());
  }
}

constexpr int kQuarter = 4;
constexpr int kCenterOffset = 2;

}  // namespace

std::string_view to_string(MapSpace space) {
  switch (space) {
    case MapSpace::kDepthMm:
      return "depth_mm";
    case MapSpace::kDisparityPx:
      return "disparity_px";
    case MapSpace::kAffineInverseDepth:
      return "affine_inverse_depth";
  }
  return "unknown";
}

MapSpace parse_map_space(std::string_view token) {
  if (token == "depth_mm") return MapSpace::kDepthMm;
  if (token == "disparity_px") return MapSpace::kDisparityPx;
  if (token == "affine_inverse_depth") return MapSpace::kAffineInverseDepth;
  throw FormatError("unknown map space '" + std::string(token) + "'");
}

void require_same_extent(Extent a, Extent b, std::string_view what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": extent mismatch " << a.width << "x" << a.height
        << " vs " << b.width << "x" << b.height;
    throw DimensionError(msg.str());
  }
}

// ---------------------------------------------------------------- RgbImage

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> data)
    : extent_{width, height}, data_(std::move(data)) {
  require_positive_extent(width, height, "RgbImage");
  if (data_.size() != extent_.pixels() * 3) {
    throw DimensionError("RgbImage: data length does not match 3*w*h");
  }
}

RgbImage RgbImage::filled(int width, int height, InpaintColor color) {
  require_positive_extent(width, height, "RgbImage");
  std::vector<std::uint8_t> data(Extent{width, height}.pixels() * 3);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = color.r;
    data[i + 1] = color.g;
    data[i + 2] = color.b;
  }
  return RgbImage(width, height, std::move(data));
}

InpaintColor RgbImage::at(int x, int y) const {
  const std::size_t i =
      (static_cast<std::size_t>(y) * extent_.width + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

// ----------------------------------------------------------------- TomMask

TomMask::TomMask(int width, int height, std::vector<std::uint8_t> labels)
    : extent_{width, height}, labels_(std::move(labels)) {
  require_positive_extent(width, height, "TomMask");
  if (labels_.size() != extent_.pixels()) {
    throw DimensionError("TomMask: label count does not match w*h");
  }
  if (std::any_of(labels_.begin(), labels_.end(),
                  [](std::uint8_t v) { return v > 1; })) {
    throw DomainError("TomMask: labels must be 0 or 1");
  }
}

TomMask TomMask::filled(int width, int height, std::uint8_t label) {
  require_positive_extent(width, height, "TomMask");
  return TomMask(width, height,
                 std::vector<std::uint8_t>(Extent{width, height}.pixels(),
                                           label));
}

std::size_t TomMask::count() const {
  return static_cast<std::size_t>(
      std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

// --------------------------------------------------------------- ScalarMap

ScalarMap::ScalarMap(int width, int height, MapSpace space,
                     std::vector<double> values,
                     std::vector<std::uint8_t> valid)
    : extent_{width, height},
      space_(space),
      values_(std::move(values)),
      valid_(std::move(valid)) {
  require_positive_extent(width, height, "ScalarMap");
  if (values_.size() != extent_.pixels() || valid_.size() != extent_.pixels()) {
    throw DimensionError("ScalarMap: plane sizes do not match w*h");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (valid_[i] > 1) {
      throw DomainError("ScalarMap: validity flags must be 0 or 1");
    }
    if (!valid_[i]) continue;
    const double v = values_[i];
    if (!std::isfinite(v)) {
      throw DomainError("ScalarMap: non-finite value on a valid pixel");
    }
    if (space_ == MapSpace::kDepthMm && v <= 0.0) {
      throw DomainError("ScalarMap: depth_mm must be > 0 on valid pixels");
    }
    if (space_ == MapSpace::kDisparityPx && v < 0.0) {
      throw DomainError(
          "ScalarMap: disparity_px must be >= 0 on valid pixels");
    }
  }
}

ScalarMap::ScalarMap(int width, int height, MapSpace space,
                     std::vector<double> values)
    : ScalarMap(width, height, space, values,
                std::vector<std::uint8_t>(values.size(), 1)) {}

ScalarMap ScalarMap::filled(int width, int height, MapSpace space,
                            double value) {
  require_positive_extent(width, height, "ScalarMap");
  return ScalarMap(width, height, space,
                   std::vector<double>(Extent{width, height}.pixels(), value));
}

std::size_t ScalarMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

ScalarMap ScalarMap::with_space(MapSpace space) const {
  return ScalarMap(extent_.width, extent_.height, space, values_, valid_);
}

// ------------------------------------------------------ StereoCalibration

StereoCalibration::StereoCalibration(double focal_px, double baseline_mm)
    : focal_(focal_px), baseline_(baseline_mm) {
  if (!(focal_ > 0.0) || !(baseline_ > 0.0) || !std::isfinite(focal_) ||
      !std::isfinite(baseline_)) {
    throw DomainError("StereoCalibration: focal and baseline must be > 0");
  }
}

// ----------------------------------------------------------- triangulation

ScalarMap depth_to_disparity(const ScalarMap& depth,
                             const StereoCalibration& calib) {
  if (depth.space() != MapSpace::kDepthMm) {
    throw SpaceMismatchError("depth_to_disparity: input space is " +
                             std::string(to_string(depth.space())));
  }
  const double fb = calib.focal() * calib.baseline();
  std::vector<double> out(depth.values().begin(), depth.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!depth.is_valid(i)) continue;
    if (out[i] <= 0.0) {
      throw DomainError("depth_to_disparity: non-positive depth");
    }
    out[i] = fb / out[i];
  }
  return ScalarMap(depth.width(), depth.height(), MapSpace::kDisparityPx,
                   std::move(out),
                   {depth.valid().begin(), depth.valid().end()});
}

ScalarMap disparity_to_depth(const ScalarMap& disparity,
                             const StereoCalibration& calib) {
  if (disparity.space() != MapSpace::kDisparityPx) {
    throw SpaceMismatchError("disparity_to_depth: input space is " +
                             std::string(to_string(disparity.space())));
  }
  const double fb = calib.focal() * calib.baseline();
  std::vector<double> out(disparity.values().begin(),
                          disparity.values().end());
  std::vector<std::uint8_t> valid(disparity.valid().begin(),
                                  disparity.valid().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!valid[i]) continue;
    if (out[i] > 0.0) {
      out[i] = fb / out[i];
    } else {
      valid[i] = 0;  // point at infinity
    }
  }
  return ScalarMap(disparity.width(), disparity.height(), MapSpace::kDepthMm,
                   std::move(out), std::move(valid));
}

// ---------------------------------------------------------- resize_quarter

RgbImage resize_quarter(const RgbImage& image) {
  require_quarterable(image.extent());
  const int w = image.width() / kQuarter;
  const int h = image.height() / kQuarter;
  const auto src = image.data();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        unsigned sum = 0;
        for (int dy = 0; dy < kQuarter; ++dy) {
          for (int dx = 0; dx < kQuarter; ++dx) {
            const std::size_t sx = static_cast<std::size_t>(x) * kQuarter + dx;
            const std::size_t sy = static_cast<std::size_t>(y) * kQuarter + dy;
            sum += src[(sy * image.width() + sx) * 3 + c];
          }
        }
        // round half up
        out[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>((sum + 8) / 16);
      }
    }
  }
  return RgbImage(w, h, std::move(out));
}

TomMask resize_quarter(const TomMask& mask) {
  require_quarterable(mask.extent());
  const int w = mask.width() / kQuarter;
  const int h = mask.height() / kQuarter;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] =
          mask.at(x * kQuarter + kCenterOffset, y * kQuarter + kCenterOffset)
              ? 1
              : 0;
    }
  }
  return TomMask(w, h, std::move(out));
}

ScalarMap resize_quarter(const ScalarMap& map) {
  require_quarterable(map.extent());
  const int w = map.width() / kQuarter;
  const int h = map.height() / kQuarter;
  const double factor =
      map.space() == MapSpace::kDisparityPx ? 1.0 / kQuarter : 1.0;
  std::vector<double> values(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> valid(values.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = x * kQuarter + kCenterOffset;
      const int sy = y * kQuarter + kCenterOffset;
      const std::size_t o = static_cast<std::size_t>(y) * w + x;
      valid[o] = map.valid_at(sx, sy) ? 1 : 0;
      values[o] = valid[o] ? map.at(sx, sy) * factor : map.at(sx, sy);
    }
  }
  return ScalarMap(w, h, map.space(), std::move(values), std::move(valid));
}

}  // namespace tomdistill
