#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tomdistill/errors.hpp"

namespace tomdistill {

/// Unit/semantics of the values stored in a ScalarMap.
enum class MapSpace {
  kDepthMm,
  kDisparityPx,
  kAffineInverseDepth,
};

std::string_view to_string(MapSpace space);
/// Accepts "depth_mm", "disparity_px", "affine_inverse_depth".
MapSpace parse_map_space(std::string_view token);

struct Extent {
  int width = 0;
  int height = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const Extent&) const = default;
};

struct InpaintColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const InpaintColor&) const = default;
};

/// 8-bit RGB raster, row-major, interleaved.
class RgbImage {
 public:
  RgbImage(int width, int height, std::vector<std::uint8_t> data);
  static RgbImage filled(int width, int height, InpaintColor color);

  int width() const { return extent_.width; }
  int height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  std::span<const std::uint8_t> data() const { return data_; }

  InpaintColor at(int x, int y) const;

  bool operator==(const RgbImage&) const = default;

 private:
  Extent extent_;
  std::vector<std::uint8_t> data_;
};

/// Binary transparent-or-mirror label raster: 1 = ToM surface, 0 = other.
class TomMask {
 public:
  TomMask(int width, int height, std::vector<std::uint8_t> labels);
  static TomMask filled(int width, int height, std::uint8_t label);

  int width() const { return extent_.width; }
  int height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  std::span<const std::uint8_t> labels() const { return labels_; }

  bool at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * extent_.width + x] != 0;
  }
  std::size_t count() const;

  bool operator==(const TomMask&) const = default;

 private:
  Extent extent_;
  std::vector<std::uint8_t> labels_;
};

/// Per-pixel scalar field with an explicit validity plane and unit tag.
///
/// Values are held in double precision; containers on disk are float32, so
/// anything read from a file round-trips exactly. Invalid pixels keep
/// whatever value they carried and are ignored by every consumer.
class ScalarMap {
 public:
  ScalarMap(int width, int height, MapSpace space, std::vector<double> values,
            std::vector<std::uint8_t> valid);
  /// All pixels valid.
  ScalarMap(int width, int height, MapSpace space, std::vector<double> values);
  static ScalarMap filled(int width, int height, MapSpace space, double value);

  int width() const { return extent_.width; }
  int height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  MapSpace space() const { return space_; }

  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> valid() const { return valid_; }

  double value(std::size_t i) const { return values_[i]; }
  bool is_valid(std::size_t i) const { return valid_[i] != 0; }
  double at(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * extent_.width + x];
  }
  bool valid_at(int x, int y) const {
    return valid_[static_cast<std::size_t>(y) * extent_.width + x] != 0;
  }
  std::size_t valid_count() const;

  /// Same pixels, different unit tag. Re-checks the space invariants.
  ScalarMap with_space(MapSpace space) const;

  bool operator==(const ScalarMap&) const = default;

 private:
  Extent extent_;
  MapSpace space_;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// Rectified rig reduced to what triangulation needs.
class StereoCalibration {
 public:
  StereoCalibration(double focal_px, double baseline_mm);

  double focal() const { return focal_; }
  double baseline() const { return baseline_; }

  bool operator==(const StereoCalibration&) const = default;

 private:
  double focal_;
  double baseline_;
};

/// Scale/shift pair mapping a prediction onto a target: scale * x + shift.
/// A degenerate zero scale is representable.
struct AffineAlignment {
  double scale = 1.0;
  double shift = 0.0;

  bool operator==(const AffineAlignment&) const = default;
};

void require_same_extent(Extent a, Extent b, std::string_view what);

/// disparity = focal * baseline / depth on valid pixels.
ScalarMap depth_to_disparity(const ScalarMap& depth,
                             const StereoCalibration& calib);
/// depth = focal * baseline / disparity; zero disparity becomes invalid.
ScalarMap disparity_to_depth(const ScalarMap& disparity,
                             const StereoCalibration& calib);

/// Downsamples by 4 in each direction (output = floor(dims / 4)).
///
/// RGB is box-averaged over each 4x4 block. Masks and scalar maps take the
/// nearest sample to the block center, i.e. source (4x + 2, 4y + 2), so no
/// label or depth is blended across a ToM boundary. Disparities are divided
/// by 4 to stay consistent with the new pixel grid.
RgbImage resize_quarter(const RgbImage& image);
TomMask resize_quarter(const TomMask& mask);
ScalarMap resize_quarter(const ScalarMap& map);

}  // namespace tomdistill
