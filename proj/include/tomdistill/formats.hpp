#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tomdistill/core.hpp"

namespace tomdistill {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ files

std::vector<std::uint8_t> read_file_bytes(const fs::path& path);

/// Writes to a sibling temp file and renames over `path`, so readers never
/// observe a partially written file. Creates parent directories.
void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const fs::path& path, std::string_view text);

// -------------------------------------------------------------------- PFM

/// Decodes a single-channel ("Pf") portable float map.
///
/// Rows are stored bottom-up on disk and returned top-down. The sign of the
/// scale field selects endianness (negative = little-endian). Non-finite
/// samples, and samples outside the domain of `space` (depth <= 0,
/// disparity < 0), are marked invalid.
ScalarMap decode_pfm(std::span<const std::uint8_t> bytes, MapSpace space);
ScalarMap read_pfm(const fs::path& path, MapSpace space);

/// Little-endian "Pf" with scale -1; invalid pixels are written as +inf.
std::vector<std::uint8_t> encode_pfm(const ScalarMap& map);
void write_pfm(const ScalarMap& map, const fs::path& path);

// -------------------------------------------------------------------- PNG

/// 16-bit single-channel PNG holding depth in millimetres; 0 = invalid.
ScalarMap read_png16_depth(const fs::path& path);
/// Valid depths are rounded to the nearest millimetre and must fall in
/// [1, 65535] after rounding.
void write_png16_depth(const ScalarMap& depth, const fs::path& path);

/// Any 8-bit color or grayscale PNG/JPEG; returned as RGB.
RgbImage read_rgb(const fs::path& path);
std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image);
void write_rgb_png(const RgbImage& image, const fs::path& path);

/// Writes a binary mask as 8-bit grayscale with labels 0/1.
void write_mask_png(const TomMask& mask, const fs::path& path);

// ---------------------------------------------------------- class rasters

/// Integer class-id raster as decoded from an annotation file.
struct ClassRaster {
  int width = 0;
  int height = 0;
  std::vector<int> ids;
};

/// Reads an 8-bit (or lower) grayscale or palette PNG. Palette images yield
/// their palette indices, not the colors they map to.
ClassRaster read_class_raster(const fs::path& path);
void write_class_raster(const ClassRaster& raster, const fs::path& path);

/// Assigns each annotation class id to ToM or Other.
class ClassCollapseRule {
 public:
  ClassCollapseRule(std::set<int> tom_classes, std::set<int> other_classes);

  /// Classes 2-3 are ToM, 0-1 are Other.
  static ClassCollapseRule booster();
  /// Class 0 is Other, 1..11 are ToM.
  static ClassCollapseRule trans10k();
  /// Binary mirror masks; both 1 and 255 encode a mirror.
  static ClassCollapseRule msd();
  /// Plain {0, 1} masks.
  static ClassCollapseRule binary();
  /// "booster", "trans10k", "msd" or "binary".
  static ClassCollapseRule preset(std::string_view name);

  const std::set<int>& tom_classes() const { return tom_; }
  const std::set<int>& other_classes() const { return other_; }

  bool operator==(const ClassCollapseRule&) const = default;

 private:
  std::set<int> tom_;
  std::set<int> other_;
};

/// Throws ClassMapError naming the first class id the rule does not cover.
TomMask collapse_mask(const ClassRaster& raw, const ClassCollapseRule& rule);

// --------------------------------------------------------------- manifest

enum class EvalResolution { kFull, kQuarter };

std::string_view to_string(EvalResolution r);
EvalResolution parse_eval_resolution(std::string_view token);

struct SampleRecord {
  std::string id;
  fs::path left;  // resolved against the manifest directory
  std::optional<fs::path> right;
  std::optional<fs::path> mask;
  std::optional<fs::path> gt;
  MapSpace gt_space = MapSpace::kDisparityPx;
  std::optional<StereoCalibration> calibration;

  bool is_stereo() const { return right.has_value(); }
  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  fs::path source;  // manifest file the paths were resolved against
  std::string name;
  std::vector<SampleRecord> samples;
  ClassCollapseRule class_map = ClassCollapseRule::binary();
  std::optional<StereoCalibration> calibration;
  EvalResolution eval_resolution = EvalResolution::kFull;

  /// Per-sample calibration if present, otherwise the dataset-wide one.
  std::optional<StereoCalibration> calibration_for(const SampleRecord& s) const;
  bool operator==(const DatasetManifest&) const = default;
};

/// Parses and validates a YAML manifest (schema in docs/manifest.md).
/// Every referenced file must exist.
DatasetManifest load_manifest(const fs::path& path);

/// Reads a sample's mask file and collapses it with the manifest rule.
TomMask load_sample_mask(const DatasetManifest& manifest,
                         const SampleRecord& sample);
/// Reads a sample's GT (PFM or 16-bit PNG, by extension) in its gt_space.
ScalarMap load_sample_gt(const SampleRecord& sample);

}  // namespace tomdistill
