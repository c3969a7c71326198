#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "tomdistill/formats.hpp"

namespace tomdistill {

// ------------------------------------------------------ ClassCollapseRule

ClassCollapseRule::ClassCollapseRule(std::set<int> tom_classes,
                                     std::set<int> other_classes)
    : tom_(std::move(tom_classes)), other_(std::move(other_classes)) {
  for (int id : tom_) {
    if (other_.count(id)) {
      throw ClassMapError("class id " + std::to_string(id) +
                          " is declared both ToM and Other");
    }
  }
}

ClassCollapseRule ClassCollapseRule::booster() { return {{2, 3}, {0, 1}}; }

ClassCollapseRule ClassCollapseRule::trans10k() {
  return {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {0}};
}

ClassCollapseRule ClassCollapseRule::msd() { return {{1, 255}, {0}}; }

ClassCollapseRule ClassCollapseRule::binary() { return {{1}, {0}}; }

ClassCollapseRule ClassCollapseRule::preset(std::string_view name) {
  if (name == "booster") return booster();
  if (name == "trans10k") return trans10k();
  if (name == "msd") return msd();
  if (name == "binary") return binary();
  throw ClassMapError("unknown class map preset '" + std::string(name) + "'");
}

TomMask collapse_mask(const ClassRaster& raw, const ClassCollapseRule& rule) {
  if (raw.ids.size() != static_cast<std::size_t>(raw.width) * raw.height) {
    throw DimensionError("collapse_mask: id count does not match w*h");
  }
  std::vector<std::uint8_t> labels(raw.ids.size());
  for (std::size_t i = 0; i < raw.ids.size(); ++i) {
    const int id = raw.ids[i];
    if (rule.tom_classes().count(id)) {
      labels[i] = 1;
    } else if (rule.other_classes().count(id)) {
      labels[i] = 0;
    } else {
      throw ClassMapError("class id " + std::to_string(id) +
                          " is not covered by the class map");
    }
  }
  return TomMask(raw.width, raw.height, std::move(labels));
}

// --------------------------------------------------------------- manifest

std::string_view to_string(EvalResolution r) {
  return r == EvalResolution::kQuarter ? "quarter" : "full";
}

EvalResolution parse_eval_resolution(std::string_view token) {
  if (token == "full") return EvalResolution::kFull;
  if (token == "quarter") return EvalResolution::kQuarter;
  throw FormatError("unknown eval resolution '" + std::string(token) + "'");
}

std::optional<StereoCalibration> DatasetManifest::calibration_for(
    const SampleRecord& s) const {
  return s.calibration ? s.calibration : calibration;
}

namespace {

[[noreturn]] void fail(const fs::path& file, const std::string& where,
                       const std::string& what) {
  std::ostringstream msg;
  msg << file.string() << ": ";
  if (!where.empty()) msg << where << ": ";
  msg << what;
  throw ManifestError(msg.str());
}

std::string scalar(const YAML::Node& node, const fs::path& file,
                   const std::string& where, const char* key) {
  if (!node.IsScalar()) fail(file, where, std::string(key) + " must be a scalar");
  return node.as<std::string>();
}

StereoCalibration parse_calibration(const YAML::Node& node,
                                    const fs::path& file,
                                    const std::string& where) {
  if (!node.IsMap() || !node["focal"] || !node["baseline"]) {
    fail(file, where, "calibration needs 'focal' and 'baseline'");
  }
  try {
    return StereoCalibration(node["focal"].as<double>(),
                             node["baseline"].as<double>());
  } catch (const YAML::Exception& e) {
    fail(file, where, std::string("calibration: ") + e.what());
  } catch (const DomainError& e) {
    fail(file, where, e.what());
  }
}

std::set<int> parse_class_list(const YAML::Node& node, const fs::path& file,
                               const char* key) {
  if (!node || !node.IsSequence()) {
    fail(file, "class_map", std::string(key) + " must be a list of ids");
  }
  std::set<int> ids;
  for (const auto& item : node) {
    try {
      ids.insert(item.as<int>());
    } catch (const YAML::Exception&) {
      fail(file, "class_map", std::string(key) + " holds a non-integer id");
    }
  }
  return ids;
}

ClassCollapseRule parse_class_map(const YAML::Node& node,
                                  const fs::path& file) {
  try {
    if (node.IsScalar()) return ClassCollapseRule::preset(node.as<std::string>());
    if (node.IsMap()) {
      return ClassCollapseRule(parse_class_list(node["tom"], file, "tom"),
                               parse_class_list(node["other"], file, "other"));
    }
  } catch (const ClassMapError& e) {
    fail(file, "class_map", e.what());
  }
  fail(file, "class_map", "expected a preset name or {tom: [...], other: [...]}");
}

fs::path resolve(const fs::path& root, const YAML::Node& node,
                 const fs::path& file, const std::string& where,
                 const char* key) {
  const fs::path rel = scalar(node, file, where, key);
  if (rel.empty()) fail(file, where, std::string(key) + " is empty");
  if (rel.is_absolute()) {
    fail(file, where,
         std::string(key) + " must be relative to the manifest: " +
             rel.string());
  }
  const fs::path full = (root / rel).lexically_normal();
  if (!fs::exists(full)) {
    fail(file, where, std::string(key) + " does not exist: " + rel.string());
  }
  return full;
}

const std::unordered_set<std::string> kSampleKeys = {
    "id", "left", "right", "mask", "gt", "gt_space", "calibration"};
const std::unordered_set<std::string> kTopKeys = {
    "name", "samples", "class_map", "calibration", "eval_resolution"};

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw ManifestError(path.string() + ": manifest file not found");
  }
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    fail(path, "", std::string("parse error: ") + e.what());
  }
  if (!doc.IsMap()) fail(path, "", "top level must be a mapping");
  for (const auto& kv : doc) {
    const auto key = kv.first.as<std::string>();
    if (!kTopKeys.count(key)) fail(path, "", "unknown key '" + key + "'");
  }

  DatasetManifest m;
  m.source = fs::absolute(path).lexically_normal();
  const fs::path root = m.source.parent_path();
  if (doc["name"]) m.name = scalar(doc["name"], path, "", "name");
  if (doc["eval_resolution"]) {
    try {
      m.eval_resolution = parse_eval_resolution(
          scalar(doc["eval_resolution"], path, "", "eval_resolution"));
    } catch (const FormatError& e) {
      fail(path, "", e.what());
    }
  }
  if (doc["class_map"]) m.class_map = parse_class_map(doc["class_map"], path);
  if (doc["calibration"]) {
    m.calibration = parse_calibration(doc["calibration"], path, "calibration");
  }

  const YAML::Node samples = doc["samples"];
  if (!samples || !samples.IsSequence()) {
    fail(path, "", "'samples' must be a list");
  }
  if (samples.size() == 0) fail(path, "", "'samples' is empty");
  std::unordered_set<std::string> seen;
  std::size_t index = 0;
  for (const auto& node : samples) {
    std::string where = "sample #" + std::to_string(index++);
    if (!node.IsMap()) fail(path, where, "sample must be a mapping");
    if (!node["id"]) fail(path, where, "missing 'id'");
    SampleRecord s;
    s.id = scalar(node["id"], path, where, "id");
    if (s.id.empty()) fail(path, where, "empty id");
    if (s.id.find_first_of("/\\") != std::string::npos) {
      fail(path, where, "id '" + s.id + "' contains a path separator");
    }
    where = "sample '" + s.id + "'";
    if (!seen.insert(s.id).second) fail(path, where, "duplicate id");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!kSampleKeys.count(key)) fail(path, where, "unknown key '" + key + "'");
    }
    if (!node["left"]) fail(path, where, "missing 'left' image");
    s.left = resolve(root, node["left"], path, where, "left");
    if (node["right"]) s.right = resolve(root, node["right"], path, where, "right");
    if (node["mask"]) s.mask = resolve(root, node["mask"], path, where, "mask");
    if (node["gt"]) s.gt = resolve(root, node["gt"], path, where, "gt");
    if (node["gt_space"]) {
      const auto token = scalar(node["gt_space"], path, where, "gt_space");
      if (token == "depth_mm") {
        s.gt_space = MapSpace::kDepthMm;
      } else if (token == "disparity_px") {
        s.gt_space = MapSpace::kDisparityPx;
      } else {
        fail(path, where, "unknown gt_space '" + token + "'");
      }
    }
    if (node["calibration"]) {
      s.calibration = parse_calibration(node["calibration"], path, where);
    }
    m.samples.push_back(std::move(s));
  }
  return m;
}

TomMask load_sample_mask(const DatasetManifest& manifest,
                         const SampleRecord& sample) {
  if (!sample.mask) {
    throw ManifestError("sample '" + sample.id + "' has no mask");
  }
  return collapse_mask(read_class_raster(*sample.mask), manifest.class_map);
}

ScalarMap load_sample_gt(const SampleRecord& sample) {
  if (!sample.gt) throw ManifestError("sample '" + sample.id + "' has no gt");
  std::string ext = sample.gt->extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return read_pfm(*sample.gt, sample.gt_space);
  if (ext == ".png") {
    if (sample.gt_space != MapSpace::kDepthMm) {
      throw FormatError("sample '" + sample.id +
                        "': 16-bit PNG ground truth must be depth_mm");
    }
    return read_png16_depth(*sample.gt);
  }
  throw FormatError("sample '" + sample.id + "': unsupported gt format '" +
                    ext + "'");
}

}  // namespace tomdistill
