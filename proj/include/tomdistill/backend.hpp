#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tomdistill/core.hpp"

namespace tomdistill {

enum class BackendKind { kPrecomputedDir, kExternalExec };

/// An opaque depth or disparity predictor.
///
/// `precomputed_dir` serves `<dir>/<key>.pfm`. `external_exec` runs a shell
/// command template through /bin/sh with `{input}` (mono) or `{left}` and
/// `{right}` (stereo) replaced by PNG paths and `{output}` by the PFM path
/// the command must write. Each invocation gets a private temp directory.
class BackendSpec {
 public:
  static BackendSpec precomputed_dir(std::filesystem::path dir,
                                     MapSpace output_space);
  static BackendSpec external_exec(std::string command_template,
                                   MapSpace output_space);
  /// "dir:<path>" or "exec:<command template>".
  static BackendSpec parse(std::string_view text, MapSpace output_space);

  BackendKind kind() const { return kind_; }
  const std::string& location() const { return location_; }
  MapSpace output_space() const { return space_; }
  std::string describe() const;

 private:
  BackendSpec(BackendKind kind, std::string location, MapSpace space)
      : kind_(kind), location_(std::move(location)), space_(space) {}

  BackendKind kind_;
  std::string location_;
  MapSpace space_;
};

/// "<sample_id>_c<color_index>": prediction on the i-th in-painted image.
std::string color_key(std::string_view sample_id, std::size_t color_index);
/// "<sample_id>_base": prediction on the untouched input.
std::string base_key(std::string_view sample_id);

ScalarMap infer_mono(const BackendSpec& spec, const RgbImage& image,
                     std::string_view key);

/// Output is always tagged disparity_px; the backend must declare it.
ScalarMap infer_stereo(const BackendSpec& spec, const RgbImage& left,
                       const RgbImage& right, std::string_view key);

}  // namespace tomdistill
