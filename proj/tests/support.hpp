#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tomdistill/core.hpp"
#include "tomdistill/formats.hpp"

namespace tomdistill::testing {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) {
  return fs::path(TOMDISTILL_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Uniform values in [lo, hi]; each pixel invalid with probability p_invalid.
ScalarMap random_map(std::mt19937_64& rng, int width, int height,
                     MapSpace space, double lo, double hi,
                     double p_invalid = 0.0);

RgbImage random_image(std::mt19937_64& rng, int width, int height);
TomMask random_mask(std::mt19937_64& rng, int width, int height, double p_one);

std::vector<std::uint8_t> file_bytes(const fs::path& p);

/// Relative path -> FNV-1a 64 of file contents, for every regular file.
std::vector<std::pair<std::string, std::uint64_t>> tree_hashes(const fs::path& root);

/// Synthetic stereo dataset on disk.
///
/// Sample i has a rectangular ToM mask and planar GT disparity
/// 20 + i + x/4 + y/8 (exact in float32). `mono/` serves 0.5 * gt + 2 as
/// every color prediction; `stereo/` serves `<id>_base` equal to the GT off
/// the mask and unrelated values on it, plus GT for every `<id>_c<k>`.
struct SyntheticSet {
  fs::path root;
  fs::path manifest;
  fs::path mono_dir;
  fs::path stereo_dir;
  fs::path gt_dir;
  std::vector<std::string> ids;
};

SyntheticSet make_synthetic_set(const fs::path& root, int samples, int width,
                                int height, std::size_t colors = 5);

double synthetic_disparity(int sample, int x, int y);
TomMask synthetic_mask(int sample, int width, int height);

/// Runs the CLI in-process; stderr is swallowed unless `log` is set.
int run_cli_args(const std::vector<std::string>& args, std::string* log = nullptr);

}  // namespace tomdistill::testing
