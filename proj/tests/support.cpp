#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tomdistill/backend.hpp"
#include "tomdistill/cli.hpp"

namespace tomdistill::testing {

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "tomdistill-test.XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw std::runtime_error("mkdtemp failed");
  }
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

ScalarMap random_map(std::mt19937_64& rng, int width, int height,
                     MapSpace space, double lo, double hi, double p_invalid) {
  std::uniform_real_distribution<double> value(lo, hi);
  std::bernoulli_distribution drop(p_invalid);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> values(n);
  std::vector<std::uint8_t> valid(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = value(rng);
    valid[i] = drop(rng) ? 0 : 1;
  }
  return ScalarMap(width, height, space, std::move(values), std::move(valid));
}

RgbImage random_image(std::mt19937_64& rng, int width, int height) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * 3);
  for (auto& b : data) b = static_cast<std::uint8_t>(byte(rng));
  return RgbImage(width, height, std::move(data));
}

TomMask random_mask(std::mt19937_64& rng, int width, int height, double p_one) {
  std::bernoulli_distribution one(p_one);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(width) * height);
  for (auto& l : labels) l = one(rng) ? 1 : 0;
  return TomMask(width, height, std::move(labels));
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::pair<std::string, std::uint64_t>> tree_hashes(const fs::path& root) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : file_bytes(entry.path())) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
    out.emplace_back(fs::relative(entry.path(), root).string(), h);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double synthetic_disparity(int sample, int x, int y) {
  return 20.0 + sample + 0.25 * x + 0.125 * y;
}

TomMask synthetic_mask(int sample, int width, int height) {
  const int x0 = width / 8 + 2 * sample;
  const int y0 = height / 6 + sample;
  const int x1 = std::min(width, x0 + width / 3);
  const int y1 = std::min(height, y0 + height / 4);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(width) * height, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) labels[static_cast<std::size_t>(y) * width + x] = 1;
  return TomMask(width, height, std::move(labels));
}

SyntheticSet make_synthetic_set(const fs::path& root, int samples, int width,
                                int height, std::size_t colors) {
  SyntheticSet set{root, root / "manifest.yaml", root / "mono", root / "stereo",
                   root / "gt", {}};
  std::mt19937_64 rng(1234);
  std::ostringstream yaml;
  yaml << "name: synthetic\nclass_map: binary\n"
       << "calibration: {focal: 500, baseline: 100}\nsamples:\n";
  for (int i = 0; i < samples; ++i) {
    const std::string id = "s" + std::to_string(i);
    set.ids.push_back(id);
    write_rgb_png(random_image(rng, width, height), root / "left" / (id + ".png"));
    write_rgb_png(random_image(rng, width, height), root / "right" / (id + ".png"));
    const TomMask mask = synthetic_mask(i, width, height);
    write_mask_png(mask, root / "mask" / (id + ".png"));

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<double> gt(n);
    std::vector<double> mono(n);
    std::vector<double> base(n);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * width + x;
        gt[k] = synthetic_disparity(i, x, y);
        mono[k] = 0.5 * gt[k] + 2.0;
        base[k] = mask.labels()[k] ? 500.0 + static_cast<double>((k * 37) % 101) : gt[k];
      }
    }
    const ScalarMap gt_map(width, height, MapSpace::kDisparityPx, gt);
    write_pfm(gt_map, set.gt_dir / (id + ".pfm"));
    write_pfm(ScalarMap(width, height, MapSpace::kDisparityPx, base),
              set.stereo_dir / (base_key(id) + ".pfm"));
    for (std::size_t c = 0; c < colors; ++c) {
      write_pfm(ScalarMap(width, height, MapSpace::kAffineInverseDepth, mono),
                set.mono_dir / (color_key(id, c) + ".pfm"));
      write_pfm(gt_map, set.stereo_dir / (color_key(id, c) + ".pfm"));
    }
    yaml << "  - id: " << id << "\n    left: left/" << id << ".png\n"
         << "    right: right/" << id << ".png\n    mask: mask/" << id << ".png\n"
         << "    gt: gt/" << id << ".pfm\n    gt_space: disparity_px\n";
  }
  write_file_atomic(set.manifest, yaml.str());
  return set;
}

int run_cli_args(const std::vector<std::string>& args, std::string* log) {
  std::vector<const char*> argv = {"tomdistill"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (log) *log = out.str() + err.str();
  return rc;
}

}  // namespace tomdistill::testing
