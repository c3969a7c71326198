#include "tomdistill/inpaint.hpp"

#include <cmath>
#include <random>

namespace tomdistill {

std::uint64_t palette_key(std::uint64_t seed, std::string_view sample_id) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffU;
    h *= kPrime;
  }
  for (char c : sample_id) {
    h ^= static_cast<unsigned char>(c);
    h *= kPrime;
  }
  return h;
}

ColorPalette sample_palette(std::uint64_t seed, std::string_view sample_id,
                            std::size_t n) {
  if (n == 0) throw DomainError("sample_palette: need at least one color");
  std::mt19937_64 engine(palette_key(seed, sample_id));
  ColorPalette palette;
  palette.seed = seed;
  palette.sample_id = std::string(sample_id);
  palette.colors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t w = engine();
    palette.colors.push_back({static_cast<std::uint8_t>(w >> 56),
                              static_cast<std::uint8_t>(w >> 48),
                              static_cast<std::uint8_t>(w >> 40)});
  }
  return palette;
}

RgbImage inpaint(const RgbImage& image, const TomMask& mask,
                 InpaintColor color) {
  require_same_extent(image.extent(), mask.extent(), "inpaint");
  std::vector<std::uint8_t> out(image.data().begin(), image.data().end());
  const auto labels = mask.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    out[3 * i] = color.r;
    out[3 * i + 1] = color.g;
    out[3 * i + 2] = color.b;
  }
  return RgbImage(image.width(), image.height(), std::move(out));
}

WarpedMask warp_mask_left_to_right(const TomMask& mask,
                                   const ScalarMap& gt_disparity) {
  require_same_extent(mask.extent(), gt_disparity.extent(),
                      "warp_mask_left_to_right");
  if (gt_disparity.space() != MapSpace::kDisparityPx) {
    throw SpaceMismatchError("warp_mask_left_to_right: disparity map is " +
                             std::string(to_string(gt_disparity.space())));
  }
  const int w = mask.width();
  std::vector<std::uint8_t> out(mask.extent().pixels(), 0);
  std::size_t dropped = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      if (!gt_disparity.valid_at(x, y)) {
        ++dropped;
        continue;
      }
      const double target = std::round(x - gt_disparity.at(x, y));
      if (target < 0.0 || target >= w) continue;
      out[static_cast<std::size_t>(y) * w + static_cast<int>(target)] = 1;
    }
  }
  return {TomMask(w, mask.height(), std::move(out)), dropped};
}

}  // namespace tomdistill
