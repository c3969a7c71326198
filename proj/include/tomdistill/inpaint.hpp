#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tomdistill/core.hpp"

namespace tomdistill {

/// The N in-painting colors of one sample.
struct ColorPalette {
  std::vector<InpaintColor> colors;
  std::uint64_t seed = 0;
  std::string sample_id;

  bool operator==(const ColorPalette&) const = default;
};

/// 64-bit FNV-1a over the 8 little-endian bytes of `seed` followed by the
/// UTF-8 bytes of `sample_id`.
std::uint64_t palette_key(std::uint64_t seed, std::string_view sample_id);

/// Draws `n` colors from std::mt19937_64 seeded with palette_key(seed, id).
///
/// Color i consumes the i-th 64-bit output word w: r = w[63:56],
/// g = w[55:48], b = w[47:40]. Each channel is therefore uniform on
/// [0, 255], and the sequence is identical on every conforming platform.
/// Keying by sample id keeps palettes independent of processing order.
ColorPalette sample_palette(std::uint64_t seed, std::string_view sample_id,
                            std::size_t n);

/// Replaces every mask=1 pixel by `color`; other pixels are copied verbatim.
RgbImage inpaint(const RgbImage& image, const TomMask& mask,
                 InpaintColor color);

struct WarpedMask {
  TomMask mask;
  /// ToM pixels skipped because their disparity was invalid.
  std::size_t dropped = 0;
};

/// Projects a left-view mask into the right view: a ToM pixel (x, y) with
/// disparity d lands on (round(x - d), y). Targets outside the image are
/// skipped; coincident targets merge.
WarpedMask warp_mask_left_to_right(const TomMask& mask,
                                   const ScalarMap& gt_disparity);

}  // namespace tomdistill
