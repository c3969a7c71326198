#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tomdistill/backend.hpp"
#include "tomdistill/core.hpp"
#include "tomdistill/inpaint.hpp"

namespace tomdistill {

enum class Strategy {
  kMonoVirtualDepth,
  kStereoVirtualDisparity,
  kStereoMerged,
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view token);

struct DistillConfig {
  std::size_t num_colors = 5;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::kMonoVirtualDepth;
};

/// Per-pixel median over a stack of maps sharing extent and space.
///
/// A pixel is valid in the output iff it is valid in at least ceil(N/2)
/// inputs; the median is taken over the valid contributions only, and an
/// even number of contributions yields the mean of the two central values.
/// Invalid output pixels carry 0.
ScalarMap median_aggregate(std::span<const ScalarMap> stack);

/// Closed-form least squares for target ~ scale * pred + shift over the
/// pixels where fit_mask, pred and target are all valid.
///
/// Accumulates in double using the centered form (scale = cov / var).
/// Throws InsufficientSupport below two pixels and DegenerateFit when the
/// selected predictions have no spread.
AffineAlignment fit_affine_lse(const ScalarMap& pred, const ScalarMap& target,
                               std::span<const std::uint8_t> fit_mask);

/// All-valid overload: fits over every pixel valid in both maps.
AffineAlignment fit_affine_lse(const ScalarMap& pred, const ScalarMap& target);

/// scale * v + shift on valid pixels, tagged with `out_space`. Results that
/// fall outside the domain of `out_space` (e.g. a negative disparity) are
/// marked invalid rather than stored.
ScalarMap apply_affine(const ScalarMap& map, AffineAlignment a,
                       MapSpace out_space);

struct DistillResult {
  ScalarMap label;
  ColorPalette palette;
  /// Every backend key consulted, in call order.
  std::vector<std::string> backend_keys;
  /// Set by the merged strategy only.
  std::optional<AffineAlignment> alignment;
  /// Merged strategy: pixels of the non-ToM fit set.
  std::size_t fit_pixels = 0;
  /// Virtual-disparity strategy: ToM pixels that could not be warped.
  std::size_t dropped_warp_pixels = 0;
};

/// Virtual depth: in-paint the mask with N palette colors, predict each,
/// take the per-pixel median.
DistillResult distill_mono(std::string_view sample_id, const RgbImage& image,
                           const TomMask& mask, const BackendSpec& backend,
                           const DistillConfig& cfg);

/// Merged labels: the base stereo disparity on non-ToM pixels (bit-exact)
/// and the affinely aligned virtual depth on ToM pixels. The alignment is
/// fitted on non-ToM pixels against the base disparity.
///
/// A mono backend emitting depth_mm is triangulated to disparity with
/// `calib` before the fit; other spaces are fitted directly, the affine map
/// absorbing the focal*baseline constant.
DistillResult distill_stereo_merged(
    std::string_view sample_id, const RgbImage& left, const RgbImage& right,
    const TomMask& mask, const BackendSpec& mono_backend,
    const BackendSpec& stereo_backend, const DistillConfig& cfg,
    const std::optional<StereoCalibration>& calib = std::nullopt);

/// Virtual disparity: in-paint the left view with the mask and the right
/// view with the mask warped by `gt_disparity`, one stereo prediction per
/// color, median-aggregated.
DistillResult distill_stereo_virtual_disparity(
    std::string_view sample_id, const RgbImage& left, const RgbImage& right,
    const TomMask& mask, const ScalarMap& gt_disparity,
    const BackendSpec& stereo_backend, const DistillConfig& cfg);

}  // namespace tomdistill
