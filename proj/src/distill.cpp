#include "tomdistill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tomdistill {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kMonoVirtualDepth:
      return "mono_virtual_depth";
    case Strategy::kStereoVirtualDisparity:
      return "stereo_virtual_disparity";
    case Strategy::kStereoMerged:
      return "stereo_merged";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view token) {
  if (token == "mono_virtual_depth") return Strategy::kMonoVirtualDepth;
  if (token == "stereo_virtual_disparity") return Strategy::kStereoVirtualDisparity;
  if (token == "stereo_merged") return Strategy::kStereoMerged;
  throw FormatError("unknown strategy '" + std::string(token) + "'");
}

// ------------------------------------------------------------------ median

ScalarMap median_aggregate(std::span<const ScalarMap> stack) {
  if (stack.empty()) throw AggregationError("median_aggregate: empty stack");
  const ScalarMap& first = stack.front();
  for (const auto& m : stack) {
    if (m.extent() != first.extent()) {
      throw AggregationError("median_aggregate: extent mismatch in stack");
    }
    if (m.space() != first.space()) {
      throw AggregationError("median_aggregate: space mismatch in stack");
    }
  }
  const std::size_t n = stack.size();
  const std::size_t quorum = (n + 1) / 2;
  const std::size_t pixels = first.extent().pixels();
  std::vector<double> values(pixels, 0.0);
  std::vector<std::uint8_t> valid(pixels, 0);
  std::vector<double> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < pixels; ++i) {
    scratch.clear();
    for (const auto& m : stack) {
      if (m.is_valid(i)) scratch.push_back(m.value(i));
    }
    const std::size_t k = scratch.size();
    if (k < quorum || k == 0) continue;
    const auto upper = scratch.begin() + static_cast<std::ptrdiff_t>(k / 2);
    std::nth_element(scratch.begin(), upper, scratch.end());
    if (k % 2 == 1) {
      values[i] = *upper;
    } else {
      const double lower = *std::max_element(scratch.begin(), upper);
      values[i] = 0.5 * (lower + *upper);
    }
    valid[i] = 1;
  }
  return ScalarMap(first.width(), first.height(), first.space(),
                   std::move(values), std::move(valid));
}

// --------------------------------------------------------------------- LSE

AffineAlignment fit_affine_lse(const ScalarMap& pred, const ScalarMap& target,
                               std::span<const std::uint8_t> fit_mask) {
  require_same_extent(pred.extent(), target.extent(), "fit_affine_lse");
  if (fit_mask.size() != pred.extent().pixels()) {
    throw DimensionError("fit_affine_lse: fit mask size does not match maps");
  }
  const std::size_t pixels = fit_mask.size();
  auto selected = [&](std::size_t i) {
    return fit_mask[i] && pred.is_valid(i) && target.is_valid(i);
  };

  std::size_t count = 0;
  double sum_p = 0.0;
  double sum_t = 0.0;
  double max_abs_p = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!selected(i)) continue;
    ++count;
    sum_p += pred.value(i);
    sum_t += target.value(i);
    max_abs_p = std::max(max_abs_p, std::abs(pred.value(i)));
  }
  if (count < 2) {
    throw InsufficientSupport("fit_affine_lse: " + std::to_string(count) +
                              " usable pixel(s), need at least 2");
  }
  const double mean_p = sum_p / static_cast<double>(count);
  const double mean_t = sum_t / static_cast<double>(count);

  double var = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!selected(i)) continue;
    const double dp = pred.value(i) - mean_p;
    cov += dp * (target.value(i) - mean_t);
    var += dp * dp;
  }
  // Rounding noise of a constant prediction stays below this floor.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * max_abs_p;
  if (!(var > static_cast<double>(count) * noise * noise)) {
    throw DegenerateFit("fit_affine_lse: prediction has zero variance over " +
                        std::to_string(count) + " pixels");
  }
  const double scale = cov / var;
  return {scale, mean_t - scale * mean_p};
}

AffineAlignment fit_affine_lse(const ScalarMap& pred, const ScalarMap& target) {
  const std::vector<std::uint8_t> all(pred.extent().pixels(), 1);
  return fit_affine_lse(pred, target, all);
}

namespace {

bool in_domain(double v, MapSpace space) {
  if (!std::isfinite(v)) return false;
  if (space == MapSpace::kDepthMm) return v > 0.0;
  if (space == MapSpace::kDisparityPx) return v >= 0.0;
  return true;
}

std::string with_color(std::size_t i, const char* what) {
  return "color " + std::to_string(i) + ": " + what;
}

}  // namespace

ScalarMap apply_affine(const ScalarMap& map, AffineAlignment a,
                       MapSpace out_space) {
  std::vector<double> values(map.values().begin(), map.values().end());
  std::vector<std::uint8_t> valid(map.valid().begin(), map.valid().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!valid[i]) continue;
    values[i] = a.scale * values[i] + a.shift;
    if (!in_domain(values[i], out_space)) valid[i] = 0;
  }
  return ScalarMap(map.width(), map.height(), out_space, std::move(values),
                   std::move(valid));
}

// ----------------------------------------------------------------- distill

DistillResult distill_mono(std::string_view sample_id, const RgbImage& image,
                           const TomMask& mask, const BackendSpec& backend,
                           const DistillConfig& cfg) {
  require_same_extent(image.extent(), mask.extent(), "distill_mono");
  if (cfg.num_colors < 1) throw DomainError("distill_mono: num_colors < 1");
  ColorPalette palette = sample_palette(cfg.seed, sample_id, cfg.num_colors);
  std::vector<ScalarMap> predictions;
  std::vector<std::string> keys;
  predictions.reserve(palette.colors.size());
  for (std::size_t i = 0; i < palette.colors.size(); ++i) {
    const std::string key = color_key(sample_id, i);
    keys.push_back(key);
    try {
      predictions.push_back(
          infer_mono(backend, inpaint(image, mask, palette.colors[i]), key));
    } catch (const BackendError& e) {
      throw BackendError(with_color(i, e.what()));
    }
  }
  ScalarMap label = median_aggregate(predictions);
  return {std::move(label), std::move(palette), std::move(keys), std::nullopt, 0, 0};
}

DistillResult distill_stereo_merged(
    std::string_view sample_id, const RgbImage& left, const RgbImage& right,
    const TomMask& mask, const BackendSpec& mono_backend,
    const BackendSpec& stereo_backend, const DistillConfig& cfg,
    const std::optional<StereoCalibration>& calib) {
  require_same_extent(left.extent(), mask.extent(), "distill_stereo_merged");
  const std::string key = base_key(sample_id);
  ScalarMap base = infer_stereo(stereo_backend, left, right, key);

  DistillResult mono = distill_mono(sample_id, left, mask, mono_backend, cfg);
  ScalarMap virtual_map = std::move(mono.label);
  if (virtual_map.space() == MapSpace::kDepthMm) {
    if (!calib) {
      throw DomainError(
          "distill_stereo_merged: metric mono depth needs a calibration to "
          "triangulate");
    }
    virtual_map = depth_to_disparity(virtual_map, *calib);
  }

  const auto labels = mask.labels();
  std::vector<std::uint8_t> fit_mask(labels.size());
  std::size_t fit_pixels = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    fit_mask[i] = labels[i] ? 0 : 1;
    if (fit_mask[i] && base.is_valid(i) && virtual_map.is_valid(i)) ++fit_pixels;
  }
  const AffineAlignment alignment =
      fit_affine_lse(virtual_map, base, fit_mask);
  const ScalarMap aligned =
      apply_affine(virtual_map, alignment, MapSpace::kDisparityPx);

  std::vector<double> values(base.values().begin(), base.values().end());
  std::vector<std::uint8_t> valid(base.valid().begin(), base.valid().end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    values[i] = aligned.value(i);
    valid[i] = aligned.is_valid(i) ? 1 : 0;
  }

  DistillResult result{
      ScalarMap(base.width(), base.height(), MapSpace::kDisparityPx,
                std::move(values), std::move(valid)),
      std::move(mono.palette), {key}, alignment, fit_pixels, 0};
  result.backend_keys.insert(result.backend_keys.end(),
                             mono.backend_keys.begin(), mono.backend_keys.end());
  return result;
}

DistillResult distill_stereo_virtual_disparity(
    std::string_view sample_id, const RgbImage& left, const RgbImage& right,
    const TomMask& mask, const ScalarMap& gt_disparity,
    const BackendSpec& stereo_backend, const DistillConfig& cfg) {
  require_same_extent(left.extent(), mask.extent(),
                      "distill_stereo_virtual_disparity");
  require_same_extent(left.extent(), right.extent(),
                      "distill_stereo_virtual_disparity");
  if (cfg.num_colors < 1) {
    throw DomainError("distill_stereo_virtual_disparity: num_colors < 1");
  }
  const WarpedMask warped = warp_mask_left_to_right(mask, gt_disparity);
  ColorPalette palette = sample_palette(cfg.seed, sample_id, cfg.num_colors);
  std::vector<ScalarMap> predictions;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < palette.colors.size(); ++i) {
    const InpaintColor c = palette.colors[i];
    const std::string key = color_key(sample_id, i);
    keys.push_back(key);
    try {
      predictions.push_back(infer_stereo(stereo_backend, inpaint(left, mask, c),
                                         inpaint(right, warped.mask, c), key));
    } catch (const BackendError& e) {
      throw BackendError(with_color(i, e.what()));
    }
  }
  return {median_aggregate(predictions), std::move(palette), std::move(keys),
          std::nullopt, 0, warped.dropped};
}

}  // namespace tomdistill
