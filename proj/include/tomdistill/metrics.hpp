#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tomdistill/core.hpp"

namespace tomdistill {

enum class Split { kAll, kTom, kOther };

inline constexpr std::array<Split, 3> kSplits = {Split::kAll, Split::kTom,
                                                 Split::kOther};
inline constexpr std::array<double, 5> kDeltaThresholds = {1.05, 1.10, 1.15,
                                                           1.20, 1.25};
inline constexpr std::array<double, 4> kBadThresholds = {2.0, 4.0, 6.0, 8.0};

std::string_view to_string(Split s);
Split parse_split(std::string_view token);  // "all", "tom", "other"

/// Metrics of one split. Depth evaluation fills delta/mae/abs_rel/rmse,
/// disparity evaluation fills bad/mae/rmse. An empty split has count 0 and
/// no metric values.
struct MetricReport {
  Split split = Split::kAll;
  std::size_t count = 0;
  std::map<double, double> delta;  // threshold -> % of pixels
  std::optional<double> mae;
  std::optional<double> abs_rel;
  std::optional<double> rmse;
  std::map<double, double> bad;  // tau (px) -> % of pixels

  bool empty() const { return count == 0; }
};

enum class Rescale { kNone, kLse };
Rescale parse_rescale(std::string_view token);

struct EvalOptions {
  Rescale rescale = Rescale::kNone;
  /// Space of the ground truth; depth_mm or disparity_px.
  MapSpace space = MapSpace::kDepthMm;
};

/// Evaluated pixels of a split: valid in pred and gt, restricted by the mask
/// for the ToM / Other splits.
std::vector<std::uint8_t> split_mask(const ScalarMap& pred,
                                     const ScalarMap& gt, const TomMask& mask,
                                     Split split);

/// Maps pred onto gt with the least-squares affine fitted over every pixel
/// valid in both.
ScalarMap eval_rescale(const ScalarMap& pred, const ScalarMap& gt);

/// % of evaluated pixels with max(pred/gt, gt/pred) < threshold.
double delta_accuracy(const ScalarMap& pred, const ScalarMap& gt,
                      std::span<const std::uint8_t> eval_mask,
                      double threshold);

struct ErrorMetrics {
  double mae = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;
};

ErrorMetrics error_metrics(const ScalarMap& pred, const ScalarMap& gt,
                           std::span<const std::uint8_t> eval_mask);

/// % of evaluated pixels with |pred - gt| > tau.
double bad_tau(const ScalarMap& pred_disp, const ScalarMap& gt_disp,
               std::span<const std::uint8_t> eval_mask, double tau);

/// Reports for All, ToM and Other, in that order. A split without pixels
/// yields an empty report instead of an error.
std::vector<MetricReport> evaluate_sample(const ScalarMap& pred,
                                          const ScalarMap& gt,
                                          const TomMask& tom_mask,
                                          const EvalOptions& options);

enum class Weighting {
  kPixelCount,  // pooled over all evaluated pixels of the dataset
  kPerImage,    // plain mean of per-image values
};

/// Dataset-level reports (All, ToM, Other). Pixel weighting pools RMSE as
/// sqrt of the count-weighted mean squared error.
std::vector<MetricReport> aggregate_reports(
    std::span<const std::vector<MetricReport>> per_sample, Weighting weighting);

}  // namespace tomdistill
