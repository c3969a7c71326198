#include "tomdistill/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tomdistill/distill.hpp"

namespace tomdistill {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kAll:
      return "All";
    case Split::kTom:
      return "ToM";
    case Split::kOther:
      return "Other";
  }
  return "unknown";
}

Split parse_split(std::string_view token) {
  if (token == "all" || token == "All") return Split::kAll;
  if (token == "tom" || token == "ToM") return Split::kTom;
  if (token == "other" || token == "Other") return Split::kOther;
  throw FormatError("unknown split '" + std::string(token) + "'");
}

Rescale parse_rescale(std::string_view token) {
  if (token == "lse") return Rescale::kLse;
  if (token == "none") return Rescale::kNone;
  throw FormatError("unknown rescale mode '" + std::string(token) + "'");
}

namespace {

void check_pair(const ScalarMap& pred, const ScalarMap& gt,
                std::span<const std::uint8_t> eval_mask, const char* what) {
  require_same_extent(pred.extent(), gt.extent(), what);
  if (eval_mask.size() != gt.extent().pixels()) {
    throw DimensionError(std::string(what) + ": mask size does not match maps");
  }
  if (pred.space() != gt.space()) {
    throw SpaceMismatchError(std::string(what) + ": pred is " +
                             std::string(to_string(pred.space())) +
                             ", gt is " + std::string(to_string(gt.space())));
  }
}

// Visits evaluated pixels; throws EmptySplit if there are none.
template <typename Fn>
std::size_t for_each_evaluated(const ScalarMap& pred, const ScalarMap& gt,
                               std::span<const std::uint8_t> eval_mask,
                               const char* what, Fn&& fn) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < eval_mask.size(); ++i) {
    if (!eval_mask[i] || !pred.is_valid(i) || !gt.is_valid(i)) continue;
    fn(pred.value(i), gt.value(i));
    ++n;
  }
  if (n == 0) throw EmptySplit(std::string(what) + ": no evaluated pixels");
  return n;
}

struct AbsoluteErrors {
  double mae = 0.0;
  double rmse = 0.0;
};

AbsoluteErrors absolute_errors(const ScalarMap& pred, const ScalarMap& gt,
                               std::span<const std::uint8_t> eval_mask) {
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  const std::size_t n = for_each_evaluated(
      pred, gt, eval_mask, "error_metrics", [&](double p, double g) {
        const double e = p - g;
        sum_abs += std::abs(e);
        sum_sq += e * e;
      });
  return {sum_abs / static_cast<double>(n),
          std::sqrt(sum_sq / static_cast<double>(n))};
}

}  // namespace

std::vector<std::uint8_t> split_mask(const ScalarMap& pred,
                                     const ScalarMap& gt, const TomMask& mask,
                                     Split split) {
  require_same_extent(pred.extent(), gt.extent(), "split_mask");
  require_same_extent(mask.extent(), gt.extent(), "split_mask");
  const auto labels = mask.labels();
  std::vector<std::uint8_t> out(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!pred.is_valid(i) || !gt.is_valid(i)) continue;
    switch (split) {
      case Split::kAll:
        out[i] = 1;
        break;
      case Split::kTom:
        out[i] = labels[i] ? 1 : 0;
        break;
      case Split::kOther:
        out[i] = labels[i] ? 0 : 1;
        break;
    }
  }
  return out;
}

ScalarMap eval_rescale(const ScalarMap& pred, const ScalarMap& gt) {
  return apply_affine(pred, fit_affine_lse(pred, gt), gt.space());
}

double delta_accuracy(const ScalarMap& pred, const ScalarMap& gt,
                      std::span<const std::uint8_t> eval_mask,
                      double threshold) {
  check_pair(pred, gt, eval_mask, "delta_accuracy");
  std::size_t hits = 0;
  const std::size_t n = for_each_evaluated(
      pred, gt, eval_mask, "delta_accuracy", [&](double p, double g) {
        if (!(p > 0.0) || !(g > 0.0)) {
          throw DomainError("delta_accuracy: non-positive value on an "
                            "evaluated pixel");
        }
        if (std::max(p / g, g / p) < threshold) ++hits;
      });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

ErrorMetrics error_metrics(const ScalarMap& pred, const ScalarMap& gt,
                           std::span<const std::uint8_t> eval_mask) {
  check_pair(pred, gt, eval_mask, "error_metrics");
  double sum_rel = 0.0;
  const std::size_t n = for_each_evaluated(
      pred, gt, eval_mask, "error_metrics", [&](double p, double g) {
        if (!(g > 0.0)) {
          throw DomainError("error_metrics: non-positive ground truth");
        }
        sum_rel += std::abs(p - g) / g;
      });
  const AbsoluteErrors abs = absolute_errors(pred, gt, eval_mask);
  return {abs.mae, sum_rel / static_cast<double>(n), abs.rmse};
}

double bad_tau(const ScalarMap& pred_disp, const ScalarMap& gt_disp,
               std::span<const std::uint8_t> eval_mask, double tau) {
  check_pair(pred_disp, gt_disp, eval_mask, "bad_tau");
  if (gt_disp.space() != MapSpace::kDisparityPx) {
    throw SpaceMismatchError("bad_tau: maps must be disparity_px");
  }
  std::size_t bad = 0;
  const std::size_t n = for_each_evaluated(
      pred_disp, gt_disp, eval_mask, "bad_tau",
      [&](double p, double g) {
        if (std::abs(p - g) > tau) ++bad;
      });
  return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

std::vector<MetricReport> evaluate_sample(const ScalarMap& pred,
                                          const ScalarMap& gt,
                                          const TomMask& tom_mask,
                                          const EvalOptions& options) {
  if (options.space != MapSpace::kDepthMm &&
      options.space != MapSpace::kDisparityPx) {
    throw SpaceMismatchError("evaluate_sample: evaluation space must be "
                             "depth_mm or disparity_px");
  }
  if (gt.space() != options.space) {
    throw SpaceMismatchError("evaluate_sample: gt is " +
                             std::string(to_string(gt.space())) +
                             ", options say " +
                             std::string(to_string(options.space)));
  }
  require_same_extent(pred.extent(), gt.extent(), "evaluate_sample");
  require_same_extent(tom_mask.extent(), gt.extent(), "evaluate_sample");

  const ScalarMap evaluated =
      options.rescale == Rescale::kLse ? eval_rescale(pred, gt) : pred;
  if (evaluated.space() != gt.space()) {
    throw SpaceMismatchError("evaluate_sample: pred is " +
                             std::string(to_string(evaluated.space())) +
                             " without rescaling; gt is " +
                             std::string(to_string(gt.space())));
  }

  std::vector<MetricReport> reports;
  for (Split split : kSplits) {
    MetricReport r;
    r.split = split;
    const auto mask = split_mask(evaluated, gt, tom_mask, split);
    r.count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    if (r.count > 0) {
      if (options.space == MapSpace::kDepthMm) {
        for (double t : kDeltaThresholds) {
          r.delta[t] = delta_accuracy(evaluated, gt, mask, t);
        }
        const ErrorMetrics e = error_metrics(evaluated, gt, mask);
        r.mae = e.mae;
        r.abs_rel = e.abs_rel;
        r.rmse = e.rmse;
      } else {
        for (double t : kBadThresholds) {
          r.bad[t] = bad_tau(evaluated, gt, mask, t);
        }
        const AbsoluteErrors e = absolute_errors(evaluated, gt, mask);
        r.mae = e.mae;
        r.rmse = e.rmse;
      }
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<MetricReport> aggregate_reports(
    std::span<const std::vector<MetricReport>> per_sample,
    Weighting weighting) {
  std::vector<MetricReport> out;
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    MetricReport agg;
    agg.split = kSplits[s];
    double total_weight = 0.0;
    std::map<double, double> delta;
    std::map<double, double> bad;
    double mae = 0.0;
    double abs_rel = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    bool has_abs_rel = false;
    bool has_errors = false;
    for (const auto& reports : per_sample) {
      if (s >= reports.size()) continue;
      const MetricReport& r = reports[s];
      if (r.empty()) continue;
      const double w = weighting == Weighting::kPixelCount
                           ? static_cast<double>(r.count)
                           : 1.0;
      agg.count += r.count;
      total_weight += w;
      for (const auto& [t, v] : r.delta) delta[t] += w * v;
      for (const auto& [t, v] : r.bad) bad[t] += w * v;
      if (r.mae) {
        has_errors = true;
        mae += w * *r.mae;
        mse += w * *r.rmse * *r.rmse;
        rmse += w * *r.rmse;
      }
      if (r.abs_rel) {
        has_abs_rel = true;
        abs_rel += w * *r.abs_rel;
      }
    }
    if (total_weight > 0.0) {
      for (const auto& [t, v] : delta) agg.delta[t] = v / total_weight;
      for (const auto& [t, v] : bad) agg.bad[t] = v / total_weight;
      if (has_errors) {
        agg.mae = mae / total_weight;
        agg.rmse = weighting == Weighting::kPixelCount
                       ? std::sqrt(mse / total_weight)
                       : rmse / total_weight;
      }
      if (has_abs_rel) agg.abs_rel = abs_rel / total_weight;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace tomdistill
