#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tomdistill/metrics.hpp"

namespace tomdistill {

enum class TableKind { kDepth, kDisparity };

TableKind table_kind_for(MapSpace space);

/// One "Method" row group of a results table: the method's reports for
/// All, ToM and Other.
struct MethodRow {
  std::string method;
  std::vector<MetricReport> reports;
};

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

/// Markdown table laid out as Category | Method | metric columns, one
/// category block per requested split, methods in input order inside each
/// block. Depth columns: d<1.25 .. d<1.05 | MAE, Abs Rel, RMSE. Disparity
/// columns: bad-2 .. bad-8 | MAE, RMSE. Empty splits print "n/a".
std::string render_table(std::span<const MethodRow> rows, TableKind kind,
                         std::span<const Split> splits);

/// Grouped bar chart, one panel per table column, written as PNG.
void write_bar_chart(std::span<const MethodRow> rows, TableKind kind,
                     std::span<const Split> splits,
                     const std::filesystem::path& path);

}  // namespace tomdistill
