#include "tomdistill/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <optional>
#include <sstream>

#include "tomdistill/formats.hpp"

namespace tomdistill {

namespace {

using nlohmann::json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string delta_key(double t) { return fixed(t, 2); }
std::string bad_key(double t) { return fixed(t, 0); }

std::optional<double> lookup(const std::map<double, double>& m, double key) {
  const auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

struct Column {
  std::string header;
  std::function<std::optional<double>(const MetricReport&)> value;
};

std::vector<Column> columns_for(TableKind kind) {
  std::vector<Column> cols;
  if (kind == TableKind::kDepth) {
    for (auto it = kDeltaThresholds.rbegin(); it != kDeltaThresholds.rend(); ++it) {
      const double t = *it;
      cols.push_back({"δ<" + fixed(t, 2) + " ↑ (%)",
                      [t](const MetricReport& r) { return lookup(r.delta, t); }});
    }
    cols.push_back({"MAE ↓ (mm)", [](const MetricReport& r) { return r.mae; }});
    cols.push_back(
        {"Abs Rel ↓", [](const MetricReport& r) { return r.abs_rel; }});
    cols.push_back({"RMSE ↓ (mm)", [](const MetricReport& r) { return r.rmse; }});
  } else {
    for (double t : kBadThresholds) {
      cols.push_back({"bad-" + fixed(t, 0) + " ↓ (%)",
                      [t](const MetricReport& r) { return lookup(r.bad, t); }});
    }
    cols.push_back({"MAE ↓ (px)", [](const MetricReport& r) { return r.mae; }});
    cols.push_back({"RMSE ↓ (px)", [](const MetricReport& r) { return r.rmse; }});
  }
  return cols;
}

const MetricReport* find_split(const MethodRow& row, Split split) {
  for (const auto& r : row.reports) {
    if (r.split == split) return &r;
  }
  return nullptr;
}

}  // namespace

TableKind table_kind_for(MapSpace space) {
  return space == MapSpace::kDisparityPx ? TableKind::kDisparity
                                         : TableKind::kDepth;
}

json report_to_json(const MetricReport& report) {
  json j;
  j["split"] = std::string(to_string(report.split));
  j["count"] = report.count;
  if (!report.delta.empty()) {
    json d = json::object();
    for (const auto& [t, v] : report.delta) d[delta_key(t)] = v;
    j["delta"] = d;
  }
  if (!report.bad.empty()) {
    json b = json::object();
    for (const auto& [t, v] : report.bad) b[bad_key(t)] = v;
    j["bad"] = b;
  }
  if (report.mae) j["mae"] = *report.mae;
  if (report.abs_rel) j["abs_rel"] = *report.abs_rel;
  if (report.rmse) j["rmse"] = *report.rmse;
  return j;
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  try {
    r.split = parse_split(j.at("split").get<std::string>());
    r.count = j.at("count").get<std::size_t>();
    if (j.contains("delta")) {
      for (const auto& [k, v] : j["delta"].items()) r.delta[std::stod(k)] = v.get<double>();
    }
    if (j.contains("bad")) {
      for (const auto& [k, v] : j["bad"].items()) r.bad[std::stod(k)] = v.get<double>();
    }
    if (j.contains("mae")) r.mae = j["mae"].get<double>();
    if (j.contains("abs_rel")) r.abs_rel = j["abs_rel"].get<double>();
    if (j.contains("rmse")) r.rmse = j["rmse"].get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("metric report: ") + e.what());
  }
  return r;
}

std::string render_table(std::span<const MethodRow> rows, TableKind kind,
                         std::span<const Split> splits) {
  const auto cols = columns_for(kind);
  std::ostringstream out;
  out << "| Category | Method |";
  for (const auto& c : cols) out << ' ' << c.header << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|";
  out << '\n';
  for (Split split : splits) {
    for (const auto& row : rows) {
      out << "| " << to_string(split) << " | " << row.method << " |";
      const MetricReport* r = find_split(row, split);
      for (const auto& c : cols) {
        const auto v = (r && !r->empty()) ? c.value(*r) : std::nullopt;
        out << ' ' << (v ? fixed(*v, 2) : std::string("n/a")) << " |";
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_bar_chart(std::span<const MethodRow> rows, TableKind kind,
                     std::span<const Split> splits,
                     const std::filesystem::path& path) {
  const auto cols = columns_for(kind);
  constexpr int kPanelW = 300;
  constexpr int kPanelH = 230;
  constexpr int kPerRow = 4;
  constexpr int kLegendH = 30 + 0;
  const int panel_rows = static_cast<int>((cols.size() + kPerRow - 1) / kPerRow);
  const int legend_h = kLegendH + 18 * static_cast<int>(rows.size());
  cv::Mat canvas(legend_h + panel_rows * kPanelH, kPerRow * kPanelW, CV_8UC3,
                 cv::Scalar(255, 255, 255));
  const std::array<cv::Scalar, 6> palette = {
      cv::Scalar(180, 119, 31), cv::Scalar(14, 127, 255),
      cv::Scalar(44, 160, 44),  cv::Scalar(40, 39, 214),
      cv::Scalar(189, 103, 148), cv::Scalar(75, 86, 140)};
  const auto font = cv::FONT_HERSHEY_SIMPLEX;

  for (std::size_t m = 0; m < rows.size(); ++m) {
    const int y = 20 + 18 * static_cast<int>(m);
    cv::rectangle(canvas, {10, y - 10}, {22, y + 2}, palette[m % palette.size()],
                  cv::FILLED);
    cv::putText(canvas, rows[m].method, {30, y}, font, 0.45, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
  }

  // ASCII-only titles; Hershey fonts have no glyphs for the arrows.
  auto ascii_title = [](std::string s) {
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
      const unsigned char c = static_cast<unsigned char>(s[i]);
      if (c < 0x80) {
        out += s[i++];
        continue;
      }
      if (s.compare(i, 2, "δ") == 0) out += "d";
      i += c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : 2;
    }
    return out;
  };

  for (std::size_t c = 0; c < cols.size(); ++c) {
    const int ox = static_cast<int>(c % kPerRow) * kPanelW;
    const int oy = legend_h + static_cast<int>(c / kPerRow) * kPanelH;
    cv::putText(canvas, ascii_title(cols[c].header), {ox + 10, oy + 18}, font, 0.45,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    double vmax = 0.0;
    for (const auto& row : rows) {
      for (Split s : splits) {
        const MetricReport* r = find_split(row, s);
        if (r && !r->empty()) {
          if (auto v = cols[c].value(*r)) vmax = std::max(vmax, std::abs(*v));
        }
      }
    }
    if (vmax <= 0.0) vmax = 1.0;
    const int base_y = oy + kPanelH - 30;
    const int top_y = oy + 30;
    const int plot_w = kPanelW - 40;
    const int group_w = plot_w / std::max<int>(1, static_cast<int>(splits.size()));
    const int bar_w = std::max(2, (group_w - 10) /
                                      std::max<int>(1, static_cast<int>(rows.size())));
    cv::line(canvas, {ox + 20, base_y}, {ox + 20 + plot_w, base_y},
             cv::Scalar(0, 0, 0), 1);
    for (std::size_t s = 0; s < splits.size(); ++s) {
      const int gx = ox + 20 + static_cast<int>(s) * group_w;
      cv::putText(canvas, std::string(to_string(splits[s])),
                  {gx + 5, base_y + 18}, font, 0.4, cv::Scalar(0, 0, 0), 1,
                  cv::LINE_AA);
      for (std::size_t m = 0; m < rows.size(); ++m) {
        const MetricReport* r = find_split(rows[m], splits[s]);
        if (!r || r->empty()) continue;
        const auto v = cols[c].value(*r);
        if (!v) continue;
        const int h = static_cast<int>(std::lround(std::abs(*v) / vmax *
                                                   (base_y - top_y)));
        const int x0 = gx + 5 + static_cast<int>(m) * bar_w;
        cv::rectangle(canvas, {x0, base_y - h}, {x0 + bar_w - 2, base_y},
                      palette[m % palette.size()], cv::FILLED);
      }
    }
    cv::putText(canvas, fixed(vmax, 2), {ox + 22, top_y - 2}, font, 0.35,
                cv::Scalar(90, 90, 90), 1, cv::LINE_AA);
  }

  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", canvas, buf)) {
    throw IoError("cannot encode chart " + path.string());
  }
  write_file_atomic(path, buf);
}

}  // namespace tomdistill
