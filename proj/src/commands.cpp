// Batch subcommands. Every subcommand processes samples on a worker pool,
// collects per-sample failures, and writes its outputs through
// write_file_atomic so a crashed run never leaves partial files behind.

#include <algorithm>
#include <atomic>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "tomdistill/cli.hpp"
#include "tomdistill/report.hpp"

namespace tomdistill {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
  bool ok = false;
  std::string error;
};

// Runs fn(i) for i in [0, n) on `workers` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
  if (threads <= 1) {
    body();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(body);
}

class Progress {
 public:
  Progress(std::ostream& log, std::size_t total) : log_(log), total_(total) {}

  void report(const std::string& id, const Outcome& o) {
    std::lock_guard lock(mu_);
    ++done_;
    log_ << '[' << done_ << '/' << total_ << "] " << id
         << (o.ok ? " ok" : " FAILED: " + o.error) << '\n';
  }

 private:
  std::ostream& log_;
  std::size_t total_;
  std::size_t done_ = 0;
  std::mutex mu_;
};

// Runs `work` per sample, catching errors into the outcome list.
template <typename Work>
std::vector<Outcome> run_samples(const DatasetManifest& manifest,
                                 const RunConfig& cfg, std::ostream& log,
                                 Work&& work) {
  const std::size_t n = manifest.samples.size();
  std::vector<Outcome> outcomes(n);
  std::atomic<bool> stop{false};
  Progress progress(log, n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const SampleRecord& s = manifest.samples[i];
    Outcome& o = outcomes[i];
    if (stop.load()) {
      o.error = "skipped after an earlier failure (--fail-fast)";
      return;
    }
    try {
      work(i, s);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
      if (cfg.fail_fast) stop.store(true);
    }
    progress.report(s.id, o);
  });
  return outcomes;
}

json failures_json(const DatasetManifest& manifest,
                   const std::vector<Outcome>& outcomes) {
  json failures = json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) {
      failures.push_back({{"id", manifest.samples[i].id},
                          {"error", outcomes[i].error}});
    }
  }
  return failures;
}

int finish(const DatasetManifest& manifest, const std::vector<Outcome>& outcomes,
           std::ostream& log) {
  std::size_t failed = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].ok) continue;
    ++failed;
    log << "failed: " << manifest.samples[i].id << ": " << outcomes[i].error
        << '\n';
  }
  log << (outcomes.size() - failed) << "/" << outcomes.size()
      << " samples succeeded\n";
  return failed == 0 ? kExitOk : kExitPartialFailure;
}

void write_json(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

json palette_json(const ColorPalette& p) {
  json colors = json::array();
  for (const auto& c : p.colors) colors.push_back({c.r, c.g, c.b});
  return colors;
}

json sidecar_json(const SampleRecord& s, const RunConfig& cfg,
                  const DistillResult& r, const json& backends) {
  json j;
  j["sample_id"] = s.id;
  j["strategy"] = std::string(to_string(cfg.distill.strategy));
  j["seed"] = cfg.distill.seed;
  j["num_colors"] = cfg.distill.num_colors;
  j["palette"] = palette_json(r.palette);
  j["backends"] = backends;
  j["backend_keys"] = r.backend_keys;
  j["label"] = s.id + ".pfm";
  j["space"] = std::string(to_string(r.label.space()));
  j["valid_pixels"] = r.label.valid_count();
  if (r.alignment) {
    j["alignment"] = {{"scale", r.alignment->scale},
                      {"shift", r.alignment->shift},
                      {"fit_pixels", r.fit_pixels}};
  } else {
    j["alignment"] = nullptr;
  }
  if (cfg.distill.strategy == Strategy::kStereoVirtualDisparity) {
    j["dropped_warp_pixels"] = r.dropped_warp_pixels;
  }
  return j;
}

void write_label(const fs::path& out, const SampleRecord& s,
                 const RunConfig& cfg, const DistillResult& r,
                 const json& backends) {
  const fs::path labels = out / "labels";
  write_pfm(r.label, labels / (s.id + ".pfm"));
  write_json(labels / (s.id + ".json"), sidecar_json(s, cfg, r, backends));
}

int write_distill_summary(const RunConfig& cfg, const DatasetManifest& manifest,
                          const std::vector<Outcome>& outcomes,
                          const char* command, const json& backends,
                          std::ostream& log) {
  json samples = json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) continue;
    const auto& id = manifest.samples[i].id;
    samples.push_back({{"id", id},
                       {"label", "labels/" + id + ".pfm"},
                       {"sidecar", "labels/" + id + ".json"}});
  }
  json summary;
  summary["command"] = command;
  summary["dataset"] = manifest.name;
  summary["strategy"] = std::string(to_string(cfg.distill.strategy));
  summary["seed"] = cfg.distill.seed;
  summary["num_colors"] = cfg.distill.num_colors;
  summary["backends"] = backends;
  summary["samples"] = samples;
  summary["failures"] = failures_json(manifest, outcomes);
  write_json(cfg.out / "summary.json", summary);
  return finish(manifest, outcomes, log);
}

ScalarMap gt_in_space(const DatasetManifest& manifest, const SampleRecord& s,
                      MapSpace space) {
  ScalarMap gt = load_sample_gt(s);
  if (gt.space() == space) return gt;
  const auto calib = manifest.calibration_for(s);
  if (!calib) {
    throw ManifestError("sample '" + s.id + "': converting gt from " +
                        std::string(to_string(gt.space())) + " to " +
                        std::string(to_string(space)) +
                        " needs a calibration");
  }
  return space == MapSpace::kDisparityPx ? depth_to_disparity(gt, *calib)
                                         : disparity_to_depth(gt, *calib);
}

}  // namespace

// ----------------------------------------------------------------- inpaint

int cmd_inpaint(const RunConfig& cfg, std::ostream& log) {
  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const auto outcomes =
      run_samples(manifest, cfg, log, [&](std::size_t, const SampleRecord& s) {
        const RgbImage image = read_rgb(s.left);
        const TomMask mask = load_sample_mask(manifest, s);
        const ColorPalette palette =
            sample_palette(cfg.distill.seed, s.id, cfg.distill.num_colors);
        for (std::size_t i = 0; i < palette.colors.size(); ++i) {
          write_rgb_png(inpaint(image, mask, palette.colors[i]),
                        cfg.out / "inpaint" / (color_key(s.id, i) + ".png"));
        }
      });
  return finish(manifest, outcomes, log);
}

// ----------------------------------------------------------------- distill

int cmd_distill_mono(const RunConfig& cfg, std::ostream& log) {
  if (cfg.distill.strategy != Strategy::kMonoVirtualDepth) {
    throw FormatError("distill mono supports only --strategy mono_virtual_depth");
  }
  if (!cfg.backend) throw BackendError("distill mono needs --backend");
  const BackendSpec backend = BackendSpec::parse(*cfg.backend, cfg.mono_space);
  const DatasetManifest manifest = load_manifest(cfg.manifest);
  const json backends = {{"mono", backend.describe()},
                         {"mono_space", std::string(to_string(cfg.mono_space))}};

  const auto outcomes =
      run_samples(manifest, cfg, log, [&](std::size_t, const SampleRecord& s) {
        const RgbImage image = read_rgb(s.left);
        const TomMask mask = load_sample_mask(manifest, s);
        const DistillResult r = distill_mono(s.id, image, mask, backend, cfg.distill);
        write_label(cfg.out, s, cfg, r, backends);
      });
  return write_distill_summary(cfg, manifest, outcomes, "distill mono", backends,
                               log);
}

int cmd_distill_stereo(const RunConfig& cfg, std::ostream& log) {
  const Strategy strategy = cfg.distill.strategy;
  if (strategy != Strategy::kStereoMerged &&
      strategy != Strategy::kStereoVirtualDisparity) {
    throw FormatError(
        "distill stereo needs --strategy stereo_merged or "
        "stereo_virtual_disparity");
  }
  if (!cfg.stereo_backend) throw BackendError("distill stereo needs --stereo-backend");
  const BackendSpec stereo =
      BackendSpec::parse(*cfg.stereo_backend, MapSpace::kDisparityPx);
  std::optional<BackendSpec> mono;
  json backends = {{"stereo", stereo.describe()}};
  if (strategy == Strategy::kStereoMerged) {
    const auto& spec = cfg.mono_backend ? cfg.mono_backend : cfg.backend;
    if (!spec) throw BackendError("stereo_merged needs --mono-backend");
    mono = BackendSpec::parse(*spec, cfg.mono_space);
    backends["mono"] = mono->describe();
    backends["mono_space"] = std::string(to_string(cfg.mono_space));
  }
  const DatasetManifest manifest = load_manifest(cfg.manifest);

  const auto outcomes =
      run_samples(manifest, cfg, log, [&](std::size_t, const SampleRecord& s) {
        if (!s.is_stereo()) {
          throw ManifestError("sample '" + s.id + "' has no right image");
        }
        const RgbImage left = read_rgb(s.left);
        const RgbImage right = read_rgb(*s.right);
        const TomMask mask = load_sample_mask(manifest, s);
        if (strategy == Strategy::kStereoMerged) {
          const DistillResult r =
              distill_stereo_merged(s.id, left, right, mask, *mono, stereo,
                                    cfg.distill, manifest.calibration_for(s));
          write_label(cfg.out, s, cfg, r, backends);
        } else {
          const ScalarMap gt = gt_in_space(manifest, s, MapSpace::kDisparityPx);
          const DistillResult r = distill_stereo_virtual_disparity(
              s.id, left, right, mask, gt, stereo, cfg.distill);
          write_label(cfg.out, s, cfg, r, backends);
        }
      });
  return write_distill_summary(cfg, manifest, outcomes, "distill stereo",
                               backends, log);
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const DatasetManifest manifest = load_manifest(cfg.manifest);
  if (manifest.samples.empty()) throw ManifestError("manifest has no samples");
  if (!fs::is_directory(cfg.pred_dir)) {
    throw ManifestError("prediction directory not found: " + cfg.pred_dir.string());
  }
  const MapSpace space = cfg.eval_space.value_or(manifest.samples.front().gt_space);
  if (space != MapSpace::kDepthMm && space != MapSpace::kDisparityPx) {
    throw FormatError("evaluation space must be depth_mm or disparity_px");
  }
  const EvalResolution resolution =
      cfg.resolution.value_or(manifest.eval_resolution);
  const EvalOptions options{cfg.rescale, space};

  std::vector<std::vector<MetricReport>> per_sample(manifest.samples.size());
  const auto outcomes =
      run_samples(manifest, cfg, log, [&](std::size_t i, const SampleRecord& s) {
        const fs::path pred_path = cfg.pred_dir / (s.id + ".pfm");
        if (!fs::is_regular_file(pred_path)) {
          throw IoError("missing prediction for sample '" + s.id + "': " +
                        pred_path.string());
        }
        ScalarMap pred = read_pfm(pred_path, cfg.pred_space);
        ScalarMap gt = gt_in_space(manifest, s, space);
        TomMask mask = load_sample_mask(manifest, s);
        if (cfg.rescale == Rescale::kNone && pred.space() != space) {
          const auto calib = manifest.calibration_for(s);
          if (pred.space() == MapSpace::kAffineInverseDepth || !calib) {
            throw SpaceMismatchError(
                "sample '" + s.id + "': prediction is " +
                std::string(to_string(pred.space())) + ", evaluation is " +
                std::string(to_string(space)) + "; use --rescale lse");
          }
          pred = space == MapSpace::kDisparityPx ? depth_to_disparity(pred, *calib)
                                                 : disparity_to_depth(pred, *calib);
        }
        if (resolution == EvalResolution::kQuarter) {
          const Extent quarter{gt.width() / 4, gt.height() / 4};
          if (pred.extent() == gt.extent()) {
            pred = resize_quarter(pred);
          } else if (pred.extent() != quarter) {
            throw DimensionError("sample '" + s.id +
                                 "': prediction matches neither full nor "
                                 "quarter ground-truth resolution");
          }
          gt = resize_quarter(gt);
          mask = resize_quarter(mask);
        }
        per_sample[i] = evaluate_sample(pred, gt, mask, options);
      });

  std::vector<std::vector<MetricReport>> ok_reports;
  std::string records;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) continue;
    ok_reports.push_back(per_sample[i]);
    for (const auto& r : per_sample[i]) {
      if (std::find(cfg.splits.begin(), cfg.splits.end(), r.split) ==
          cfg.splits.end()) {
        continue;
      }
      json line = report_to_json(r);
      line["sample"] = manifest.samples[i].id;
      records += line.dump() + "\n";
    }
  }

  const auto aggregate = aggregate_reports(ok_reports, cfg.weighting);
  json reports = json::array();
  for (const auto& r : aggregate) {
    if (std::find(cfg.splits.begin(), cfg.splits.end(), r.split) !=
        cfg.splits.end()) {
      reports.push_back(report_to_json(r));
    }
  }
  json summary;
  summary["method"] = cfg.method;
  summary["dataset"] = manifest.name;
  summary["space"] = std::string(to_string(space));
  summary["rescale"] = cfg.rescale == Rescale::kLse ? "lse" : "none";
  summary["resolution"] = std::string(to_string(resolution));
  summary["weighting"] =
      cfg.weighting == Weighting::kPixelCount ? "pixel_count" : "per_image";
  summary["samples_evaluated"] = ok_reports.size();
  summary["reports"] = reports;
  summary["failures"] = failures_json(manifest, outcomes);

  write_file_atomic(cfg.out / "records.jsonl", records);
  write_json(cfg.out / "aggregate.json", summary);
  const std::vector<MethodRow> rows = {{cfg.method, aggregate}};
  const TableKind kind = table_kind_for(space);
  write_file_atomic(cfg.out / "table.md", render_table(rows, kind, cfg.splits));
  if (cfg.plot) write_bar_chart(rows, kind, cfg.splits, cfg.out / "metrics.png");
  return finish(manifest, outcomes, log);
}

// ------------------------------------------------------------------ report

int cmd_report(const RunConfig& cfg, std::ostream& log) {
  if (cfg.report_inputs.empty()) throw FormatError("report needs --input files");
  std::vector<MethodRow> rows;
  std::optional<MapSpace> space;
  for (const auto& path : cfg.report_inputs) {
    const auto bytes = read_file_bytes(path);
    json j;
    try {
      j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    if (!j.contains("space") || !j.contains("reports") || !j.contains("method")) {
      throw FormatError(path.string() + ": not an aggregate.json from evaluate");
    }
    const MapSpace s = parse_map_space(j["space"].get<std::string>());
    if (space && *space != s) {
      throw FormatError(path.string() + ": mixes " + std::string(to_string(s)) +
                        " with " + std::string(to_string(*space)) + " results");
    }
    space = s;
    MethodRow row{j["method"].get<std::string>(), {}};
    for (const auto& r : j["reports"]) row.reports.push_back(report_from_json(r));
    rows.push_back(std::move(row));
  }
  const TableKind kind = table_kind_for(*space);
  write_file_atomic(cfg.out / "table.md", render_table(rows, kind, cfg.splits));
  if (cfg.plot) write_bar_chart(rows, kind, cfg.splits, cfg.out / "metrics.png");
  log << "wrote " << (cfg.out / "table.md").string() << '\n';
  return kExitOk;
}

}  // namespace tomdistill
