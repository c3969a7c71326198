#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tomdistill/distill.hpp"
#include "tomdistill/formats.hpp"
#include "tomdistill/metrics.hpp"

namespace tomdistill {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitConfigError = 2;

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::optional<std::string> backend;         // --backend (mono distill)
  std::optional<std::string> mono_backend;    // --mono-backend
  std::optional<std::string> stereo_backend;  // --stereo-backend
  MapSpace mono_space = MapSpace::kAffineInverseDepth;
  DistillConfig distill;
  unsigned workers = 1;
  bool fail_fast = false;

  // evaluate / report
  std::filesystem::path pred_dir;
  MapSpace pred_space = MapSpace::kAffineInverseDepth;
  std::optional<MapSpace> eval_space;  // default: each sample's gt space
  Rescale rescale = Rescale::kLse;
  std::optional<EvalResolution> resolution;  // default: manifest value
  std::vector<Split> splits = {Split::kAll, Split::kTom, Split::kOther};
  std::string method = "Base";
  Weighting weighting = Weighting::kPixelCount;
  bool plot = false;
  std::vector<std::filesystem::path> report_inputs;
};

/// Subcommand entry points; each returns a process exit code and writes
/// human-readable progress to `log`.
int cmd_inpaint(const RunConfig& cfg, std::ostream& log);
int cmd_distill_mono(const RunConfig& cfg, std::ostream& log);
int cmd_distill_stereo(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_report(const RunConfig& cfg, std::ostream& log);

/// Parses argv and dispatches: inpaint | distill mono | distill stereo |
/// evaluate | report.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace tomdistill
