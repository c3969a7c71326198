#include "tomdistill/cli.hpp"

#include <ostream>

#include "CLI11.hpp"

namespace tomdistill {

namespace {

void add_common(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--manifest", cfg.manifest, "Dataset manifest (YAML)")
      ->required();
  cmd.add_option("--out", cfg.out, "Output directory")->required();
  cmd.add_option("--workers", cfg.workers, "Samples processed in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_distill(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--colors", cfg.distill.num_colors, "In-painting colors N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--seed", cfg.distill.seed, "Root seed of color sampling")
      ->capture_default_str();
  cmd.add_flag("--fail-fast", cfg.fail_fast,
               "Stop scheduling samples after the first failure");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  RunConfig cfg;
  std::string strategy;
  std::string mono_space = "affine_inverse_depth";
  std::string pred_space = "affine_inverse_depth";
  std::string eval_space;
  std::string rescale = "lse";
  std::string resolution;
  std::vector<std::string> splits = {"all", "tom", "other"};
  bool per_image = false;

  CLI::App app{"Pseudo-label distillation and evaluation for transparent and "
               "mirror surfaces",
               "tomdistill"};
  app.require_subcommand(1);
  const auto space_names = CLI::IsMember(
      {"depth_mm", "disparity_px", "affine_inverse_depth"});

  auto* inpaint_cmd =
      app.add_subcommand("inpaint", "Write the N in-painted images per sample");
  add_common(*inpaint_cmd, cfg);
  add_distill(*inpaint_cmd, cfg);

  auto* distill_cmd = app.add_subcommand("distill", "Produce pseudo labels");
  distill_cmd->require_subcommand(1);
  auto* mono_cmd = distill_cmd->add_subcommand("mono", "Virtual depth labels");
  add_common(*mono_cmd, cfg);
  add_distill(*mono_cmd, cfg);
  mono_cmd->add_option("--backend", cfg.backend,
                       "Mono backend: dir:<path> or exec:<command>")
      ->required();
  mono_cmd->add_option("--mono-space", mono_space, "Mono backend output space")
      ->check(space_names)
      ->capture_default_str();
  mono_cmd->add_option("--strategy", strategy, "mono_virtual_depth")
      ->check(CLI::IsMember({"mono_virtual_depth"}));

  auto* stereo_cmd =
      distill_cmd->add_subcommand("stereo", "Stereo disparity labels");
  add_common(*stereo_cmd, cfg);
  add_distill(*stereo_cmd, cfg);
  stereo_cmd->add_option("--mono-backend", cfg.mono_backend,
                         "Mono backend for stereo_merged");
  stereo_cmd->add_option("--stereo-backend", cfg.stereo_backend,
                         "Stereo backend: dir:<path> or exec:<command>")
      ->required();
  stereo_cmd->add_option("--mono-space", mono_space, "Mono backend output space")
      ->check(space_names)
      ->capture_default_str();
  stereo_cmd->add_option("--strategy", strategy,
                         "stereo_merged (default) or stereo_virtual_disparity")
      ->check(CLI::IsMember({"stereo_merged", "stereo_virtual_disparity"}));

  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions");
  add_common(*eval_cmd, cfg);
  eval_cmd->add_option("--pred", cfg.pred_dir, "Directory of <id>.pfm predictions")
      ->required();
  eval_cmd->add_option("--pred-space", pred_space, "Space of the predictions")
      ->check(space_names)
      ->capture_default_str();
  eval_cmd->add_option("--space", eval_space,
                       "Evaluation space (default: ground-truth space)")
      ->check(CLI::IsMember({"depth_mm", "disparity_px"}));
  eval_cmd->add_option("--rescale", rescale, "LSE rescaling before scoring")
      ->check(CLI::IsMember({"lse", "none"}))
      ->capture_default_str();
  eval_cmd->add_option("--resolution", resolution,
                       "full or quarter (default: manifest)")
      ->check(CLI::IsMember({"full", "quarter"}));
  eval_cmd->add_option("--splits", splits, "Splits to report")
      ->delimiter(',')
      ->check(CLI::IsMember({"all", "tom", "other"}))
      ->capture_default_str();
  eval_cmd->add_option("--method", cfg.method, "Method name for the table")
      ->capture_default_str();
  eval_cmd->add_flag("--per-image", per_image,
                     "Average per image instead of pooling pixels");
  eval_cmd->add_flag("--plot", cfg.plot, "Also write metrics.png");

  auto* report_cmd =
      app.add_subcommand("report", "Combine evaluate outputs into one table");
  report_cmd->add_option("--input", cfg.report_inputs,
                         "aggregate.json files, one per method")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", cfg.out, "Output directory")->required();
  report_cmd->add_option("--splits", splits, "Splits to report")
      ->delimiter(',')
      ->check(CLI::IsMember({"all", "tom", "other"}))
      ->capture_default_str();
  report_cmd->add_flag("--plot", cfg.plot, "Also write metrics.png");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  try {
    cfg.mono_space = parse_map_space(mono_space);
    cfg.pred_space = parse_map_space(pred_space);
    if (!eval_space.empty()) cfg.eval_space = parse_map_space(eval_space);
    cfg.rescale = parse_rescale(rescale);
    if (!resolution.empty()) cfg.resolution = parse_eval_resolution(resolution);
    cfg.splits.clear();
    for (const auto& s : splits) cfg.splits.push_back(parse_split(s));
    cfg.weighting = per_image ? Weighting::kPerImage : Weighting::kPixelCount;

    if (*inpaint_cmd) return cmd_inpaint(cfg, err);
    if (*mono_cmd) {
      cfg.distill.strategy = Strategy::kMonoVirtualDepth;
      return cmd_distill_mono(cfg, err);
    }
    if (*stereo_cmd) {
      cfg.distill.strategy =
          strategy.empty() ? Strategy::kStereoMerged : parse_strategy(strategy);
      return cmd_distill_stereo(cfg, err);
    }
    if (*eval_cmd) return cmd_evaluate(cfg, err);
    if (*report_cmd) return cmd_report(cfg, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace tomdistill
