// Command-line entry point: binds the survival engine into reproducible runs.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "survt/cli_commands.hpp"
#include "survt/runconfig.hpp"

namespace {

void add_run_flags(CLI::App* cmd, survt::cli::RunArgs& args, bool with_dry_run = false) {
  cmd->add_option("--config", args.config_path, "run configuration file (JSON)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--profile", args.profile, "configuration profile: toy or paper");
  cmd->add_option("--time-unit", args.time_unit,
                  "discretization unit override, e.g. 1m, 6m, 1y, 2y");
  auto* seed = cmd->add_option("--seed", args.seed, "master seed override");
  seed->each([&args](const std::string&) { args.has_seed = true; });
  if (with_dry_run)
    cmd->add_flag("--dry-run", args.dry_run,
                  "resolve the configuration and write the manifest, then stop");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete-time survival analysis with attention-masked missing features"};
  app.set_version_flag("--version", std::string(survt::kToolName) + " " + survt::kToolVersion);
  app.require_subcommand(1);

  survt::cli::RunArgs gen_args, train_args, cv_args, ab_args;
  survt::cli::EvaluateArgs eval_args;
  survt::cli::AttributeArgs attr_args;
  std::string gradcheck_profile = "toy";

  add_run_flags(app.add_subcommand("generate", "write a synthetic cohort CSV"), gen_args);
  add_run_flags(app.add_subcommand("train", "fit one model and write a checkpoint"),
                train_args);
  add_run_flags(app.add_subcommand("crossval", "stratified cross-validation over all pipelines"),
                cv_args, true);
  add_run_flags(app.add_subcommand("ablate", "loss-term ablation on paired folds"), ab_args);

  auto* eval_cmd = app.add_subcommand("evaluate", "Ct-index of a checkpoint on a CSV");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "model checkpoint");
  eval_cmd->add_option("--data", eval_args.data_csv, "cohort CSV");
  eval_cmd->add_option("--out", eval_args.out_dir, "optional output directory");

  auto* attr_cmd = app.add_subcommand("attribute", "Shapley feature attribution report");
  attr_cmd->add_option("--checkpoint", attr_args.checkpoint_path, "model checkpoint");
  attr_cmd->add_option("--data", attr_args.data_csv, "cohort CSV");
  attr_cmd->add_option("--out", attr_args.out_dir, "output directory");
  attr_cmd->add_option("--max-features", attr_args.max_features,
                       "largest coalition size evaluated exactly");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  grad_cmd->add_option("--profile", gradcheck_profile, "toy (default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("generate")) return survt::cli::cmd_generate(gen_args);
    if (app.got_subcommand("train")) return survt::cli::cmd_train(train_args);
    if (app.got_subcommand("crossval")) return survt::cli::cmd_crossval(cv_args);
    if (app.got_subcommand("ablate")) return survt::cli::cmd_ablate(ab_args);
    if (app.got_subcommand("evaluate")) return survt::cli::cmd_evaluate(eval_args);
    if (app.got_subcommand("attribute")) return survt::cli::cmd_attribute(attr_args);
    if (app.got_subcommand("gradcheck")) return survt::cli::cmd_gradcheck(gradcheck_profile);
  } catch (const survt::cli::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const survt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
