#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bridgeprompt: prompt-only restoration on a frozen flow-matching backbone"};
  app.set_version_flag("--version", std::string(bp::kVersionString));
  app.require_subcommand(1);

  bp::PretrainArgs pretrain_args;
  auto* pre = app.add_subcommand("pretrain", "pretrain and freeze the toy backbone");
  pre->add_option("--config", pretrain_args.config, "configuration file")->required();
  pre->add_option("--out", pretrain_args.out_dir, "run directory")->required();

  bp::TrainPromptArgs train_args;
  auto* train = app.add_subcommand("train-prompt", "optimize a conditioning prompt");
  train->add_option("--config", train_args.config)->required();
  train->add_option("--backbone", train_args.backbone, "frozen backbone checkpoint")->required();
  train->add_option("--bank", train_args.bank, "prompt bank file (created or updated)")->required();
  train->add_option("--out", train_args.out_dir)->required();
  train->add_option("--trajectory", train_args.trajectory, "naive | ddbm | ebr");
  train->add_option("--degradation", train_args.degradation, "veil | lowlight | blur | stripe");
  train->add_option("--variant", train_args.variant, "token | embedding | residual");

  bp::RestoreArgs restore_args;
  auto* rest = app.add_subcommand("restore", "run the deterministic sampler");
  rest->add_option("--config", restore_args.config)->required();
  rest->add_option("--backbone", restore_args.backbone)->required();
  rest->add_option("--bank", restore_args.bank)->required();
  rest->add_option("--out", restore_args.out_dir)->required();
  rest->add_option("--trajectory", restore_args.trajectory);
  rest->add_option("--mix", restore_args.mix_kinds, "prompt kinds to average")->delimiter(',');
  rest->add_option("--inputs", restore_args.inputs, "degraded PGM files (else a test set is generated)");

  bp::AblateArgs ablate_args;
  auto* abl = app.add_subcommand("ablate", "T0 sweep or three-trajectory comparison");
  abl->add_option("--config", ablate_args.config)->required();
  abl->add_option("--backbone", ablate_args.backbone)->required();
  abl->add_option("--out", ablate_args.out_dir)->required();
  abl->add_flag("--t0-sweep", ablate_args.t0_sweep);
  abl->add_flag("--bridge-compare", ablate_args.bridge_compare);
  abl->add_flag("--force", ablate_args.force, "overwrite a non-empty run directory");

  bp::DiagnoseArgs diag_args;
  auto* diag = app.add_subcommand("diagnose", "trajectory-mismatch divergence curves");
  diag->add_option("--config", diag_args.config)->required();
  diag->add_option("--backbone", diag_args.backbone)->required();
  diag->add_option("--out", diag_args.out_dir)->required();

  std::string inspect_path;
  auto* insp = app.add_subcommand("inspect", "dump a checkpoint header");
  insp->add_option("checkpoint", inspect_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) return bp::cmd_pretrain(pretrain_args);
    if (*train) return bp::cmd_train_prompt(train_args);
    if (*rest) return bp::cmd_restore(restore_args);
    if (*abl) return bp::cmd_ablate(ablate_args);
    if (*diag) return bp::cmd_diagnose(diag_args);
    if (*insp) return bp::cmd_inspect(inspect_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
