#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "sefusion/commands.hpp"

using namespace sefusion;
namespace cli = sefusion::cli;

namespace {

void add_out_dir(CLI::App* cmd, std::string& target) {
  cmd->add_option("--out-dir", target,
                  std::string("Directory for outputs (default: $") + cli::kOutputDirEnv + " or .)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEFusion multi-modal classifier: synthetic data, training, evaluation"};
  app.set_config("--config", "", "TOML/INI file with option values (flags override it)");
  app.require_subcommand(1);

  cli::SynthOptions so;
  std::size_t n_val = 0, n_test = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic feature file");
  synth->add_option("--task", so.task, "Sub-task id (A, B1-B4, C1-C4)")->capture_default_str();
  synth->add_option("--n", so.n, "Train records")->capture_default_str();
  auto* n_val_opt = synth->add_option("--n-validation", n_val, "Validation records (default n/5)");
  auto* n_test_opt = synth->add_option("--n-test", n_test, "Test records (default n/5)");
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--separability", so.separability, "0 = no class signal, 1 = 6-sigma margins")
      ->capture_default_str();
  synth->add_option("--proportions", so.proportions,
                    "Class proportions: comma list, or 'reference' for the released train split");
  synth->add_option("--text-dim", so.text_dim)->capture_default_str();
  synth->add_option("--image-dim", so.image_dim)->capture_default_str();
  synth->add_option("--noise", so.noise)->capture_default_str();
  synth->add_option("--out", so.out, "Output path; a .gz suffix writes gzip");
  add_out_dir(synth, so.out_dir);

  cli::TrainOptions to;
  bool no_biases = false;
  auto* train_cmd = app.add_subcommand("train", "Train one sub-task and write a checkpoint");
  train_cmd->add_option("--task", to.task)->capture_default_str();
  train_cmd->add_option("--data", to.data, "Feature file (.jsonl or .jsonl.gz)")->required();
  train_cmd->add_option("--seed", to.seed)->capture_default_str();
  train_cmd->add_option("--batch-size", to.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", to.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", to.epochs)->capture_default_str();
  train_cmd->add_option("--layers", to.n_layers, "Dense layers in the head (default 2 for A/B, 5 for C)");
  train_cmd->add_option("--hidden", to.hidden_width, "Hidden layer width")->capture_default_str();
  train_cmd->add_option("--tau", to.tau, "Logit adjustment strength")->capture_default_str();
  train_cmd->add_flag("--no-biases", no_biases, "Drop every bias term");
  train_cmd->add_option("--precision", to.precision, "32 or 64")->capture_default_str();
  train_cmd->add_flag("--smooth-prior", to.smooth_prior, "Add one to every class count");
  train_cmd->add_option("--select-on", to.select_on, "accuracy or weighted-f1")
      ->capture_default_str();
  train_cmd->add_option("--activation", to.activation, "softmax, or sigmoid for two classes")
      ->capture_default_str();
  train_cmd->add_option("--architecture", to.architecture, "sefusion or concat")
      ->capture_default_str();
  train_cmd->add_option("--log-every", to.log_every, "Print every k-th epoch to stderr");
  train_cmd->add_option("--checkpoint", to.checkpoint, "Checkpoint path");
  add_out_dir(train_cmd, to.out_dir);

  cli::EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Weighted-F1 of a checkpoint (or a B/C group)");
  eval->add_option("--checkpoint", eo.checkpoint);
  eval->add_option("--group", eo.group, "B or C: average over four checkpoints");
  eval->add_option("--checkpoints", eo.checkpoints, "Group checkpoints in member order")
      ->delimiter(',');
  eval->add_option("--data", eo.data, "One feature file, or one per group member")
      ->required()
      ->delimiter(',');
  eval->add_option("--task", eo.task, "Sub-task to report as (e.g. C4 for a B4 checkpoint)");
  eval->add_option("--split", eo.splits, "train, validation, test (default: all present)")
      ->delimiter(',');
  eval->add_option("--out", eo.out, "Report path");
  add_out_dir(eval, eo.out_dir);

  cli::PredictOptions po;
  auto* predict_cmd = app.add_subcommand("predict", "Class and probabilities for every record");
  predict_cmd->add_option("--checkpoint", po.checkpoint)->required();
  predict_cmd->add_option("--data", po.data)->required();
  predict_cmd->add_option("--out", po.out, "Predictions path (JSON lines)");
  add_out_dir(predict_cmd, po.out_dir);

  cli::ReportOptions ro;
  auto* report = app.add_subcommand("report", "Weighted-F1 table from evaluation reports");
  report->add_option("inputs", ro.inputs, "Evaluation report files");
  report->add_option("--summary", ro.summary, "Feature files whose label counts to print")
      ->delimiter(',');
  report->add_option("--out", ro.out, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    if (*synth) {
      if (*n_val_opt) so.n_validation = n_val;
      if (*n_test_opt) so.n_test = n_test;
      const auto r = cli::run_synth(so);
      std::cout << "wrote " << r.path << "\n" << format_summary(r.summary);
    } else if (*train_cmd) {
      to.biases = !no_biases;
      const auto r = cli::run_train(to, std::cerr);
      std::cout << "wrote " << r.checkpoint_path << "\nwrote " << r.history_path << "\n";
      if (r.history.selected_epoch) {
        const auto& best = r.history.epochs.at(static_cast<std::size_t>(*r.history.selected_epoch - 1));
        std::printf("selected epoch %d: validation accuracy %.4f, weighted-F1 %.4f\n", best.epoch,
                    best.validation_accuracy, best.validation_weighted_f1);
      }
    } else if (*eval) {
      const auto r = cli::run_eval(eo);
      std::cout << r.table << "wrote " << r.path << "\n";
    } else if (*predict_cmd) {
      const auto r = cli::run_predict(po);
      std::cout << "wrote " << r.count << " predictions to " << r.path << "\n";
    } else if (*report) {
      std::cout << cli::run_report(ro);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}
