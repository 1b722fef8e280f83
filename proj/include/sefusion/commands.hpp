#pragma once

// Implementations behind the command-line subcommands. Each run_* function
// takes a plain options struct, writes its files and returns what it wrote,
// so the commands can be driven from tests without spawning a process.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sefusion/checkpoint.hpp"
#include "sefusion/dataset_io.hpp"
#include "sefusion/report.hpp"
#include "sefusion/synth.hpp"
#include "sefusion/train.hpp"

namespace sefusion::cli {

inline constexpr const char* kOutputDirEnv = "SEFUSION_OUTPUT_DIR";

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kData;
}

// Explicit flag, else $SEFUSION_OUTPUT_DIR, else the working directory.
inline std::filesystem::path output_dir(const std::string& flag) {
  std::filesystem::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    dir = (env != nullptr && *env != '\0') ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw UsageError("not a number list: '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

template <typename F>
decltype(auto) with_precision(int bits, F&& f) {
  if (bits == 32) return f(float{});
  if (bits == 64) return f(double{});
  throw UsageError("precision must be 32 or 64, got " + std::to_string(bits));
}

// ---- synth ------------------------------------------------------------------

struct SynthOptions {
  std::string task = "A";
  std::size_t n = 300;                       // train records
  std::optional<std::size_t> n_validation;  // default n / 5, at least one per class
  std::optional<std::size_t> n_test;
  std::uint64_t seed = 0;
  double separability = 1.0;
  std::string proportions;  // "" uniform, "reference", or "p1,p2,..."
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  double noise = 1.0;
  std::string out;  // default <output dir>/synth_<task>.jsonl
  std::string out_dir;
};

struct SynthResult {
  std::string path;
  DatasetSummary summary;
};

inline SynthResult run_synth(const SynthOptions& o) {
  const auto& spec = task_spec(o.task);
  SynthConfig cfg;
  cfg.task = spec.id;
  cfg.seed = o.seed;
  cfg.train_size = o.n;
  const std::size_t held_out = std::max(o.n / 5, spec.class_count());
  cfg.validation_size = o.n_validation.value_or(held_out);
  cfg.test_size = o.n_test.value_or(held_out);
  cfg.separability = o.separability;
  if (o.proportions == "reference") {
    cfg.proportions = reference_proportions(spec.id);
  } else if (!o.proportions.empty()) {
    cfg.proportions = parse_number_list(o.proportions);
  }
  cfg.text_dim = o.text_dim;
  cfg.image_dim = o.image_dim;
  cfg.noise = o.noise;

  auto ds = synth_dataset(cfg);
  const std::string path =
      o.out.empty() ? (output_dir(o.out_dir) / ("synth_" + spec.id + ".jsonl")).string() : o.out;
  save_dataset(path, ds);
  return {path, summarize(ds)};
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string task = "A";
  std::string data;
  std::uint64_t seed = 0;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  int epochs = 100;
  int n_layers = 0;  // 0: 2 for task groups A and B, 5 for C
  std::size_t hidden_width = 64;
  double tau = 1.0;
  bool biases = true;
  int precision = 32;
  bool smooth_prior = false;
  std::string select_on = "accuracy";
  std::string activation = "softmax";
  std::string architecture = "sefusion";
  int log_every = 0;
  std::string checkpoint;  // default <output dir>/<task>.checkpoint.json
  std::string out_dir;
};

struct TrainResult {
  std::string checkpoint_path;
  std::string history_path;
  TrainingHistory history;
};

inline SelectionMetric parse_selection(const std::string& name) {
  if (name == "accuracy") return SelectionMetric::accuracy;
  if (name == "weighted-f1" || name == "weighted_f1") return SelectionMetric::weighted_f1;
  throw UsageError("unknown selection metric '" + name + "'");
}

inline TrainResult run_train(const TrainOptions& o, std::ostream& log = std::cerr) {
  const auto& spec = task_spec(o.task);
  if (o.data.empty()) throw UsageError("--data is required");
  const auto ds = load_dataset(o.data);

  ModelConfig mc;
  mc.architecture = parse_architecture(o.architecture);
  mc.tau = o.tau;
  mc.fusion = FusionConfig{ds.text_dim, ds.image_dim, o.biases};
  mc.head.n_layers = o.n_layers > 0 ? o.n_layers : default_layer_count(spec.id);
  mc.head.hidden_width = o.hidden_width;
  mc.head.output_classes = spec.class_count();
  mc.head.final_activation = parse_activation(o.activation);
  mc.head.biases = o.biases;

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.adam.learning_rate = o.learning_rate;
  tc.smooth_prior = o.smooth_prior;
  tc.select_on = parse_selection(o.select_on);
  tc.seed = o.seed;

  const auto dir = output_dir(o.out_dir);
  TrainResult result;
  result.checkpoint_path =
      o.checkpoint.empty() ? (dir / (spec.id + ".checkpoint.json")).string() : o.checkpoint;
  const auto ckpt_dir = std::filesystem::path(result.checkpoint_path).parent_path();
  result.history_path = ((ckpt_dir.empty() ? dir : ckpt_dir) / (spec.id + ".history.json")).string();

  nlohmann::json prior_json;
  with_precision(o.precision, [&](auto tag) {
    using T = decltype(tag);
    auto tm = train<T>(ds, spec.id, mc, tc);
    save_checkpoint(result.checkpoint_path, tm.model, o.precision, &tm.history);
    prior_json = {{"counts", tm.model.prior.counts},
                  {"probabilities", tm.model.prior.probabilities}};
    result.history = std::move(tm.history);
  });

  auto history = history_to_json(result.history);
  history["task"] = spec.id;
  history["prior"] = prior_json;
  write_json_file(result.history_path, history);

  if (o.log_every > 0) {
    for (const auto& e : result.history.epochs) {
      if (e.epoch % o.log_every != 0 && e.epoch != static_cast<int>(result.history.epochs.size()))
        continue;
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %4d  loss %.6f  val_acc %.4f  val_wf1 %.4f\n",
                    e.epoch, e.train_loss, e.validation_accuracy, e.validation_weighted_f1);
      log << line;
    }
  }
  return result;
}

// ---- eval -------------------------------------------------------------------

// Upper-cased id that keeps the alias spelling ("c4" -> "C4", not "B4").
inline std::string display_task_id(std::string id) {
  std::transform(id.begin(), id.end(), id.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return id;
}

// Scores one checkpoint on `ds`. `requested` may be an alias of the
// checkpoint's task (C4 for a B4 model); empty means the checkpoint's task.
// With no explicit splits, every split that has labeled records is scored.
inline EvalReport evaluate_checkpoint(const std::string& checkpoint_path, const Dataset& ds,
                                      const std::string& requested,
                                      const std::vector<Split>& splits) {
  const auto j = read_json_file(checkpoint_path);
  const auto info = checkpoint_info(j);
  const std::string shown = requested.empty() ? info.task : requested;
  if (canonical_task_id(shown) != canonical_task_id(info.task)) {
    throw DataError("checkpoint " + checkpoint_path + " was trained for task " + info.task +
                    ", not " + shown);
  }
  (void)task_spec(shown);

  return with_precision(info.precision, [&](auto tag) {
    using T = decltype(tag);
    const auto model = checkpoint_from_json<T>(j);
    if (model.config.fusion.text_dim != ds.text_dim ||
        model.config.fusion.image_dim != ds.image_dim) {
      throw ShapeError("checkpoint expects feature widths " +
                       std::to_string(model.config.fusion.text_dim) + "/" +
                       std::to_string(model.config.fusion.image_dim) + ", dataset has " +
                       std::to_string(ds.text_dim) + "/" + std::to_string(ds.image_dim));
    }
    EvalReport report;
    report.task = display_task_id(shown);
    std::vector<Split> wanted = splits;
    const bool explicit_splits = !wanted.empty();
    if (!explicit_splits) wanted.assign(kAllSplits.begin(), kAllSplits.end());
    for (Split s : wanted) {
      const auto part = labeled_split<T>(ds, info.task, s);
      if (part.size() == 0) {
        if (explicit_splits) {
          throw DataError("split '" + std::string(split_name(s)) + "' has no records labeled for task " +
                          shown);
        }
        continue;
      }
      const auto scores = score_split(model, part);
      report.weighted_f1[s] = scores.weighted_f1;
      report.accuracy[s] = scores.accuracy;
      report.samples[s] = static_cast<long>(part.size());
    }
    if (report.weighted_f1.empty()) throw DataError("no records labeled for task " + shown);
    return report;
  });
}

struct EvalOptions {
  std::string checkpoint;
  std::vector<std::string> checkpoints;  // group mode: one per member, in member order
  std::string group;                     // "", "B" or "C"
  std::vector<std::string> data;         // one file, or one per group member
  std::string task;
  std::vector<std::string> splits;
  std::string out;  // default <output dir>/<task or group>.eval.json
  std::string out_dir;
};

struct EvalResult {
  std::string path;
  std::optional<EvalReport> single;
  std::optional<GroupReport> group;
  std::string table;
};

inline std::vector<Split> parse_splits(const std::vector<std::string>& names) {
  std::vector<Split> out;
  for (const auto& n : names) {
    auto s = parse_split(n);
    if (!s) throw UsageError("unknown split '" + n + "'");
    out.push_back(*s);
  }
  return out;
}

inline EvalResult run_eval(const EvalOptions& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  const auto splits = parse_splits(o.splits);
  EvalResult result;

  if (!o.group.empty()) {
    const auto members = group_members(o.group);
    if (members.size() < 2 || o.group == "A") throw UsageError("--group must be B or C");
    if (o.checkpoints.size() != members.size()) {
      throw UsageError("group " + o.group + " needs " + std::to_string(members.size()) +
                       " checkpoints, got " + std::to_string(o.checkpoints.size()));
    }
    if (o.data.size() != 1 && o.data.size() != members.size()) {
      throw UsageError("give one data file or one per group member");
    }
    std::vector<Dataset> datasets;
    for (const auto& path : o.data) datasets.push_back(load_dataset(path));
    std::vector<EvalReport> reports;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& ds = datasets.size() == 1 ? datasets[0] : datasets[i];
      auto r = evaluate_checkpoint(o.checkpoints[i], ds, members[i], splits);
      r.task = members[i];
      reports.push_back(std::move(r));
    }
    result.group = make_group_report(o.group, std::move(reports));
    result.path = o.out.empty() ? (output_dir(o.out_dir) / (o.group + ".eval.json")).string() : o.out;
    write_json_file(result.path, to_json(*result.group));
    result.table = render_table({}, {*result.group});
    return result;
  }

  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (o.data.size() != 1) throw UsageError("single-task evaluation takes one data file");
  const auto ds = load_dataset(o.data.front());
  auto r = evaluate_checkpoint(o.checkpoint, ds, o.task, splits);
  result.single = r;
  result.path = o.out.empty() ? (output_dir(o.out_dir) / (r.task + ".eval.json")).string() : o.out;
  write_json_file(result.path, to_json(r));
  result.table = render_table({r}, {});
  return result;
}

// ---- predict ----------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string data;
  std::string out;  // default <output dir>/<task>.predictions.jsonl
  std::string out_dir;
};

struct PredictResult {
  std::string path;
  std::size_t count = 0;
};

// One JSON object per record: {"id", "label" (class name), "probabilities"}.
inline PredictResult run_predict(const PredictOptions& o) {
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (o.data.empty()) throw UsageError("--data is required");
  const auto j = read_json_file(o.checkpoint);
  const auto info = checkpoint_info(j);
  const auto& spec = task_spec(info.task);
  const auto ds = load_dataset(o.data);

  std::string text;
  with_precision(info.precision, [&](auto tag) {
    using T = decltype(tag);
    const auto model = checkpoint_from_json<T>(j);
    if (ds.empty()) return;
    if (model.config.fusion.text_dim != ds.text_dim ||
        model.config.fusion.image_dim != ds.image_dim) {
      throw ShapeError("checkpoint expects feature widths " +
                       std::to_string(model.config.fusion.text_dim) + "/" +
                       std::to_string(model.config.fusion.image_dim) + ", input has " +
                       std::to_string(ds.text_dim) + "/" + std::to_string(ds.image_dim));
    }
    std::vector<T> tv, iv;
    for (const auto& r : ds.records) {
      tv.insert(tv.end(), r.text_features.begin(), r.text_features.end());
      iv.insert(iv.end(), r.image_features.begin(), r.image_features.end());
    }
    const Matrix<T> xt(ds.size(), ds.text_dim, std::move(tv));
    const Matrix<T> xi(ds.size(), ds.image_dim, std::move(iv));
    const auto preds = predict_rows(model, xt, xi);
    for (std::size_t k = 0; k < preds.size(); ++k) {
      nlohmann::json line{{"id", ds.records[k].id},
                          {"label", spec.label_names[preds[k].label]},
                          {"probabilities", preds[k].probabilities}};
      text += line.dump() + "\n";
    }
  });

  PredictResult result;
  result.count = ds.size();
  result.path = o.out.empty()
                    ? (output_dir(o.out_dir) / (spec.id + ".predictions.jsonl")).string()
                    : o.out;
  detail::write_text_file(result.path, text);
  return result;
}

// ---- report -----------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> inputs;   // eval reports, single or group
  std::vector<std::string> summary;  // feature files whose label distribution to print
  std::string out;                   // optional text file for the table
};

inline std::string run_report(const ReportOptions& o) {
  if (o.inputs.empty() && o.summary.empty()) throw UsageError("nothing to report");
  std::string text;
  for (const auto& path : o.summary) {
    text += path + "\n" + format_summary(summarize(load_dataset(path)));
  }
  if (!o.inputs.empty()) {
    std::vector<EvalReport> singles;
    std::vector<GroupReport> groups;
    for (const auto& path : o.inputs) {
      const auto j = read_json_file(path);
      try {
        if (j.contains("group")) {
          groups.push_back(group_report_from_json(j));
        } else {
          singles.push_back(eval_report_from_json(j));
        }
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": not an evaluation report (" + e.what() + ")");
      }
    }
    if (!text.empty()) text += "\n";
    text += render_table(singles, groups);
  }
  if (!o.out.empty()) detail::write_text_file(o.out, text);
  return text;
}

}  // namespace sefusion::cli
