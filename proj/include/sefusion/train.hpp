#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sefusion/autodiff.hpp"
#include "sefusion/data.hpp"
#include "sefusion/errors.hpp"
#include "sefusion/metrics.hpp"
#include "sefusion/model.hpp"
#include "sefusion/optim.hpp"

namespace sefusion {

enum class SelectionMetric { accuracy, weighted_f1 };

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 256;
  AdamConfig adam;
  bool smooth_prior = false;
  SelectionMetric select_on = SelectionMetric::accuracy;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
  double validation_weighted_f1 = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::optional<int> selected_epoch;
};

template <typename T>
struct TrainedModel {
  Model<T> model;
  TrainingHistory history;
};

struct SplitScores {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<std::size_t> gold;
  std::vector<std::size_t> predicted;
};

template <typename T>
SplitScores score_split(const Model<T>& m, const LabeledSplit<T>& split) {
  if (split.size() == 0) throw UsageError("cannot score an empty split");
  SplitScores out;
  out.gold = split.labels;
  for (const auto& p : predict_rows(m, split.text, split.image)) out.predicted.push_back(p.label);
  out.accuracy = accuracy(out.gold, out.predicted);
  out.weighted_f1 = weighted_f1(out.gold, out.predicted, m.head.config.output_classes);
  return out;
}

// Mini-batch Adam on the train split; after every epoch the model is scored
// on the validation split and the best epoch (earliest on ties) is restored
// at the end. Priors come from the train split only. Deterministic per seed.
template <typename T>
TrainedModel<T> train(const Dataset& ds, const std::string& task_id, const ModelConfig& model_cfg,
                      const TrainConfig& cfg) {
  const auto& spec = task_spec(task_id);
  if (cfg.epochs < 0) throw UsageError("epoch count must be non-negative");
  if (cfg.batch_size == 0) throw UsageError("batch size must be positive");
  if (model_cfg.fusion.text_dim != ds.text_dim || model_cfg.fusion.image_dim != ds.image_dim) {
    throw ShapeError("dataset widths " + std::to_string(ds.text_dim) + "/" +
                     std::to_string(ds.image_dim) + " do not match model widths " +
                     std::to_string(model_cfg.fusion.text_dim) + "/" +
                     std::to_string(model_cfg.fusion.image_dim));
  }

  const auto train_split = labeled_split<T>(ds, spec.id, Split::train);
  const auto val_split = labeled_split<T>(ds, spec.id, Split::validation);
  if (train_split.size() == 0) throw UsageError("no train records labeled for task " + spec.id);
  if (val_split.size() == 0) throw UsageError("no validation records labeled for task " + spec.id);

  auto prior = compute_priors(ds, spec.id, Split::train, cfg.smooth_prior);
  prior.require_positive();

  TrainedModel<T> result;
  result.model = Model<T>::init(model_cfg, spec.id, std::move(prior), cfg.seed);
  auto& model = result.model;
  auto params = model.parameters();
  AdamState<T> adam(params, cfg.adam);

  std::seed_seq shuffle_seq{cfg.seed, std::uint64_t{1}};
  std::mt19937_64 shuffle_rng(shuffle_seq);
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Matrix<T>> best_values;
  double best_score = -1.0;
  Tape<T> tape;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      std::vector<std::size_t> labels;
      labels.reserve(rows.size());
      for (auto r : rows) labels.push_back(train_split.labels[r]);

      zero_grads<T>(params);
      Var loss = record_batch_loss(tape, model, gather_rows(train_split.text, rows),
                                   gather_rows(train_split.image, rows), std::move(labels));
      const double batch_loss_value = static_cast<double>(tape.value(loss)[0]);
      if (!std::isfinite(batch_loss_value)) {
        throw NumericalError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      loss_sum += batch_loss_value * static_cast<double>(rows.size());
      tape.backward(loss);
      adam_step<T>(params, adam);
    }

    const auto scores = score_split(model, val_split);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.validation_accuracy = scores.accuracy;
    rec.validation_weighted_f1 = scores.weighted_f1;
    result.history.epochs.push_back(rec);

    const double score =
        cfg.select_on == SelectionMetric::accuracy ? scores.accuracy : scores.weighted_f1;
    if (score > best_score) {
      best_score = score;
      result.history.selected_epoch = epoch;
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
    }
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  }
  for (auto* p : params) p->zero_grad();
  return result;
}

}  // namespace sefusion
