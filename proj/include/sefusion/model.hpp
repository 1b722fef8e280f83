#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sefusion/autodiff.hpp"
#include "sefusion/errors.hpp"
#include "sefusion/fusion.hpp"
#include "sefusion/matrix.hpp"
#include "sefusion/prior.hpp"
#include "sefusion/tasks.hpp"

namespace sefusion {

enum class FinalActivation { softmax, sigmoid };

// sefusion: head over the fused half-width features.
// concat: head directly over concat(xt, xi); ablation baseline.
enum class Architecture { sefusion, concat };

struct HeadConfig {
  int n_layers = 2;
  std::size_t hidden_width = 64;
  std::size_t output_classes = 3;
  // sigmoid is only valid for two classes and uses a single output logit.
  FinalActivation final_activation = FinalActivation::softmax;
  bool biases = true;

  std::size_t output_units() const {
    return final_activation == FinalActivation::sigmoid ? 1 : output_classes;
  }

  void validate() const {
    if (n_layers < 1) throw UsageError("head needs at least one dense layer");
    if (output_classes < 2) throw UsageError("head needs at least two output classes");
    if (n_layers > 1 && hidden_width == 0) throw UsageError("hidden width must be positive");
    if (final_activation == FinalActivation::sigmoid && output_classes != 2) {
      throw UsageError("sigmoid output is only available for two-class tasks");
    }
  }
};

// n_layers dense layers: (n_layers - 1) hidden ReLU layers of hidden_width,
// then a linear output layer producing raw logits.
template <typename T>
struct Head {
  HeadConfig config;
  std::size_t input_width = 0;
  std::vector<Parameter<T>> weights;
  std::vector<Parameter<T>> biases;

  static Head zeros(const HeadConfig& cfg, std::size_t input_width) {
    cfg.validate();
    if (input_width == 0) throw ShapeError("head input width must be positive");
    Head h;
    h.config = cfg;
    h.input_width = input_width;
    std::size_t fan_in = input_width;
    for (int l = 0; l < cfg.n_layers; ++l) {
      const bool last = l + 1 == cfg.n_layers;
      const std::size_t fan_out = last ? cfg.output_units() : cfg.hidden_width;
      const auto idx = std::to_string(l);
      h.weights.emplace_back("head.w" + idx, Matrix<T>(fan_in, fan_out));
      h.biases.emplace_back("head.b" + idx, Matrix<T>(1, fan_out));
      fan_in = fan_out;
    }
    return h;
  }

  template <typename Rng>
  static Head init(const HeadConfig& cfg, std::size_t input_width, Rng& rng) {
    auto h = zeros(cfg, input_width);
    for (auto& w : h.weights) w.value = glorot_uniform<T>(w.value.rows(), w.value.cols(), rng);
    return h;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.push_back(&weights[l]);
      if (config.biases) out.push_back(&biases[l]);
    }
    return out;
  }
};

// [0, l] per row: softmax of the pair is [1 - sigmoid(l), sigmoid(l)].
template <typename T>
Matrix<T> widen_binary_logit(const Matrix<T>& single) {
  Matrix<T> out(single.rows(), 2);
  for (std::size_t r = 0; r < single.rows(); ++r) out(r, 1) = single(r, 0);
  return out;
}

// Raw logits (BxC) for BxF fused features.
template <typename T>
Matrix<T> head_forward(const Matrix<T>& fused, const Head<T>& head) {
  if (fused.cols() != head.input_width) {
    throw ShapeError("head expects width " + std::to_string(head.input_width) + ", got " +
                     fused.shape_string());
  }
  Matrix<T> x = fused;
  const std::size_t n = head.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    x = affine(x, head.weights[l], head.config.biases ? &head.biases[l] : nullptr);
    if (l + 1 < n) x = relu(std::move(x));
  }
  if (head.config.final_activation == FinalActivation::sigmoid) return widen_binary_logit(x);
  return x;
}

template <typename T>
Var record_head(Tape<T>& tape, Var fused, Head<T>& head) {
  Var x = fused;
  const std::size_t n = head.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    x = tape.matmul(x, tape.param(head.weights[l]));
    if (head.config.biases) x = tape.add_bias(x, tape.param(head.biases[l]));
    if (l + 1 < n) x = tape.relu(x);
  }
  if (head.config.final_activation == FinalActivation::sigmoid) return tape.binary_logits(x);
  return x;
}

// Head applied straight to concat(xt, xi), without fusion.
template <typename T>
Matrix<T> concat_baseline_forward(const Matrix<T>& xt, const Matrix<T>& xi, const Head<T>& head) {
  return head_forward(concat_cols(xt, xi), head);
}

// -log softmax(logits + tau * log(prior))[label] for a single 1xC row.
template <typename T>
T logit_adjusted_loss(const Matrix<T>& logits, std::size_t label, const LabelPrior& prior,
                      double tau = 1.0) {
  if (logits.rows() != 1) throw ShapeError("loss expects a 1xC row, got " + logits.shape_string());
  if (prior.size() != logits.cols()) {
    throw ShapeError("prior has " + std::to_string(prior.size()) + " classes, logits have " +
                     std::to_string(logits.cols()));
  }
  if (label >= logits.cols()) {
    throw UsageError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.cols()) + " classes");
  }
  const auto adjusted = add_row_broadcast(logits, prior.adjustment<T>(tau));
  return logsumexp_rows(adjusted)[0] - adjusted(0, label);
}

struct ModelConfig {
  Architecture architecture = Architecture::sefusion;
  FusionConfig fusion;
  HeadConfig head;
  double tau = 1.0;

  std::size_t head_input_width() const {
    return architecture == Architecture::sefusion ? fusion.fused_dim() : fusion.total_dim();
  }
};

template <typename T>
struct Model {
  ModelConfig config;
  std::string task_id;
  LabelPrior prior;
  std::uint64_t seed = 0;
  FusionParams<T> fusion;
  Head<T> head;

  // Seeded Glorot-uniform weights and zero biases.
  static Model init(const ModelConfig& cfg, std::string task, LabelPrior prior,
                    std::uint64_t seed) {
    cfg.fusion.validate();
    const auto& spec = task_spec(task);
    if (cfg.head.output_classes != spec.class_count()) {
      throw UsageError("head has " + std::to_string(cfg.head.output_classes) +
                       " outputs but task " + spec.id + " has " +
                       std::to_string(spec.class_count()) + " classes");
    }
    if (prior.size() != spec.class_count()) throw UsageError("prior does not match task classes");
    Model m;
    m.config = cfg;
    m.task_id = spec.id;
    m.prior = std::move(prior);
    m.seed = seed;
    std::seed_seq seq{seed, std::uint64_t{0}};
    std::mt19937_64 rng(seq);
    m.fusion = FusionParams<T>::init(cfg.fusion, rng);
    m.head = Head<T>::init(cfg.head, cfg.head_input_width(), rng);
    return m;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    if (config.architecture == Architecture::sefusion) out = fusion.parameters();
    for (auto* p : head.parameters()) out.push_back(p);
    return out;
  }

  // Every stored tensor, including biases that are switched off.
  std::vector<Parameter<T>*> all_tensors() {
    std::vector<Parameter<T>*> out{&fusion.w1, &fusion.w2, &fusion.w3, &fusion.w4,
                                   &fusion.b1, &fusion.b2, &fusion.b3, &fusion.b4};
    for (std::size_t l = 0; l < head.weights.size(); ++l) {
      out.push_back(&head.weights[l]);
      out.push_back(&head.biases[l]);
    }
    return out;
  }
};

// Raw logits for a batch (one sample per row).
template <typename T>
Matrix<T> model_logits(const Model<T>& m, const Matrix<T>& xt, const Matrix<T>& xi) {
  if (m.config.architecture == Architecture::concat) {
    if (xt.cols() != m.config.fusion.text_dim || xi.cols() != m.config.fusion.image_dim) {
      throw ShapeError("inputs " + xt.shape_string() + "/" + xi.shape_string() +
                       " do not match model widths");
    }
    return concat_baseline_forward(xt, xi, m.head);
  }
  return head_forward(sefusion_forward(xt, xi, m.fusion).fused, m.head);
}

template <typename T>
Var record_logits(Tape<T>& tape, Model<T>& m, Var xt, Var xi) {
  if (m.config.architecture == Architecture::concat) {
    detail::require_widths(tape.value(xt), tape.value(xi), m.config.fusion);
    return record_head(tape, tape.concat_cols(xt, xi), m.head);
  }
  return record_head(tape, record_fusion(tape, xt, xi, m.fusion).fused, m.head);
}

// Mean logit-adjusted loss over a batch, computed sample by sample through
// the non-differentiable forward path.
template <typename T>
double batch_loss(const Model<T>& m, const Matrix<T>& xt, const Matrix<T>& xi,
                  std::span<const std::size_t> labels) {
  if (labels.size() != xt.rows()) throw ShapeError("label count does not match batch rows");
  double total = 0.0;
  for (std::size_t r = 0; r < xt.rows(); ++r) {
    Matrix<T> rt(1, xt.cols(), std::vector<T>(xt.row_view(r).begin(), xt.row_view(r).end()));
    Matrix<T> ri(1, xi.cols(), std::vector<T>(xi.row_view(r).begin(), xi.row_view(r).end()));
    total += static_cast<double>(logit_adjusted_loss(model_logits(m, rt, ri), labels[r], m.prior,
                                                     m.config.tau));
  }
  return total / static_cast<double>(labels.size());
}

template <typename T>
Var record_batch_loss(Tape<T>& tape, Model<T>& m, const Matrix<T>& xt, const Matrix<T>& xi,
                      std::vector<std::size_t> labels) {
  Var logits = record_logits(tape, m, tape.constant(xt), tape.constant(xi));
  return tape.adjusted_cross_entropy(logits, std::move(labels),
                                     m.prior.template adjustment<T>(m.config.tau));
}

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

// Index of the largest entry of row r; ties go to the lowest index.
template <typename T>
std::size_t argmax_row(const Matrix<T>& x, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < x.cols(); ++c)
    if (x(r, c) > x(r, best)) best = c;
  return best;
}

// probabilities = softmax(logits + tau * log(prior)), the same adjusted
// scores the loss is trained on; label = argmax.
template <typename T>
std::vector<Prediction> predict_rows(const Model<T>& m, const Matrix<T>& xt, const Matrix<T>& xi) {
  const auto logits = add_row_broadcast(model_logits(m, xt, xi),
                                        m.prior.template adjustment<T>(m.config.tau));
  const auto probs = softmax(logits);
  std::vector<Prediction> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    out[r].label = argmax_row(logits, r);
    out[r].probabilities.assign(probs.row_view(r).begin(), probs.row_view(r).end());
  }
  return out;
}

template <typename T>
Prediction predict(const Model<T>& m, const Matrix<T>& xt, const Matrix<T>& xi) {
  if (xt.rows() != 1 || xi.rows() != 1) throw ShapeError("predict expects single rows");
  return predict_rows(m, xt, xi).front();
}

}  // namespace sefusion
