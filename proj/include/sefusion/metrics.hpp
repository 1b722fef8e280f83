#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sefusion/errors.hpp"

namespace sefusion {

// counts(i, j): samples of gold class i predicted as class j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  long operator()(std::size_t gold, std::size_t pred) const { return counts_[gold * classes_ + pred]; }
  long& operator()(std::size_t gold, std::size_t pred) { return counts_[gold * classes_ + pred]; }

  long total() const {
    long t = 0;
    for (long c : counts_) t += c;
    return t;
  }
  long gold_support(std::size_t cls) const {
    long t = 0;
    for (std::size_t j = 0; j < classes_; ++j) t += (*this)(cls, j);
    return t;
  }
  long predicted_count(std::size_t cls) const {
    long t = 0;
    for (std::size_t i = 0; i < classes_; ++i) t += (*this)(i, cls);
    return t;
  }

 private:
  std::size_t classes_;
  std::vector<long> counts_;
};

namespace detail {

inline void check_pair(std::span<const std::size_t> gold, std::span<const std::size_t> pred) {
  if (gold.size() != pred.size()) {
    throw UsageError("gold/pred length mismatch: " + std::to_string(gold.size()) + " vs " +
                     std::to_string(pred.size()));
  }
  if (gold.empty()) throw UsageError("no samples to score");
}

}  // namespace detail

inline ConfusionMatrix confusion(std::span<const std::size_t> gold,
                                 std::span<const std::size_t> pred, std::size_t classes) {
  detail::check_pair(gold, pred);
  ConfusionMatrix cm(classes);
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k] >= classes || pred[k] >= classes) {
      throw UsageError("class index out of range at position " + std::to_string(k));
    }
    cm(gold[k], pred[k]) += 1;
  }
  return cm;
}

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct F1Report {
  std::vector<ClassScores> classes;
  double weighted_f1 = 0.0;
};

// Precision, recall and F1 per class. Any 0/0 is taken as 0.
inline std::vector<ClassScores> per_class_f1(const ConfusionMatrix& cm) {
  std::vector<ClassScores> out(cm.classes());
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    const double tp = static_cast<double>(cm(i, i));
    const long predicted = cm.predicted_count(i);
    const long support = cm.gold_support(i);
    auto& s = out[i];
    s.support = support;
    s.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    s.recall = support > 0 ? tp / static_cast<double>(support) : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  }
  return out;
}

// Support-weighted mean of per-class F1, weights = gold-class share.
inline F1Report f1_report(const ConfusionMatrix& cm) {
  F1Report report;
  report.classes = per_class_f1(cm);
  const double total = static_cast<double>(cm.total());
  if (total == 0.0) return report;
  for (const auto& s : report.classes)
    report.weighted_f1 += static_cast<double>(s.support) / total * s.f1;
  return report;
}

inline double weighted_f1(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                          std::size_t classes) {
  return f1_report(confusion(gold, pred, classes)).weighted_f1;
}

// Arithmetic mean of sub-task weighted-F1 scores.
inline double average_weighted_f1(std::span<const double> scores) {
  if (scores.empty()) throw UsageError("average of an empty score list");
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

inline double accuracy(std::span<const std::size_t> gold, std::span<const std::size_t> pred) {
  detail::check_pair(gold, pred);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) hits += gold[k] == pred[k] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

}  // namespace sefusion
