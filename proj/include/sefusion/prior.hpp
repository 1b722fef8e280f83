#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sefusion/errors.hpp"
#include "sefusion/matrix.hpp"

namespace sefusion {

// Class distribution of a training split, used for logit adjustment.
struct LabelPrior {
  std::vector<long> counts;
  std::vector<double> probabilities;

  // probabilities[i] = counts[i] / sum(counts). With `smooth`, one pseudo
  // count is added to every class first so no class ends up at zero.
  static LabelPrior from_counts(std::vector<long> counts, bool smooth = false) {
    if (counts.empty()) throw UsageError("prior needs at least one class");
    long total = 0;
    for (long c : counts) {
      if (c < 0) throw UsageError("negative class count");
      total += c + (smooth ? 1 : 0);
    }
    if (total == 0) throw UsageError("prior from an empty split");
    LabelPrior p;
    p.counts = std::move(counts);
    p.probabilities.reserve(p.counts.size());
    for (long c : p.counts) {
      p.probabilities.push_back(static_cast<double>(c + (smooth ? 1 : 0)) /
                                static_cast<double>(total));
    }
    return p;
  }

  static LabelPrior uniform(std::size_t classes) {
    return from_counts(std::vector<long>(classes, 1));
  }

  std::size_t size() const { return probabilities.size(); }

  // Index of the most frequent class; ties go to the lowest index.
  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probabilities.size(); ++i)
      if (probabilities[i] > probabilities[best]) best = i;
    return best;
  }

  void require_positive() const {
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      if (!(probabilities[i] > 0.0)) {
        throw PriorError("class " + std::to_string(i) +
                         " has zero prior probability; smooth the prior (--smooth-prior) "
                         "or add samples of that class to the training split");
      }
    }
  }

  // 1xC row of tau * log(prior), added to logits inside the loss.
  template <typename T>
  Matrix<T> adjustment(double tau) const {
    Matrix<T> row(1, probabilities.size());
    if (tau == 0.0) return row;
    require_positive();
    for (std::size_t i = 0; i < probabilities.size(); ++i)
      row[i] = static_cast<T>(tau * std::log(probabilities[i]));
    return row;
  }
};

}  // namespace sefusion
