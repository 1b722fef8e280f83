#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sefusion/data.hpp"
#include "sefusion/errors.hpp"
#include "sefusion/tasks.hpp"

namespace sefusion {

struct SynthConfig {
  std::string task = "A";
  std::uint64_t seed = 0;
  std::size_t train_size = 300;
  std::size_t validation_size = 60;
  std::size_t test_size = 60;
  // 0: every class has the same distribution. 1: class means sit 6 noise
  // standard deviations away from every pairwise bisecting hyperplane.
  double separability = 1.0;
  // Class proportions, one per class. Empty means uniform.
  std::vector<double> proportions;
  std::size_t text_dim = 768;
  std::size_t image_dim = 512;
  double noise = 1.0;
};

// Train-split proportions of the released dataset for `task`.
inline std::vector<double> reference_proportions(std::string_view task) {
  const auto& counts = task_spec(task).reference.train;
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0L));
  std::vector<double> out;
  for (long c : counts) out.push_back(static_cast<double>(c) / total);
  return out;
}

// Splits n into per-class counts by largest remainder; a class left empty
// then takes one record from the currently largest class.
inline std::vector<std::size_t> allocate_counts(std::size_t n, const std::vector<double>& proportions) {
  const std::size_t classes = proportions.size();
  if (n < classes) {
    throw UsageError("split size " + std::to_string(n) + " is smaller than the class count " +
                     std::to_string(classes));
  }
  std::vector<std::size_t> counts(classes, 0);
  std::vector<double> remainders(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = proportions[c] * static_cast<double>(n);
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    counts[c] = whole;
    assigned += whole;
    remainders[c] = exact - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % classes]] += 1;
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] > 0) continue;
    auto largest = std::max_element(counts.begin(), counts.end());
    *largest -= 1;
    counts[c] = 1;
  }
  return counts;
}

// Gaussian class-conditional clusters in the concatenated text+image space.
// Class means are separability * R * u_c for orthonormal random directions
// u_c, with R = 6 sqrt(2) * noise so that at separability 1 any two means are
// 12 noise deviations apart. Deterministic for a given config.
inline Dataset synth_dataset(const SynthConfig& cfg) {
  const auto& spec = task_spec(cfg.task);
  const std::size_t classes = spec.class_count();
  const std::size_t dim = cfg.text_dim + cfg.image_dim;
  if (cfg.text_dim == 0 || cfg.image_dim == 0) throw UsageError("feature widths must be positive");
  if (dim < classes) throw UsageError("total feature width is smaller than the class count");
  if (!(cfg.separability >= 0.0 && cfg.separability <= 1.0)) {
    throw UsageError("separability must lie in [0, 1]");
  }
  if (!(cfg.noise > 0.0) || !std::isfinite(cfg.noise)) throw UsageError("noise must be positive");

  std::vector<double> proportions = cfg.proportions;
  if (proportions.empty()) proportions.assign(classes, 1.0 / static_cast<double>(classes));
  if (proportions.size() != classes) {
    throw UsageError("expected " + std::to_string(classes) + " class proportions for task " +
                     spec.id + ", got " + std::to_string(proportions.size()));
  }
  double total = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0) || !std::isfinite(p)) throw UsageError("class proportions must be positive");
    total += p;
  }
  for (double& p : proportions) p /= total;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Orthonormal class directions by Gram-Schmidt on Gaussian draws.
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> u(dim);
    for (auto& v : u) v = normal(rng);
    for (const auto& prev : means) {
      const double dot = std::inner_product(u.begin(), u.end(), prev.begin(), 0.0);
      for (std::size_t k = 0; k < dim; ++k) u[k] -= dot * prev[k];
    }
    const double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    for (auto& v : u) v /= norm;
    means.push_back(std::move(u));
  }
  const double radius = cfg.separability * 6.0 * std::sqrt(2.0) * cfg.noise;
  for (auto& m : means)
    for (auto& v : m) v *= radius;

  Dataset ds;
  ds.text_dim = cfg.text_dim;
  ds.image_dim = cfg.image_dim;
  const std::pair<Split, std::size_t> sizes[] = {
      {Split::train, cfg.train_size},
      {Split::validation, cfg.validation_size},
      {Split::test, cfg.test_size}};
  for (const auto& [split, n] : sizes) {
    if (n == 0 && split != Split::train) continue;
    const auto counts = allocate_counts(n, proportions);
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < classes; ++c) labels.insert(labels.end(), counts[c], c);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      Record r;
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%05zu", std::string(split_name(split)).c_str(), i);
      r.id = id;
      r.split = split;
      const auto& mean = means[labels[i]];
      r.text_features.resize(cfg.text_dim);
      r.image_features.resize(cfg.image_dim);
      for (std::size_t k = 0; k < dim; ++k) {
        const double v = mean[k] + cfg.noise * normal(rng);
        if (k < cfg.text_dim) {
          r.text_features[k] = v;
        } else {
          r.image_features[k - cfg.text_dim] = v;
        }
      }
      r.labels[spec.id] = labels[i];
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

}  // namespace sefusion
