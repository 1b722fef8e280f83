#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sefusion/errors.hpp"
#include "sefusion/matrix.hpp"
#include "sefusion/prior.hpp"
#include "sefusion/tasks.hpp"

namespace sefusion {

// One sample: pre-extracted text and image features plus labels keyed by
// canonical sub-task id. A sub-task without a label is simply absent.
struct Record {
  std::string id;
  Split split = Split::train;
  std::vector<double> text_features;
  std::vector<double> image_features;
  std::map<std::string, std::size_t> labels;

  std::optional<std::size_t> label(std::string_view task_id) const {
    auto it = labels.find(canonical_task_id(task_id));
    if (it == labels.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
  std::size_t text_dim = 0;
  std::size_t image_dim = 0;
  std::vector<Record> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Features and labels of every record in `split` that carries a label for
// `task`, in file order.
template <typename T>
struct LabeledSplit {
  Matrix<T> text;
  Matrix<T> image;
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
};

template <typename T>
LabeledSplit<T> labeled_split(const Dataset& ds, std::string_view task_id, Split split) {
  const auto& spec = task_spec(task_id);
  LabeledSplit<T> out;
  std::vector<T> text;
  std::vector<T> image;
  for (const auto& r : ds.records) {
    if (r.split != split) continue;
    auto label = r.label(spec.id);
    if (!label) continue;
    text.insert(text.end(), r.text_features.begin(), r.text_features.end());
    image.insert(image.end(), r.image_features.begin(), r.image_features.end());
    out.labels.push_back(*label);
    out.ids.push_back(r.id);
  }
  out.text = Matrix<T>(out.labels.size(), ds.text_dim, std::move(text));
  out.image = Matrix<T>(out.labels.size(), ds.image_dim, std::move(image));
  return out;
}

// Text clean-up applied before feature extraction. Tokens are maximal runs
// of non-whitespace; whitespace is copied through untouched.
//   - a token starting with '@' and at least one more character -> "@user"
//   - a token starting with http://, https:// or www. (any case) -> "http"
inline std::string preprocess_text(std::string_view raw) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto starts_with_ci = [](std::string_view token, std::string_view prefix) {
    if (token.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(token[i])) != prefix[i]) return false;
    }
    return true;
  };

  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (is_space(raw[i])) {
      out.push_back(raw[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && !is_space(raw[j])) ++j;
    const auto token = raw.substr(i, j - i);
    if (token.size() >= 2 && token[0] == '@') {
      out += "@user";
    } else if (starts_with_ci(token, "http://") || starts_with_ci(token, "https://") ||
               starts_with_ci(token, "www.")) {
      out += "http";
    } else {
      out.append(token);
    }
    i = j;
  }
  return out;
}

// Column-wise mean over per-token feature rows (T x D -> 1 x D).
template <typename T>
Matrix<T> average_pool(const Matrix<T>& token_features) {
  if (token_features.rows() == 0) throw UsageError("average_pool: no token rows");
  Matrix<T> out(1, token_features.cols());
  for (std::size_t r = 0; r < token_features.rows(); ++r)
    for (std::size_t c = 0; c < token_features.cols(); ++c) out[c] += token_features(r, c);
  const T n = static_cast<T>(token_features.rows());
  for (auto& v : out.values()) v /= n;
  return out;
}

// v / max(||v||_2, 1e-12). The zero vector maps to itself.
template <typename T>
Matrix<T> l2_normalize(Matrix<T> v) {
  double sq = 0.0;
  for (const auto& x : v.values()) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::max(std::sqrt(sq), 1e-12);
  for (auto& x : v.values()) x = static_cast<T>(static_cast<double>(x) / norm);
  return v;
}

inline LabelPrior compute_priors(const Dataset& ds, std::string_view task_id, Split split,
                                 bool smooth = false) {
  const auto& spec = task_spec(task_id);
  std::vector<long> counts(spec.class_count(), 0);
  long seen = 0;
  for (const auto& r : ds.records) {
    if (r.split != split) continue;
    if (auto label = r.label(spec.id)) {
      counts.at(*label) += 1;
      ++seen;
    }
  }
  if (seen == 0) {
    throw UsageError("no " + std::string(split_name(split)) + " records labeled for task " +
                     spec.id);
  }
  return LabelPrior::from_counts(std::move(counts), smooth);
}

// Rounds 100 * count / total half-up to a whole percent.
inline long whole_percent(long count, long total) {
  if (total <= 0) return 0;
  return (200 * count + total) / (2 * total);
}

struct TaskDistribution {
  std::vector<long> counts;
  std::vector<long> percents;
  long total = 0;
};

// Per split and per task label counts, laid out like the label-distribution
// tables: summary.splits[split][task] -> counts/percents.
struct DatasetSummary {
  std::map<Split, long> split_sizes;
  std::map<Split, std::map<std::string, TaskDistribution>> splits;
};

inline TaskDistribution make_distribution(std::vector<long> counts) {
  TaskDistribution d;
  d.counts = std::move(counts);
  for (long c : d.counts) d.total += c;
  for (long c : d.counts) d.percents.push_back(whole_percent(c, d.total));
  return d;
}

inline DatasetSummary summarize(const Dataset& ds) {
  DatasetSummary summary;
  for (Split s : kAllSplits) summary.split_sizes[s] = 0;
  std::map<Split, std::map<std::string, std::vector<long>>> counts;
  for (const auto& r : ds.records) {
    summary.split_sizes[r.split] += 1;
    for (const auto& [task, label] : r.labels) {
      auto& c = counts[r.split][task];
      if (c.empty()) c.assign(task_spec(task).class_count(), 0);
      c.at(label) += 1;
    }
  }
  for (auto& [split, per_task] : counts)
    for (auto& [task, c] : per_task) summary.splits[split][task] = make_distribution(std::move(c));
  return summary;
}

// "2,275" style thousands separators.
inline std::string with_thousands(long value) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  std::string out;
  const std::size_t n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[i]);
    const std::size_t left = n - 1 - i;
    if (left > 0 && left % 3 == 0) out.push_back(',');
  }
  return value < 0 ? "-" + out : out;
}

// "2,275(33%)"
inline std::string format_count_cell(long count, long percent) {
  return with_thousands(count) + "(" + std::to_string(percent) + "%)";
}

inline std::string format_summary(const DatasetSummary& summary) {
  std::string out;
  for (const auto& [split, per_task] : summary.splits) {
    out += std::string(split_name(split)) + " (" + std::to_string(summary.split_sizes.at(split)) +
           " records)\n";
    for (const auto& [task, dist] : per_task) {
      const auto& spec = task_spec(task);
      out += "  task " + task + ":";
      for (std::size_t i = 0; i < dist.counts.size(); ++i) {
        out += " " + spec.label_names[i] + " " + format_count_cell(dist.counts[i], dist.percents[i]);
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace sefusion
