#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sefusion/errors.hpp"

namespace sefusion {

enum class Split { train, validation, test };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation, Split::test};

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  return std::nullopt;
}

// Label counts of the Memotion 3 release, per split, in label_names order.
struct ReferenceCounts {
  std::vector<long> train;
  std::vector<long> validation;
  std::vector<long> test;

  const std::vector<long>& operator[](Split s) const {
    switch (s) {
      case Split::train: return train;
      case Split::validation: return validation;
      case Split::test: return test;
    }
    return train;
  }
};

// One classification sub-task. Tasks B and C are split into four binary /
// four-way problems each; C4 is the same problem as B4, so eight specs exist.
struct TaskSpec {
  std::string id;
  std::string group;  // "A", "B" or "C"
  std::string description;
  std::vector<std::string> label_names;
  ReferenceCounts reference;

  std::size_t class_count() const { return label_names.size(); }

  std::optional<std::size_t> label_index(std::string_view name) const {
    auto it = std::find(label_names.begin(), label_names.end(), name);
    if (it == label_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - label_names.begin());
  }
};

inline const std::vector<TaskSpec>& all_tasks() {
  static const std::vector<TaskSpec> tasks = {
      {"A", "A", "positive, negative or neutral",
       {"positive", "neutral", "negative"},
       {{2275, 2970, 1755}, {341, 579, 580}, {586, 533, 381}}},
      {"B1", "B", "humorous or not", {"yes", "no"}, {{5990, 1010}, {1401, 99}, {1389, 111}}},
      {"B2", "B", "sarcastic or not", {"yes", "no"}, {{5524, 1476}, {1377, 123}, {1367, 133}}},
      {"B3", "B", "offensive or not", {"yes", "no"}, {{2736, 4264}, {859, 641}, {825, 675}}},
      {"B4", "B", "motivational or not", {"yes", "no"}, {{830, 6170}, {43, 1457}, {56, 1444}}},
      {"C1", "C", "scale of humor",
       {"not_funny", "funny", "very_funny", "hilarious"},
       {{1010, 3393, 2038, 559}, {99, 973, 375, 53}, {111, 928, 406, 55}}},
      {"C2", "C", "scale of sarcasm",
       {"not_sarcastic", "general", "twisted_meaning", "very_twisted"},
       {{1476, 1953, 3021, 550}, {123, 977, 376, 24}, {133, 936, 403, 28}}},
      {"C3", "C", "scale of offense",
       {"not_offensive", "slight", "very_offensive", "hateful_offensive"},
       {{4264, 1935, 610, 191}, {641, 804, 44, 11}, {675, 762, 50, 13}}},
  };
  return tasks;
}

// Maps aliases onto the canonical id ("C4" -> "B4"); case-insensitive.
inline std::string canonical_task_id(std::string_view id) {
  std::string up(id);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "C4") return "B4";
  return up;
}

inline const TaskSpec& task_spec(std::string_view id) {
  const auto canonical = canonical_task_id(id);
  for (const auto& t : all_tasks())
    if (t.id == canonical) return t;
  throw UsageError("unknown task '" + std::string(id) +
                   "' (expected A, B1-B4, C1-C4)");
}

// Sub-task ids that make up a group, as reported: group C lists C4, which
// resolves to the B4 model.
inline std::vector<std::string> group_members(std::string_view group) {
  if (group == "A") return {"A"};
  if (group == "B") return {"B1", "B2", "B3", "B4"};
  if (group == "C") return {"C1", "C2", "C3", "C4"};
  throw UsageError("unknown task group '" + std::string(group) + "' (expected A, B or C)");
}

// Hidden+output dense layer count used per group: 2 for A and B, 5 for C.
inline int default_layer_count(std::string_view task_id) {
  return task_spec(task_id).group == "C" ? 5 : 2;
}

}  // namespace sefusion
