#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sefusion/errors.hpp"
#include "sefusion/metrics.hpp"
#include "sefusion/tasks.hpp"

namespace sefusion {

// Weighted-F1 of one sub-task per split.
struct EvalReport {
  std::string task;  // as requested, e.g. "C4" even when the model is B4
  std::map<Split, double> weighted_f1;
  std::map<Split, double> accuracy;
  std::map<Split, long> samples;
};

// Sub-task reports of a group plus the per-split average-weighted-F1.
struct GroupReport {
  std::string group;
  std::vector<EvalReport> members;
  std::map<Split, double> average;
};

inline GroupReport make_group_report(std::string group, std::vector<EvalReport> members) {
  GroupReport g;
  g.group = std::move(group);
  g.members = std::move(members);
  for (Split s : kAllSplits) {
    std::vector<double> scores;
    for (const auto& m : g.members) {
      auto it = m.weighted_f1.find(s);
      if (it != m.weighted_f1.end()) scores.push_back(it->second);
    }
    if (!g.members.empty() && scores.size() == g.members.size()) {
      g.average[s] = average_weighted_f1(scores);
    }
  }
  return g;
}

namespace detail {

inline nlohmann::json split_map(const std::map<Split, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [s, v] : m) j[std::string(split_name(s))] = v;
  return j;
}

inline std::map<Split, double> split_map_from(const nlohmann::json& j) {
  std::map<Split, double> out;
  for (const auto& [k, v] : j.items()) {
    auto s = parse_split(k);
    if (!s) throw DataError("unknown split '" + k + "' in report");
    out[*s] = v.get<double>();
  }
  return out;
}

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json samples = nlohmann::json::object();
  for (const auto& [s, n] : r.samples) samples[std::string(split_name(s))] = n;
  return {{"task", r.task},
          {"weighted_f1", detail::split_map(r.weighted_f1)},
          {"accuracy", detail::split_map(r.accuracy)},
          {"samples", samples}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.weighted_f1 = detail::split_map_from(j.at("weighted_f1"));
  if (j.contains("accuracy")) r.accuracy = detail::split_map_from(j.at("accuracy"));
  if (j.contains("samples")) {
    for (const auto& [k, v] : j.at("samples").items()) {
      auto s = parse_split(k);
      if (!s) throw DataError("unknown split '" + k + "' in report");
      r.samples[*s] = v.get<long>();
    }
  }
  return r;
}

inline nlohmann::json to_json(const GroupReport& g) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : g.members) members.push_back(to_json(m));
  return {{"group", g.group},
          {"members", members},
          {"average_weighted_f1", detail::split_map(g.average)}};
}

inline GroupReport group_report_from_json(const nlohmann::json& j) {
  std::vector<EvalReport> members;
  for (const auto& m : j.at("members")) members.push_back(eval_report_from_json(m));
  return make_group_report(j.at("group").get<std::string>(), std::move(members));
}

// Weighted-F1 table laid out as Task | Sub-task | Train | Validation | Test,
// followed by the grouped averages. Missing values print as "-".
inline std::string render_table(const std::vector<EvalReport>& singles,
                                const std::vector<GroupReport>& groups) {
  auto cell = [](const std::map<Split, double>& m, Split s) {
    auto it = m.find(s);
    return it == m.end() ? std::string("-") : detail::fixed4(it->second);
  };
  auto line = [](std::string a, std::string b, std::string c, std::string d, std::string e) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-8s %-9s %-10s %-10s %s", a.c_str(), b.c_str(),
                  c.c_str(), d.c_str(), e.c_str());
    std::string out(buf);
    out.erase(out.find_last_not_of(' ') + 1);
    return out + "\n";
  };
  std::string out = line("Task", "Sub-task", "Train", "Validation", "Test");
  out += "weighted-F1\n";
  for (const auto& r : singles) {
    // The group is the id's letter, so an alias like C4 lists under C.
    out += line(r.task.substr(0, 1), r.task, cell(r.weighted_f1, Split::train),
                cell(r.weighted_f1, Split::validation), cell(r.weighted_f1, Split::test));
  }
  for (const auto& g : groups) {
    for (const auto& r : g.members) {
      out += line(g.group, r.task, cell(r.weighted_f1, Split::train),
                  cell(r.weighted_f1, Split::validation), cell(r.weighted_f1, Split::test));
    }
  }
  if (!groups.empty()) {
    out += "average-weighted-F1\n";
    for (const auto& g : groups) {
      out += line(g.group, "-", cell(g.average, Split::train), cell(g.average, Split::validation),
                  cell(g.average, Split::test));
    }
  }
  return out;
}

}  // namespace sefusion
