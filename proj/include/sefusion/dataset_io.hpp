#pragma once

#include <zlib.h>

#include <cstddef>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sefusion/data.hpp"
#include "sefusion/errors.hpp"

namespace sefusion {

// Feature file: JSON lines. The first line is a header
//   {"format":"sefusion-features","version":1,"text_dim":768,"image_dim":512}
// and every following line is one record
//   {"id":"...","split":"train","labels":{"A":"neutral"},
//    "text_features":[...],"image_features":[...]}
// Labels may be given by name or index; null means "no label". Reals are
// written in shortest round-trip form, so load(save(ds)) == ds bit for bit.
// A path ending in ".gz" is written gzip-compressed; reading accepts either.

inline constexpr std::string_view kFeatureFormat = "sefusion-features";
inline constexpr int kFeatureFormatVersion = 1;

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::string read_text_file(const std::string& path) {
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file(gzopen(path.c_str(), "rb"), gzclose);
  if (!file) throw DataError("cannot open " + path);
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(file.get(), buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  if (n < 0) throw DataError("read error in " + path);
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  if (ends_with(path, ".gz")) {
    std::unique_ptr<gzFile_s, int (*)(gzFile)> file(gzopen(path.c_str(), "wb"), gzclose);
    if (!file) throw DataError("cannot write " + path);
    if (!content.empty() &&
        gzwrite(file.get(), content.data(), static_cast<unsigned>(content.size())) <= 0) {
      throw DataError("write error in " + path);
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write error in " + path);
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace detail

inline nlohmann::json record_to_json(const Record& r) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [task, index] : r.labels) labels[task] = task_spec(task).label_names.at(index);
  return nlohmann::json{{"id", r.id},
                        {"split", split_name(r.split)},
                        {"labels", labels},
                        {"text_features", r.text_features},
                        {"image_features", r.image_features}};
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  nlohmann::json header{{"format", kFeatureFormat},
                        {"version", kFeatureFormatVersion},
                        {"text_dim", ds.text_dim},
                        {"image_dim", ds.image_dim}};
  out << header.dump() << '\n';
  for (const auto& r : ds.records) out << record_to_json(r).dump() << '\n';
  return out.str();
}

inline Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  std::set<std::string> seen_ids;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(detail::at_line(line_no) + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(detail::at_line(line_no) + "expected a JSON object");

    try {
      if (!have_header) {
        if (j.value("format", std::string()) != kFeatureFormat) {
          throw DataError(detail::at_line(line_no) + "missing feature-file header");
        }
        const int version = j.at("version").get<int>();
        if (version != kFeatureFormatVersion) {
          throw DataError(detail::at_line(line_no) + "unsupported format version " +
                          std::to_string(version));
        }
        ds.text_dim = j.at("text_dim").get<std::size_t>();
        ds.image_dim = j.at("image_dim").get<std::size_t>();
        have_header = true;
        continue;
      }

      Record r;
      r.id = j.at("id").get<std::string>();
      const auto split_tag = j.at("split").get<std::string>();
      auto split = parse_split(split_tag);
      if (!split) throw DataError(detail::at_line(line_no) + "unknown split '" + split_tag + "'");
      r.split = *split;
      r.text_features = j.at("text_features").get<std::vector<double>>();
      r.image_features = j.at("image_features").get<std::vector<double>>();
      if (r.text_features.size() != ds.text_dim || r.image_features.size() != ds.image_dim) {
        throw DataError(detail::at_line(line_no) + "record '" + r.id + "' has widths " +
                        std::to_string(r.text_features.size()) + "/" +
                        std::to_string(r.image_features.size()) + ", header declares " +
                        std::to_string(ds.text_dim) + "/" + std::to_string(ds.image_dim));
      }
      if (j.contains("labels")) {
        for (const auto& [task, value] : j.at("labels").items()) {
          if (value.is_null()) continue;
          const TaskSpec* spec = nullptr;
          try {
            spec = &task_spec(task);
          } catch (const UsageError&) {
            throw DataError(detail::at_line(line_no) + "unknown task '" + task + "'");
          }
          std::size_t index = 0;
          if (value.is_string()) {
            auto found = spec->label_index(value.get<std::string>());
            if (!found) {
              throw DataError(detail::at_line(line_no) + "unknown label '" +
                              value.get<std::string>() + "' for task " + spec->id);
            }
            index = *found;
          } else {
            const auto raw = value.get<long long>();
            if (raw < 0 || static_cast<std::size_t>(raw) >= spec->class_count()) {
              throw DataError(detail::at_line(line_no) + "label " + std::to_string(raw) +
                              " out of range for task " + spec->id);
            }
            index = static_cast<std::size_t>(raw);
          }
          r.labels[spec->id] = index;
        }
      }
      if (!seen_ids.insert(r.id).second) {
        throw DataError(detail::at_line(line_no) + "duplicate id '" + r.id + "'");
      }
      ds.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(detail::at_line(line_no) + e.what());
    }
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  return parse_dataset(detail::read_text_file(path));
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  detail::write_text_file(path, serialize_dataset(ds));
}

}  // namespace sefusion
