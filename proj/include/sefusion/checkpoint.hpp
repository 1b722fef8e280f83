#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sefusion/errors.hpp"
#include "sefusion/model.hpp"
#include "sefusion/train.hpp"

namespace sefusion {

// Checkpoints are JSON documents. Every tensor is stored as float64 values
// in row-major order; JSON numbers are written in shortest round-trip form
// so a save/load cycle reproduces every value bit for bit.

inline constexpr std::string_view kCheckpointFormat = "sefusion-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline std::string_view activation_name(FinalActivation a) {
  return a == FinalActivation::sigmoid ? "sigmoid" : "softmax";
}

inline FinalActivation parse_activation(std::string_view name) {
  if (name == "softmax") return FinalActivation::softmax;
  if (name == "sigmoid") return FinalActivation::sigmoid;
  throw UsageError("unknown final activation '" + std::string(name) + "'");
}

inline std::string_view architecture_name(Architecture a) {
  return a == Architecture::concat ? "concat" : "sefusion";
}

inline Architecture parse_architecture(std::string_view name) {
  if (name == "sefusion") return Architecture::sefusion;
  if (name == "concat") return Architecture::concat;
  throw UsageError("unknown architecture '" + std::string(name) + "'");
}

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"architecture", architecture_name(cfg.architecture)},
          {"tau", cfg.tau},
          {"fusion",
           {{"text_dim", cfg.fusion.text_dim},
            {"image_dim", cfg.fusion.image_dim},
            {"biases", cfg.fusion.biases}}},
          {"head",
           {{"n_layers", cfg.head.n_layers},
            {"hidden_width", cfg.head.hidden_width},
            {"output_classes", cfg.head.output_classes},
            {"final_activation", activation_name(cfg.head.final_activation)},
            {"biases", cfg.head.biases}}}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.architecture = parse_architecture(j.at("architecture").get<std::string>());
  cfg.tau = j.at("tau").get<double>();
  const auto& f = j.at("fusion");
  cfg.fusion.text_dim = f.at("text_dim").get<std::size_t>();
  cfg.fusion.image_dim = f.at("image_dim").get<std::size_t>();
  cfg.fusion.biases = f.at("biases").get<bool>();
  const auto& h = j.at("head");
  cfg.head.n_layers = h.at("n_layers").get<int>();
  cfg.head.hidden_width = h.at("hidden_width").get<std::size_t>();
  cfg.head.output_classes = h.at("output_classes").get<std::size_t>();
  cfg.head.final_activation = parse_activation(h.at("final_activation").get<std::string>());
  cfg.head.biases = h.at("biases").get<bool>();
  return cfg;
}

inline nlohmann::json history_to_json(const TrainingHistory& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_accuracy", e.validation_accuracy},
                      {"validation_weighted_f1", e.validation_weighted_f1}});
  }
  nlohmann::json out{{"epochs", epochs}};
  out["selected_epoch"] = h.selected_epoch ? nlohmann::json(*h.selected_epoch) : nlohmann::json();
  return out;
}

template <typename T>
nlohmann::json checkpoint_to_json(Model<T>& m, int precision_bits,
                                  const TrainingHistory* history = nullptr) {
  nlohmann::json tensors = nlohmann::json::array();
  for (auto* p : m.all_tensors()) {
    std::vector<double> values(p->value.values().begin(), p->value.values().end());
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"values", values}});
  }
  nlohmann::json j{{"format", kCheckpointFormat},
                   {"version", kCheckpointVersion},
                   {"task", m.task_id},
                   {"seed", m.seed},
                   {"precision", precision_bits},
                   {"config", model_config_to_json(m.config)},
                   {"prior", {{"counts", m.prior.counts}, {"probabilities", m.prior.probabilities}}},
                   {"tensors", tensors}};
  if (history != nullptr) {
    j["selected_epoch"] =
        history->selected_epoch ? nlohmann::json(*history->selected_epoch) : nlohmann::json();
  }
  return j;
}

struct CheckpointInfo {
  std::string task;
  int precision = 32;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": malformed JSON (" + e.what() + ")");
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write error in " + path);
}

inline CheckpointInfo checkpoint_info(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kCheckpointFormat) {
    throw DataError("not a checkpoint file");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version");
  }
  return {j.at("task").get<std::string>(), j.at("precision").get<int>()};
}

template <typename T>
Model<T> checkpoint_from_json(const nlohmann::json& j) {
  try {
    const auto info = checkpoint_info(j);
    const auto cfg = model_config_from_json(j.at("config"));
    auto prior = LabelPrior::from_counts(j.at("prior").at("counts").get<std::vector<long>>());
    prior.probabilities = j.at("prior").at("probabilities").get<std::vector<double>>();
    if (prior.probabilities.size() != prior.counts.size()) {
      throw DataError("checkpoint prior is inconsistent");
    }
    auto m = Model<T>::init(cfg, info.task, std::move(prior), j.at("seed").get<std::uint64_t>());
    auto tensors = m.all_tensors();
    const auto& stored = j.at("tensors");
    if (stored.size() != tensors.size()) throw DataError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& t = stored[i];
      auto* p = tensors[i];
      if (t.at("name").get<std::string>() != p->name ||
          t.at("rows").get<std::size_t>() != p->value.rows() ||
          t.at("cols").get<std::size_t>() != p->value.cols()) {
        throw DataError("checkpoint tensor '" + t.at("name").get<std::string>() +
                        "' does not match the model layout");
      }
      const auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != p->value.size()) throw DataError("checkpoint tensor size mismatch");
      for (std::size_t k = 0; k < values.size(); ++k) p->value[k] = static_cast<T>(values[k]);
      p->zero_grad();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::string& path, Model<T>& m, int precision_bits,
                     const TrainingHistory* history = nullptr) {
  write_json_file(path, checkpoint_to_json(m, precision_bits, history));
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
  return checkpoint_from_json<T>(read_json_file(path));
}

}  // namespace sefusion
