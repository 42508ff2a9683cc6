#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imbf/error.hpp"
#include "imbf/hash.hpp"
#include "imbf/model.hpp"
#include "imbf/trainer.hpp"

namespace imbf {

inline uint64_t file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(ErrorCode::MissingFile, "cannot fingerprint: " + path.string());
  uint64_t h = kFnvOffset;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

inline std::string fingerprint_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Reproducibility record written next to checkpoints and reports.
struct RunManifest {
  std::string strategy;
  std::vector<uint64_t> seeds;
  nlohmann::json plan;
  nlohmann::json model;
  nlohmann::json features;
  std::string train_path;
  std::string train_fingerprint;
  std::string test_path;
  std::string test_fingerprint;
  std::vector<std::string> class_names;
  std::vector<uint64_t> train_histogram;
  std::optional<double> imbalance_ratio;
  std::vector<std::string> checkpoints;
  double wall_clock_seconds = 0.0;
  // per seed, per stage, per epoch mean loss
  std::vector<std::vector<std::vector<double>>> epoch_traces;
};

inline nlohmann::json stage_to_json(const StageConfig& cfg) {
  return {
      {"learning_rate", cfg.learning_rate},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"loss", to_string(cfg.loss.kind)},
      {"beta", cfg.loss.beta},
      {"max_margin", cfg.loss.max_margin},
      {"s", cfg.loss.scale},
      {"trainable", cfg.trainable == TrainableSelector::All ? "all" : "final-and-head"},
      {"shuffle_seed", cfg.shuffle_seed},
  };
}

inline nlohmann::json plan_to_json(const TrainPlan& plan) {
  nlohmann::json j{
      {"strategy", plan.strategy_name()},
      {"reinit_head", plan.reinit_head},
      {"reset_optimizer_between_stages", plan.reset_optimizer_between_stages},
      {"stage2", stage_to_json(plan.stage2)},
  };
  if (plan.stage1) j["stage1"] = stage_to_json(*plan.stage1);
  return j;
}

inline nlohmann::json model_to_json(const ModelSpec& spec) {
  return {
      {"input_dim", spec.input_dim},
      {"backbone_dims", spec.backbone_dims},
      {"final_dim", spec.final_dim},
      {"num_classes", spec.num_classes},
  };
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j{
      {"format_version", 1},
      {"strategy", m.strategy},
      {"seeds", m.seeds},
      {"plan", m.plan},
      {"model", m.model},
      {"features", m.features},
      {"data",
       {
           {"train_path", m.train_path},
           {"train_fingerprint", m.train_fingerprint},
           {"test_path", m.test_path},
           {"test_fingerprint", m.test_fingerprint},
           {"class_names", m.class_names},
           {"train_histogram", m.train_histogram},
       }},
      {"checkpoints", m.checkpoints},
      {"wall_clock_seconds", m.wall_clock_seconds},
      {"epoch_traces", m.epoch_traces},
  };
  if (m.imbalance_ratio) j["data"]["imbalance_ratio"] = *m.imbalance_ratio;
  return j;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(ErrorCode::IoFailure, "cannot write manifest: " + path.string());
  out << to_json(m).dump(2) << "\n";
}

inline nlohmann::json read_manifest_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(ErrorCode::MissingFile, "cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(ErrorCode::IoFailure, "bad manifest " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace imbf
