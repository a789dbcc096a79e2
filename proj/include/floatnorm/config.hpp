#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "floatnorm/cascade.hpp"
#include "floatnorm/training.hpp"

namespace floatnorm {

inline constexpr int kRunConfigVersion = 1;

struct NetTrainConfig {
  TrainConfig train;
  NetworkShape shape;
};

struct DatasetSizes {
  std::size_t cgg = 50000;
  std::size_t id = 50000;
  std::size_t augment_k = 1;  // >1 builds fixed curves once and re-ranges them k times
};

struct ConvergenceSettings {
  std::vector<Stage> stages{Stage::kCgg, Stage::kId};
  std::vector<std::size_t> sample_counts{1000, 2000, 4000, 8000, 16000, 32000, 64000};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t validation_size = 5000;
  std::optional<double> target_mse;  // unset: auto
  std::size_t steps_per_cell = 0;    // 0: epochs from the train block
  NetTrainConfig net;
};

struct MultiRangeSettings {
  std::size_t n_devices = 1;
  std::size_t n_random_sets = 2;
  double truth_phig = 4.4;
  RangeConstraint infeasible_phig{4.7, 4.8};
};

/// Everything a run needs besides input files. Unknown keys are rejected at
/// every level.
struct RunConfig {
  int schema_version = kRunConfigVersion;
  std::uint64_t seed = 0;
  double p_fixed = 0.1;
  double p_global = 0.0;
  bool log_uniform = false;
  SaturationThresholds saturation;
  DatasetSizes datasets;
  NetTrainConfig forward;
  NetTrainConfig inverse;
  ConvergenceSettings convergence;
  MultiRangeSettings multirange;
  std::string models_dir;  // multirange study: directory with cgg_inverse.json / id_inverse.json

  SamplingOptions sampling() const;
  CascadeTrainOptions forward_options(std::uint64_t seed_offset = 0) const;
  CascadeTrainOptions inverse_options(std::uint64_t seed_offset = 0) const;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json train_config_to_json(const NetTrainConfig& cfg);
NetTrainConfig train_config_from_json(const nlohmann::json& doc);

/// Content hash of the canonical JSON form; identical configs hash identically.
std::string config_hash(const RunConfig& cfg);

}  // namespace floatnorm
