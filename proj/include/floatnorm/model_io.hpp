#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "floatnorm/mlp.hpp"

namespace floatnorm {

/// JSON document with exactly these fields: schema_version, stage, scheme,
/// dims, activations, parameter_order, scaling_constants, weights (row-major
/// fan_in x fan_out per layer), biases.
nlohmann::json model_to_json(const MlpNetwork& net);
MlpNetwork model_from_json(const nlohmann::json& doc);

void save_model(const MlpNetwork& net, const std::filesystem::path& path);

struct LoadedModel {
  MlpNetwork network;
  std::string content_hash;           // git-style hash of the file bytes
  std::vector<std::string> warnings;  // e.g. parameter order drift vs the registry
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace floatnorm
