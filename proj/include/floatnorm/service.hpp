#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "floatnorm/cascade.hpp"
#include "floatnorm/model_io.hpp"

namespace httplib {
class Server;
}

namespace floatnorm {

/// Directory holding cgg_inverse.json and id_inverse.json. FLOATNORM_MODELS
/// overrides the command-line value when set and non-empty.
std::filesystem::path resolve_models_dir(const std::filesystem::path& cli_value);

struct ServiceModels {
  std::optional<LoadedModel> cgg;
  std::optional<LoadedModel> id;
  std::vector<std::string> warnings;
};

/// Missing files leave the stage unloaded (its endpoints answer 503); corrupt
/// or incompatible files throw.
ServiceModels load_service_models(const std::filesystem::path& dir);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Request handlers over immutable models. Every response carries the model
/// content hashes.
class Service {
 public:
  Service(ServiceModels models, std::shared_ptr<const Simulator> simulator, SaturationThresholds thresholds = {});

  ApiResponse health() const;
  ApiResponse parameters() const;
  ApiResponse extract(std::string_view body) const;
  ApiResponse simulate(std::string_view body) const;
  ApiResponse two_stage_extract(std::string_view body) const;

  /// Registers the API routes and, when `static_dir` is non-empty, serves it at /.
  void mount(httplib::Server& server, const std::filesystem::path& static_dir = {}) const;

 private:
  nlohmann::json model_hashes() const;
  const LoadedModel& require(Stage stage) const;
  ApiResponse run(const std::function<nlohmann::json()>& fn) const;

  ServiceModels models_;
  std::shared_ptr<const Simulator> simulator_;
  SaturationThresholds thresholds_;
};

}  // namespace floatnorm
