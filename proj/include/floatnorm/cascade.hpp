#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "floatnorm/dataset.hpp"
#include "floatnorm/mlp.hpp"
#include "floatnorm/normalization.hpp"
#include "floatnorm/surrogate.hpp"
#include "floatnorm/training.hpp"

namespace floatnorm {

// ---------------------------------------------------------------------------
// Input layouts
//
//   Cgg forward : [6 normalized params] ++ [(min_i, max_i) x 6]          = 18 -> 15
//   Cgg inverse : [15 scaled Cgg]       ++ [(min_i, max_i) x 6]          = 27 -> 6
//   Id forward  : [11 normalized params] ++ [(min_i, max_i) x 11] ++ PHIG = 34 -> 16
//   Id inverse  : [16 scaled Id]        ++ [(min_i, max_i) x 11] ++ PHIG = 39 -> 11
//
// Range endpoints and PHIG enter globally min-max scaled.
// ---------------------------------------------------------------------------

std::size_t parameter_count(Stage stage);
std::size_t range_input_size(Stage stage);  // range pairs plus PHIG for the Id stage
std::size_t forward_input_size(Stage stage);
std::size_t inverse_input_size(Stage stage);

std::vector<double> range_inputs(Stage stage, std::span<const RangeConstraint> ranges, std::optional<double> phig);
std::vector<double> forward_input(Stage stage, std::span<const double> normalized,
                                  std::span<const RangeConstraint> ranges, std::optional<double> phig);
std::vector<double> inverse_input(Stage stage, std::span<const double> scaled_curve,
                                  std::span<const RangeConstraint> ranges, std::optional<double> phig);

/// Column-per-sample matrices built from a dataset.
Eigen::MatrixXd forward_inputs(const Dataset& ds);
Eigen::MatrixXd inverse_inputs(const Dataset& ds);
Eigen::MatrixXd curve_targets(const Dataset& ds);

struct NetworkShape {
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 300;
};

struct CascadeTrainOptions {
  TrainConfig train;
  NetworkShape shape;
  std::uint64_t init_seed = 0;
};

struct TrainedNet {
  MlpNetwork net;
  TrainReport report;
};

/// Metadata every cascade network carries (stage, scheme, parameter order, scaling constants).
NetworkMetadata cascade_metadata(Stage stage, Scheme scheme);

/// Supervised regression from the forward layout to scaled curves.
TrainedNet train_forward(Stage stage, const Dataset& dataset, const CascadeTrainOptions& options);

/// Trains an inverse net through `forward`, which must be frozen. The loss is
/// curve reconstruction only; the dataset's true parameters are never used as
/// targets. Degenerate-range parameters enter the forward net as 0.5, the value
/// floating normalization assigns them.
TrainedNet train_inverse(const MlpNetwork& forward, const Dataset& dataset, const CascadeTrainOptions& options);

/// Validation-style reconstruction MSE of inverse+forward over a dataset.
double cascade_reconstruction_mse(const MlpNetwork& forward, const MlpNetwork& inverse, const Dataset& dataset);
/// Forward-net MSE over a dataset; rejects a scheme mismatch.
double forward_mse(const MlpNetwork& forward, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

enum class Saturation { kNone, kLow, kHigh };
std::string_view to_string(Saturation s);

struct SaturationThresholds {
  double low = 0.005;
  double high = 0.995;
};

struct ExtractionRequest {
  Stage stage = Stage::kCgg;
  std::vector<double> curve;                 // physical units on the canonical grid
  std::vector<RangeConstraint> constraints;  // canonical order; empty means global ranges
  std::optional<double> fixed_phig;          // required for the Id stage
};

struct ExtractionResult {
  Stage stage = Stage::kCgg;
  std::vector<double> params;
  std::vector<double> normalized_outputs;
  std::vector<Saturation> saturation;
  std::vector<RangeConstraint> constraints;
  std::optional<double> phig;
  CurveVector target;
  CurveVector reconstructed;
  double rmse_percent = 0.0;
  std::string model_hash;
  std::string provenance_id;

  double param(std::string_view name) const;
  Saturation saturation_of(std::string_view name) const;
};

/// Canonical-order constraints from a name -> range map; missing entries take
/// the global range, unknown names and out-of-range values are rejected.
std::vector<RangeConstraint> constraints_from_map(Stage stage, const std::map<std::string, RangeConstraint>& by_name);
std::vector<RangeConstraint> global_constraints(Stage stage);

/// Throws unless `net` is an inverse net for `stage` compatible with the registry.
void check_inverse_net(const MlpNetwork& net, Stage stage);

ExtractionResult extract(const ExtractionRequest& req, const MlpNetwork& inverse, const Simulator& simulator,
                         const SaturationThresholds& thresholds = {}, const std::string& model_hash = {});

/// 100 * sqrt(mean(((fit - target) / max(|target|, floor))^2)) in physical units;
/// floor is 1e-18 F for Cgg and 1e-14 A for Id.
double rmse_percent(std::span<const double> fit, std::span<const double> target, CurveKind kind);

struct CascadeModels {
  MlpNetwork cgg_inverse;
  MlpNetwork id_inverse;
  std::string cgg_hash;
  std::string id_hash;
};

struct TwoStageResult {
  ExtractionResult cgg;
  ExtractionResult id;
  std::string provenance_id;
};

struct TwoStageOptions {
  SaturationThresholds thresholds;
  double phig_handoff_offset = 0.0;  // test hook: corrupts the PHIG handoff
};

/// Cgg extraction first, then Id extraction with the extracted PHIG held fixed.
TwoStageResult two_stage_extract(std::span<const double> cgg_curve, std::span<const double> id_curve,
                                 const std::vector<RangeConstraint>& cgg_constraints,
                                 const std::vector<RangeConstraint>& id_constraints, const CascadeModels& models,
                                 const Simulator& simulator, const TwoStageOptions& options = {});

nlohmann::json result_to_json(const ExtractionResult& r);
nlohmann::json result_to_json(const TwoStageResult& r);

}  // namespace floatnorm
