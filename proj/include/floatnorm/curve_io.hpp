#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "floatnorm/cascade.hpp"

namespace floatnorm {

/// Curve file: header `bias_index,vg,vd,value,scaled`, one row per canonical
/// bias point. Cgg rows carry an empty vd cell.
std::string curve_csv(const CurveVector& curve);
/// Physical values from a curve file; the bias columns must match the canonical grid.
std::vector<double> parse_curve_csv(std::string_view text, Stage stage);

/// {name: [min, max]} -> canonical-order constraints (missing names stay global).
std::vector<RangeConstraint> constraints_from_json(Stage stage, const nlohmann::json& doc);
nlohmann::json constraints_to_json(Stage stage, const std::vector<RangeConstraint>& constraints);

/// {name: value}; unnamed parameters keep their defaults. Id-stage documents
/// may carry PHIG.
CggParams cgg_params_from_json(const nlohmann::json& doc);
IdParams id_params_from_json(const nlohmann::json& doc);
nlohmann::json params_to_json(const CggParams& p);
nlohmann::json params_to_json(const IdParams& p);

}  // namespace floatnorm
