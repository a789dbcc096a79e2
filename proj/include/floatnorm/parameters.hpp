#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace floatnorm {

/// Extraction stage a parameter (or dataset, or network) belongs to.
enum class Stage { kCgg, kId };

/// Normalization scheme: fixed uses global bounds for every sample, custom
/// draws a floating local range per sample.
enum class Scheme { kFixed, kCustom };

std::string_view to_string(Stage stage);
std::string_view to_string(Scheme scheme);
Stage parse_stage(std::string_view text);
Scheme parse_scheme(std::string_view text);

/// A compact-model parameter with its global training range.
struct ParameterSpec {
  std::string_view name;
  double global_min;
  double global_max;
  Stage stage;
  std::size_t index;  // position in the stage's canonical ordering
  std::string_view units;

  double span() const { return global_max - global_min; }
  bool contains(double x) const { return x >= global_min && x <= global_max; }
};

/// Canonical Cgg ordering: PHIG, CFS, EOT, QMFACTOR, QMTCECV, CGSL.
std::span<const ParameterSpec> cgg_parameters();
/// Canonical Id ordering: CIT, U0, UA, EU, ETA0, CDSCD, VSAT, KSATIV, RDSW, PCLM, MEXP.
std::span<const ParameterSpec> id_parameters();
std::span<const ParameterSpec> stage_parameters(Stage stage);

/// PHIG is extracted at the Cgg stage and carried as a fixed input into the Id stage.
const ParameterSpec& phig_spec();

/// Looks a parameter up by name across both stages; nullptr if unknown.
const ParameterSpec* find_parameter(std::string_view name);

/// Canonical names for a stage, in order.
std::vector<std::string> parameter_names(Stage stage);

}  // namespace floatnorm
