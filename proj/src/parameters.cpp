#include "floatnorm/parameters.hpp"

#include <array>

#include "floatnorm/error.hpp"

namespace floatnorm {

namespace {

// Global ranges, canonical order within each stage.
constexpr std::array<ParameterSpec, 6> kCgg{{
    {"PHIG", 4.2, 4.8, Stage::kCgg, 0, "eV"},
    {"CFS", 5e-11, 5e-10, Stage::kCgg, 1, "F/m"},
    {"EOT", 5e-10, 5e-9, Stage::kCgg, 2, "m"},
    {"QMFACTOR", -10.0, 10.0, Stage::kCgg, 3, "-"},
    {"QMTCECV", 0.01, 2.0, Stage::kCgg, 4, "-"},
    {"CGSL", 5e-11, 5e-10, Stage::kCgg, 5, "F/m"},
}};

constexpr std::array<ParameterSpec, 11> kId{{
    {"CIT", 1e-4, 1e-2, Stage::kId, 0, "F/m^2"},
    {"U0", 5e-3, 5e-2, Stage::kId, 1, "m^2/(V*s)"},
    {"UA", 3e-2, 3.0, Stage::kId, 2, "1/V"},
    {"EU", 1.0, 5.0, Stage::kId, 3, "-"},
    {"ETA0", 6e-2, 6.0, Stage::kId, 4, "-"},
    {"CDSCD", 7e-5, 7e-1, Stage::kId, 5, "F/(m^2*V)"},
    {"VSAT", 50000.0, 150000.0, Stage::kId, 6, "m/s"},
    {"KSATIV", 0.1, 10.0, Stage::kId, 7, "-"},
    {"RDSW", 50.0, 300.0, Stage::kId, 8, "ohm*um"},
    {"PCLM", 1.3e-3, 1.3e-1, Stage::kId, 9, "-"},
    {"MEXP", 2.01, 10.0, Stage::kId, 10, "-"},
}};

}  // namespace

std::string_view to_string(Stage stage) { return stage == Stage::kCgg ? "cgg" : "id"; }

std::string_view to_string(Scheme scheme) { return scheme == Scheme::kFixed ? "fixed" : "custom"; }

Stage parse_stage(std::string_view text) {
  if (text == "cgg") return Stage::kCgg;
  if (text == "id") return Stage::kId;
  throw Error(ErrorKind::kNotFound, "unknown stage '" + std::string(text) + "' (expected cgg|id)");
}

Scheme parse_scheme(std::string_view text) {
  if (text == "fixed") return Scheme::kFixed;
  if (text == "custom") return Scheme::kCustom;
  throw invalid_input("unknown scheme '" + std::string(text) + "' (expected fixed|custom)");
}

std::span<const ParameterSpec> cgg_parameters() { return kCgg; }

std::span<const ParameterSpec> id_parameters() { return kId; }

std::span<const ParameterSpec> stage_parameters(Stage stage) {
  return stage == Stage::kCgg ? cgg_parameters() : id_parameters();
}

const ParameterSpec& phig_spec() { return kCgg[0]; }

const ParameterSpec* find_parameter(std::string_view name) {
  for (const auto& p : kCgg)
    if (p.name == name) return &p;
  for (const auto& p : kId)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::string> parameter_names(Stage stage) {
  std::vector<std::string> names;
  for (const auto& p : stage_parameters(stage)) names.emplace_back(p.name);
  return names;
}

}  // namespace floatnorm
