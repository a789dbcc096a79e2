#pragma once

#include "floatnorm/parameters.hpp"

namespace floatnorm {

/// Per-parameter local [min, max]. Equal endpoints pin the parameter to a value.
struct RangeConstraint {
  double local_min = 0.0;
  double local_max = 0.0;

  double span() const { return local_max - local_min; }
  bool is_fixed() const { return local_min == local_max; }
  bool contains(double x) const { return x >= local_min && x <= local_max; }

  static RangeConstraint global(const ParameterSpec& spec) { return {spec.global_min, spec.global_max}; }
  static RangeConstraint fixed(double value) { return {value, value}; }

  friend bool operator==(const RangeConstraint&, const RangeConstraint&) = default;
};

/// Spans smaller than this fraction of the global span normalize to 0.5.
inline constexpr double kDegenerateSpanFraction = 1e-12;

/// Throws (naming the parameter) unless global_min <= local_min <= local_max <= global_max.
void validate_constraint(const ParameterSpec& spec, const RangeConstraint& c);

/// (x - local_min) / (local_max - local_min), with the degenerate-span rule.
double normalize_floating(double x, const RangeConstraint& c, const ParameterSpec& spec);

/// x_norm * (local_max - local_min) + local_min, clamped into the constraint.
double denormalize(double x_norm, const RangeConstraint& c);

/// Min-max scaling against the global bounds; also used to scale range and
/// PHIG network inputs.
double normalize_global(double x, const ParameterSpec& spec);
double denormalize_global(double x_norm, const ParameterSpec& spec);

}  // namespace floatnorm
