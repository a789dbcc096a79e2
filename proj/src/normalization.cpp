#include "floatnorm/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floatnorm/error.hpp"

namespace floatnorm {

namespace {

// Shared by the floating and global forms so that a global constraint
// reproduces the global normalization bit for bit.
double min_max(double x, double lo, double hi) { return (x - lo) / (hi - lo); }

std::string describe(const ParameterSpec& spec, const RangeConstraint& c) {
  return std::string(spec.name) + " constraint [" + std::to_string(c.local_min) + ", " +
         std::to_string(c.local_max) + "]";
}

}  // namespace

void validate_constraint(const ParameterSpec& spec, const RangeConstraint& c) {
  const std::string name(spec.name);
  if (!std::isfinite(c.local_min) || !std::isfinite(c.local_max))
    throw invalid_input(name + " constraint is not finite", name);
  if (c.local_min > c.local_max) throw invalid_input(describe(spec, c) + " has min > max", name);
  if (c.local_min < spec.global_min || c.local_max > spec.global_max)
    throw invalid_input(describe(spec, c) + " lies outside the global range [" +
                            std::to_string(spec.global_min) + ", " + std::to_string(spec.global_max) + "]",
                        name);
}

double normalize_floating(double x, const RangeConstraint& c, const ParameterSpec& spec) {
  if (!(x >= c.local_min && x <= c.local_max))
    throw invalid_input(std::string(spec.name) + " value " + std::to_string(x) + " outside " + describe(spec, c),
                        std::string(spec.name));
  if (c.span() < kDegenerateSpanFraction * spec.span()) return 0.5;
  return min_max(x, c.local_min, c.local_max);
}

double denormalize(double x_norm, const RangeConstraint& c) {
  if (!(x_norm >= 0.0 && x_norm <= 1.0))
    throw invalid_input("normalized value " + std::to_string(x_norm) + " outside [0, 1]");
  if (c.is_fixed()) return c.local_min;
  return std::clamp(x_norm * (c.local_max - c.local_min) + c.local_min, c.local_min, c.local_max);
}

double normalize_global(double x, const ParameterSpec& spec) {
  if (!spec.contains(x))
    throw invalid_input(std::string(spec.name) + " value " + std::to_string(x) + " outside its global range",
                        std::string(spec.name));
  return min_max(x, spec.global_min, spec.global_max);
}

double denormalize_global(double x_norm, const ParameterSpec& spec) {
  return denormalize(x_norm, RangeConstraint::global(spec));
}

}  // namespace floatnorm
