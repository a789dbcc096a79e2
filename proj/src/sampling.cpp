#include "floatnorm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floatnorm/error.hpp"

namespace floatnorm {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) {
  const double u = unit_uniform(rng);
  if (lo == hi) return lo;
  return std::clamp(lo + (hi - lo) * u, lo, hi);
}

std::vector<double> sample_params(std::span<const ParameterSpec> specs, Rng& rng, bool log_uniform) {
  std::vector<double> x;
  x.reserve(specs.size());
  for (const auto& s : specs) {
    if (!(s.global_min <= s.global_max)) throw invalid_input("invalid spec for " + std::string(s.name));
    if (log_uniform && s.global_min > 0.0) {
      const double v = std::exp(uniform(rng, std::log(s.global_min), std::log(s.global_max)));
      x.push_back(std::clamp(v, s.global_min, s.global_max));
    } else {
      x.push_back(uniform(rng, s.global_min, s.global_max));
    }
  }
  return x;
}

RangeConstraint sample_local_range(const ParameterSpec& spec, double x, Rng& rng, double p_fixed) {
  if (!spec.contains(x))
    throw invalid_input(std::string(spec.name) + " value outside its global range", std::string(spec.name));
  if (unit_uniform(rng) < p_fixed) return RangeConstraint::fixed(x);
  const double lo = uniform(rng, spec.global_min, x);
  const double hi = uniform(rng, x, spec.global_max);
  return {lo, hi};
}

}  // namespace floatnorm
