#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "floatnorm/normalization.hpp"
#include "floatnorm/parameters.hpp"

namespace floatnorm {

/// 64-bit Mersenne Twister. Every sample derives its own generator from
/// (seed, stream) so dataset construction is order independent.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform on [0, 1) from the top 53 bits of one draw.
double unit_uniform(Rng& rng);
/// Uniform on [lo, hi]; returns lo exactly when lo == hi.
double uniform(Rng& rng, double lo, double hi);

struct SamplingOptions {
  double p_fixed = 0.1;      // probability of a degenerate (x, x) local range
  bool log_uniform = false;  // log-space draws for strictly positive ranges
  bool force_global_ranges = false;  // test hook: custom scheme with global ranges
  double p_global = 0.0;     // probability that a custom-scheme sample keeps every range global
};

/// One independent draw per spec inside its global range.
std::vector<double> sample_params(std::span<const ParameterSpec> specs, Rng& rng, bool log_uniform = false);

/// With probability p_fixed returns (x, x); otherwise local_min ~ U[global_min, x]
/// and local_max ~ U[x, global_max], drawn independently.
RangeConstraint sample_local_range(const ParameterSpec& spec, double x, Rng& rng, double p_fixed = 0.1);

}  // namespace floatnorm
