#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floatnorm/normalization.hpp"
#include "floatnorm/parameters.hpp"
#include "floatnorm/sampling.hpp"
#include "floatnorm/surrogate.hpp"

namespace floatnorm {

inline constexpr int kDatasetFormatVersion = 1;

struct TrainingSample {
  std::size_t source = 0;             // index of the simulated curve this sample reuses
  std::vector<double> params;         // physical values, canonical order
  std::vector<RangeConstraint> ranges;
  std::vector<double> normalized;     // floating normalization of params against ranges
  std::vector<double> curve;          // scaled curve
  std::optional<double> phig;         // Id stage only

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

struct DatasetMetadata {
  int format_version = kDatasetFormatVersion;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  double p_fixed = 0.0;
  double p_global = 0.0;
  bool log_uniform = false;
  std::string origin = "generated";  // generated | augmented
  std::size_t augment_k = 0;
  std::optional<std::uint64_t> source_seed;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

struct Dataset {
  Stage stage = Stage::kCgg;
  Scheme scheme = Scheme::kFixed;
  std::vector<TrainingSample> samples;
  DatasetMetadata metadata;

  std::size_t size() const { return samples.size(); }
};

CurveKind curve_kind(Stage stage);

/// Assembles a sample from physical values and ranges, validating the ranges
/// and computing the normalized vector.
TrainingSample make_sample(Stage stage, std::vector<double> params, std::vector<RangeConstraint> ranges,
                           std::vector<double> scaled_curve, std::optional<double> phig, std::size_t source);

/// Draws n samples. Sample i uses make_rng(seed, i); curves come from the
/// simulator and are stored scaled.
Dataset build_dataset(Stage stage, Scheme scheme, std::size_t n, std::uint64_t seed, const Simulator& simulator,
                      const SamplingOptions& options = {});

/// k custom-scheme copies of every fixed-scheme sample with fresh local ranges.
/// Reuses curves; never simulates.
Dataset augment_with_ranges(const Dataset& fixed, std::size_t k, std::uint64_t seed,
                            const SamplingOptions& options = {});

std::filesystem::path metadata_path(const std::filesystem::path& csv_path);
std::vector<std::string> dataset_header(Stage stage);

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Serialized CSV text (what write_dataset puts on disk).
std::string dataset_csv(const Dataset& ds);

}  // namespace floatnorm
