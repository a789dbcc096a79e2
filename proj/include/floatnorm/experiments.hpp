#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "floatnorm/cascade.hpp"
#include "floatnorm/config.hpp"

namespace floatnorm {

// ---------------------------------------------------------------------------
// Convergence (data-requirement) study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  Stage stage = Stage::kCgg;
  Scheme scheme = Scheme::kFixed;
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  double validation_mse = 0.0;  // NaN when the cell failed
  double wall_seconds = 0.0;
  std::size_t epochs = 0;
  std::string error;

  /// Wall time is excluded: it is the only field that differs between reruns.
  friend bool operator==(const ConvergenceRow& a, const ConvergenceRow& b) {
    const bool same_mse = a.validation_mse == b.validation_mse || (a.validation_mse != a.validation_mse &&
                                                                   b.validation_mse != b.validation_mse);
    return a.stage == b.stage && a.scheme == b.scheme && a.n_train == b.n_train && a.seed == b.seed && same_mse &&
           a.epochs == b.epochs && a.error == b.error;
  }
};

struct Crossing {
  double n = 0.0;              // interpolated sample count; NaN if undefined
  bool extrapolated = false;   // target lies outside the measured MSE range
};

/// Sample count at which the MSE curve first reaches `target`, by log-log
/// linear interpolation between adjacent ladder points. Outside the measured
/// range the nearest segment is extended and the crossing is flagged.
Crossing crossing_sample_count(std::span<const std::size_t> n, std::span<const double> mse, double target);

struct StageConvergence {
  Stage stage = Stage::kCgg;
  double target_mse = 0.0;
  std::map<std::uint64_t, double> ratio_by_seed;  // custom / fixed samples needed
  double median_ratio = 0.0;
  Crossing fixed_median;   // on the per-n median curves
  Crossing custom_median;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<StageConvergence> stages;
};

struct ConvergenceRequest {
  ConvergenceSettings settings;
  std::uint64_t seed = 0;
  SamplingOptions sampling;
  /// Evaluate fixed-scheme nets on custom-scheme validation data. Not supported.
  bool cross_evaluate = false;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains one forward net per (stage, scheme, n, seed) and measures it on a
/// common held-out set per (stage, scheme). Cell failures are recorded, not thrown.
ConvergenceResult convergence_study(const ConvergenceRequest& req, const Simulator& simulator,
                                    const ProgressFn& progress = {});

/// Target MSE selection and ratio computation over already-measured rows.
StageConvergence summarize_convergence(Stage stage, std::span<const ConvergenceRow> rows,
                                       std::optional<double> target_mse);

// ---------------------------------------------------------------------------
// Multi-range extraction study
// ---------------------------------------------------------------------------

struct ConstraintSet {
  std::string label;
  std::vector<RangeConstraint> cgg;  // canonical order
  std::vector<RangeConstraint> id;
  bool feasible = true;              // contains the true device parameters
};

struct StudyRow {
  std::size_t device = 0;
  ConstraintSet constraints;
  TwoStageResult result;
};

struct DeviceTruth {
  CggParams cgg;
  IdParams id;  // id.phig equals cgg.phig
};

/// Random in-range device with PHIG pinned to `phig`.
DeviceTruth random_device(std::uint64_t seed, double phig);

/// Global ranges first, then `n_random` random sub-ranges that contain the
/// truth, then one set whose PHIG range excludes it.
std::vector<ConstraintSet> make_constraint_sets(const DeviceTruth& truth, std::size_t n_random, std::uint64_t seed,
                                                const RangeConstraint& infeasible_phig);

std::vector<StudyRow> multi_range_study(const CggParams& cgg_truth, const IdParams& id_truth,
                                        std::span<const ConstraintSet> sets, const CascadeModels& models,
                                        const Simulator& simulator, const TwoStageOptions& options = {},
                                        std::size_t device = 0);

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

struct DerivativeCurve {
  std::string name;     // e.g. gm_vd0.05, gd_vg0.7
  std::string bias;     // swept terminal: vg or vd
  std::vector<double> x;
  std::vector<double> target;
  std::vector<double> fit;
};

/// Central differences (f(x+h) - f(x-h)) / 2h at each point.
std::vector<double> central_difference(const std::function<double(double)>& f, std::span<const double> xs, double h);

/// gm over dense Vg sweeps at both drain biases and gd over dense Vd sweeps,
/// for target and fitted parameters; h is half the sweep step.
std::vector<DerivativeCurve> derivative_report(const IdParams& target, const IdParams& fit, const Simulator& simulator,
                                               double step = 0.01);

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

struct ReportMetadata {
  std::string study;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::map<std::string, std::string> model_hashes;
  std::map<std::string, std::string> dataset_hashes;
  nlohmann::json extra = nlohmann::json::object();
};

std::string convergence_csv(std::span<const ConvergenceRow> rows);
std::vector<ConvergenceRow> parse_convergence_csv(std::string_view text);

/// One row per (constraint set, stage, parameter).
std::string multirange_csv(std::span<const StudyRow> rows);

struct MultiRangeRecord {
  std::size_t device = 0;
  std::string label;
  std::string stage;
  std::string parameter;
  double value = 0.0;
  double local_min = 0.0;
  double local_max = 0.0;
  std::string saturation;
  double rmse_percent = 0.0;
  friend bool operator==(const MultiRangeRecord&, const MultiRangeRecord&) = default;
};
std::vector<MultiRangeRecord> multirange_records(std::span<const StudyRow> rows);
std::vector<MultiRangeRecord> parse_multirange_csv(std::string_view text);

std::string derivative_csv(const DerivativeCurve& curve);

/// Writes files under `dir` plus metadata.json and manifest.json (file name ->
/// content hash). Returns the manifest.
nlohmann::json emit_report(const std::filesystem::path& dir, const std::map<std::string, std::string>& files,
                           const ReportMetadata& metadata);

nlohmann::json convergence_summary_json(const ConvergenceResult& result);

}  // namespace floatnorm
