#include "floatnorm/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"

namespace floatnorm {

using nlohmann::json;

std::size_t parameter_count(Stage stage) { return stage_parameters(stage).size(); }

std::size_t range_input_size(Stage stage) { return 2 * parameter_count(stage) + (stage == Stage::kId ? 1 : 0); }

std::size_t forward_input_size(Stage stage) { return parameter_count(stage) + range_input_size(stage); }

std::size_t inverse_input_size(Stage stage) { return curve_length(curve_kind(stage)) + range_input_size(stage); }

std::vector<double> range_inputs(Stage stage, std::span<const RangeConstraint> ranges, std::optional<double> phig) {
  const auto specs = stage_parameters(stage);
  if (ranges.size() != specs.size()) throw invalid_input("range vector has the wrong length");
  std::vector<double> out;
  out.reserve(range_input_size(stage));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.push_back(normalize_global(ranges[i].local_min, specs[i]));
    out.push_back(normalize_global(ranges[i].local_max, specs[i]));
  }
  if (stage == Stage::kId) {
    if (!phig) throw invalid_input("Id-stage layout requires PHIG", "PHIG");
    out.push_back(normalize_global(*phig, phig_spec()));
  }
  return out;
}

std::vector<double> forward_input(Stage stage, std::span<const double> normalized,
                                  std::span<const RangeConstraint> ranges, std::optional<double> phig) {
  if (normalized.size() != parameter_count(stage)) throw invalid_input("normalized vector has the wrong length");
  std::vector<double> out(normalized.begin(), normalized.end());
  const auto r = range_inputs(stage, ranges, phig);
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<double> inverse_input(Stage stage, std::span<const double> scaled_curve,
                                  std::span<const RangeConstraint> ranges, std::optional<double> phig) {
  if (scaled_curve.size() != curve_length(curve_kind(stage))) throw invalid_input("curve has the wrong length");
  std::vector<double> out(scaled_curve.begin(), scaled_curve.end());
  const auto r = range_inputs(stage, ranges, phig);
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

namespace {

template <typename Fn>
Eigen::MatrixXd columns(const Dataset& ds, std::size_t rows, Fn&& fn) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ds.size()));
  for (std::size_t j = 0; j < ds.size(); ++j) {
    const std::vector<double> col = fn(ds.samples[j]);
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(rows));
  }
  return m;
}

Eigen::MatrixXd range_block(const Dataset& ds) {
  return columns(ds, range_input_size(ds.stage),
                 [&](const TrainingSample& s) { return range_inputs(ds.stage, s.ranges, s.phig); });
}

Eigen::MatrixXd degenerate_mask(const Dataset& ds) {
  const auto specs = stage_parameters(ds.stage);
  return columns(ds, specs.size(), [&](const TrainingSample& s) {
    std::vector<double> m(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
      m[i] = s.ranges[i].span() < kDegenerateSpanFraction * specs[i].span() ? 1.0 : 0.0;
    return m;
  });
}

}  // namespace

Eigen::MatrixXd forward_inputs(const Dataset& ds) {
  return columns(ds, forward_input_size(ds.stage),
                 [&](const TrainingSample& s) { return forward_input(ds.stage, s.normalized, s.ranges, s.phig); });
}

Eigen::MatrixXd inverse_inputs(const Dataset& ds) {
  return columns(ds, inverse_input_size(ds.stage),
                 [&](const TrainingSample& s) { return inverse_input(ds.stage, s.curve, s.ranges, s.phig); });
}

Eigen::MatrixXd curve_targets(const Dataset& ds) {
  return columns(ds, curve_length(curve_kind(ds.stage)), [](const TrainingSample& s) { return s.curve; });
}

NetworkMetadata cascade_metadata(Stage stage, Scheme scheme) {
  NetworkMetadata m;
  m.stage = std::string(to_string(stage));
  m.scheme = std::string(to_string(scheme));
  m.parameter_order = parameter_names(stage);
  m.scaling_constants = {{"cgg_reference_F", device::kCref},
                         {"id_floor_A", device::kIfloor},
                         {"id_log_offset_decades", 14.0},
                         {"id_log_span_decades", 12.0}};
  return m;
}

namespace {

std::vector<std::size_t> layer_dims(std::size_t in, const NetworkShape& shape, std::size_t out) {
  if (shape.hidden_layers < 1 || shape.hidden_width < 1) throw invalid_input("network needs at least one hidden layer");
  std::vector<std::size_t> dims{in};
  for (std::size_t i = 0; i < shape.hidden_layers; ++i) dims.push_back(shape.hidden_width);
  dims.push_back(out);
  return dims;
}

// Loss of inverse -> frozen forward against the input curve.
class CascadeProblem final : public TrainingProblem {
 public:
  CascadeProblem(const MlpNetwork& forward, const Dataset& ds)
      : forward_(forward),
        n_params_(parameter_count(ds.stage)),
        inverse_in_(inverse_inputs(ds)),
        ranges_(range_block(ds)),
        targets_(curve_targets(ds)),
        fixed_(degenerate_mask(ds)) {}

  std::size_t size() const override { return static_cast<std::size_t>(targets_.cols()); }

  double accumulate(const MlpNetwork& inverse, std::span<const std::size_t> batch, Gradients& grads) override {
    ForwardCache inv_cache;
    ForwardCache fwd_cache;
    const Eigen::MatrixXd fixed = gather_columns(fixed_, batch);
    const Eigen::MatrixXd y = gather_columns(targets_, batch);
    const Eigen::MatrixXd yhat = reconstruct(inverse, batch, fixed, &inv_cache, &fwd_cache);
    const Eigen::MatrixXd diff = yhat - y;
    const double scale = 1.0 / static_cast<double>(diff.size());
    const Eigen::MatrixXd d_in = backward_batch(forward_, fwd_cache, (2.0 * scale) * diff, nullptr);
    const Eigen::MatrixXd d_params =
        d_in.topRows(static_cast<Eigen::Index>(n_params_)).cwiseProduct((1.0 - fixed.array()).matrix());
    backward_batch(inverse, inv_cache, d_params, &grads);
    return diff.squaredNorm() * scale;
  }

  double evaluate(const MlpNetwork& inverse, std::span<const std::size_t> indices) const override {
    constexpr std::size_t kChunk = 4096;
    double sum = 0.0;
    for (std::size_t start = 0; start < indices.size(); start += kChunk) {
      const auto chunk = indices.subspan(start, std::min(kChunk, indices.size() - start));
      const Eigen::MatrixXd yhat = reconstruct(inverse, chunk, gather_columns(fixed_, chunk), nullptr, nullptr);
      sum += (yhat - gather_columns(targets_, chunk)).squaredNorm();
    }
    return sum / static_cast<double>(indices.size() * static_cast<std::size_t>(targets_.rows()));
  }

 private:
  Eigen::MatrixXd reconstruct(const MlpNetwork& inverse, std::span<const std::size_t> idx, const Eigen::MatrixXd& fixed,
                              ForwardCache* inv_cache, ForwardCache* fwd_cache) const {
    const Eigen::MatrixXd p = forward_batch(inverse, gather_columns(inverse_in_, idx), inv_cache);
    const auto np = static_cast<Eigen::Index>(n_params_);
    Eigen::MatrixXd fin(np + ranges_.rows(), p.cols());
    fin.topRows(np) = (p.array() * (1.0 - fixed.array()) + 0.5 * fixed.array()).matrix();
    fin.bottomRows(ranges_.rows()) = gather_columns(ranges_, idx);
    return forward_batch(forward_, fin, fwd_cache);
  }

  const MlpNetwork& forward_;
  std::size_t n_params_;
  Eigen::MatrixXd inverse_in_;
  Eigen::MatrixXd ranges_;
  Eigen::MatrixXd targets_;
  Eigen::MatrixXd fixed_;
};

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

void check_forward_net(const MlpNetwork& forward, Stage stage) {
  if (forward.metadata.stage != to_string(stage))
    throw invalid_input("forward net is for stage '" + forward.metadata.stage + "', dataset is " +
                        std::string(to_string(stage)));
  if (forward.input_size() != forward_input_size(stage) || forward.output_size() != curve_length(curve_kind(stage)))
    throw invalid_input("forward net dimensions do not match the " + std::string(to_string(stage)) + " layout");
}

}  // namespace

TrainedNet train_forward(Stage stage, const Dataset& dataset, const CascadeTrainOptions& options) {
  if (dataset.stage != stage) throw invalid_input("dataset stage does not match the requested stage");
  RegressionProblem problem(forward_inputs(dataset), curve_targets(dataset));
  TrainedNet out;
  out.net = init_network(layer_dims(forward_input_size(stage), options.shape, curve_length(curve_kind(stage))),
                         Activation::kRelu, Activation::kLinear, options.init_seed);
  out.net.metadata = cascade_metadata(stage, dataset.scheme);
  out.report = train(out.net, problem, options.train);
  return out;
}

TrainedNet train_inverse(const MlpNetwork& forward, const Dataset& dataset, const CascadeTrainOptions& options) {
  if (!forward.is_frozen()) throw invalid_input("forward net must be frozen before inverse training");
  check_forward_net(forward, dataset.stage);
  CascadeProblem problem(forward, dataset);
  TrainedNet out;
  out.net = init_network(layer_dims(inverse_input_size(dataset.stage), options.shape, parameter_count(dataset.stage)),
                         Activation::kRelu, Activation::kSigmoid, options.init_seed);
  out.net.metadata = cascade_metadata(dataset.stage, dataset.scheme);
  out.report = train(out.net, problem, options.train);
  return out;
}

double cascade_reconstruction_mse(const MlpNetwork& forward, const MlpNetwork& inverse, const Dataset& dataset) {
  check_forward_net(forward, dataset.stage);
  CascadeProblem problem(forward, dataset);
  const auto idx = all_indices(dataset.size());
  return problem.evaluate(inverse, idx);
}

double forward_mse(const MlpNetwork& forward, const Dataset& dataset) {
  check_forward_net(forward, dataset.stage);
  if (!forward.metadata.scheme.empty() && forward.metadata.scheme != to_string(dataset.scheme))
    throw invalid_input("refusing to evaluate a " + forward.metadata.scheme + "-scheme net on " +
                        std::string(to_string(dataset.scheme)) + "-scheme data");
  RegressionProblem problem(forward_inputs(dataset), curve_targets(dataset));
  const auto idx = all_indices(dataset.size());
  return problem.evaluate(forward, idx);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Saturation s) {
  switch (s) {
    case Saturation::kNone: return "none";
    case Saturation::kLow: return "low";
    case Saturation::kHigh: return "high";
  }
  return "none";
}

namespace {

std::size_t index_of(Stage stage, std::string_view name) {
  for (const auto& s : stage_parameters(stage))
    if (s.name == name) return s.index;
  throw invalid_input("unknown " + std::string(to_string(stage)) + "-stage parameter '" + std::string(name) + "'",
                      std::string(name));
}

}  // namespace

double ExtractionResult::param(std::string_view name) const { return params.at(index_of(stage, name)); }

Saturation ExtractionResult::saturation_of(std::string_view name) const { return saturation.at(index_of(stage, name)); }

std::vector<RangeConstraint> global_constraints(Stage stage) {
  std::vector<RangeConstraint> out;
  for (const auto& s : stage_parameters(stage)) out.push_back(RangeConstraint::global(s));
  return out;
}

std::vector<RangeConstraint> constraints_from_map(Stage stage, const std::map<std::string, RangeConstraint>& by_name) {
  auto out = global_constraints(stage);
  const auto specs = stage_parameters(stage);
  for (const auto& [name, c] : by_name) {
    const std::size_t i = index_of(stage, name);
    validate_constraint(specs[i], c);
    out[i] = c;
  }
  return out;
}

void check_inverse_net(const MlpNetwork& net, Stage stage) {
  if (net.layers.empty()) throw Error(ErrorKind::kUnavailable, "inverse net is empty");
  if (net.metadata.stage != to_string(stage))
    throw invalid_input("inverse net is for stage '" + net.metadata.stage + "', request is " +
                        std::string(to_string(stage)));
  if (net.metadata.parameter_order != parameter_names(stage))
    throw invalid_input("inverse net parameter order does not match the current registry");
  if (net.output_activation() != Activation::kSigmoid) throw invalid_input("inverse net must end in a sigmoid layer");
  if (net.input_size() != inverse_input_size(stage) || net.output_size() != parameter_count(stage))
    throw invalid_input("inverse net dimensions do not match the " + std::string(to_string(stage)) + " layout");
}

double rmse_percent(std::span<const double> fit, std::span<const double> target, CurveKind kind) {
  if (fit.size() != target.size()) throw invalid_input("rmse: curve lengths differ");
  if (fit.empty()) throw invalid_input("rmse: empty curves");
  const double floor = kind == CurveKind::kCgg ? 1e-18 : device::kIfloor;
  double sum = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const double rel = (fit[i] - target[i]) / std::max(std::abs(target[i]), floor);
    sum += rel * rel;
  }
  return 100.0 * std::sqrt(sum / static_cast<double>(fit.size()));
}

ExtractionResult extract(const ExtractionRequest& req, const MlpNetwork& inverse, const Simulator& simulator,
                         const SaturationThresholds& thresholds, const std::string& model_hash) {
  check_inverse_net(inverse, req.stage);
  const auto specs = stage_parameters(req.stage);
  const CurveKind kind = curve_kind(req.stage);
  if (req.curve.size() != curve_length(kind))
    throw invalid_input("curve has " + std::to_string(req.curve.size()) + " points; the " +
                        std::string(to_string(req.stage)) + " grid has " + std::to_string(curve_length(kind)));

  ExtractionResult r;
  r.stage = req.stage;
  r.model_hash = model_hash;
  r.constraints = req.constraints.empty() ? global_constraints(req.stage) : req.constraints;
  if (r.constraints.size() != specs.size()) throw invalid_input("constraint vector has the wrong length");
  for (std::size_t i = 0; i < specs.size(); ++i) validate_constraint(specs[i], r.constraints[i]);
  if (req.stage == Stage::kId) {
    if (!req.fixed_phig) throw invalid_input("Id-stage extraction requires a fixed PHIG", "PHIG");
    if (!std::isfinite(*req.fixed_phig) || !phig_spec().contains(*req.fixed_phig))
      throw invalid_input("fixed PHIG lies outside its global range", "PHIG");
    r.phig = req.fixed_phig;
  } else if (req.fixed_phig) {
    throw invalid_input("fixed PHIG only applies to the Id stage", "PHIG");
  }

  r.target = CurveVector::from_values(kind, req.curve);
  const auto x = inverse_input(req.stage, r.target.scaled, r.constraints, r.phig);
  r.normalized_outputs = predict(inverse, x);
  r.params.resize(specs.size());
  r.saturation.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double u = r.normalized_outputs[i];
    const RangeConstraint& c = r.constraints[i];
    r.params[i] = denormalize(u, c);
    if (c.span() > 0.0) {
      if (u < thresholds.low)
        r.saturation[i] = Saturation::kLow;
      else if (u > thresholds.high)
        r.saturation[i] = Saturation::kHigh;
    }
  }
  r.reconstructed = req.stage == Stage::kCgg ? simulator.simulate_cgg(CggParams::from_array(r.params))
                                             : simulator.simulate_id(IdParams::from_array(r.params, *r.phig));
  r.rmse_percent = rmse_percent(r.reconstructed.values, r.target.values, kind);

  std::string fingerprint = model_hash + "|" + std::string(to_string(req.stage));
  for (double v : req.curve) fingerprint += "|" + format_double(v);
  for (const auto& c : r.constraints) fingerprint += "|" + format_double(c.local_min) + ":" + format_double(c.local_max);
  if (r.phig) fingerprint += "|phig=" + format_double(*r.phig);
  r.provenance_id = content_hash(fingerprint);
  return r;
}

TwoStageResult two_stage_extract(std::span<const double> cgg_curve, std::span<const double> id_curve,
                                 const std::vector<RangeConstraint>& cgg_constraints,
                                 const std::vector<RangeConstraint>& id_constraints, const CascadeModels& models,
                                 const Simulator& simulator, const TwoStageOptions& options) {
  TwoStageResult out;
  ExtractionRequest cgg_req{Stage::kCgg, {cgg_curve.begin(), cgg_curve.end()}, cgg_constraints, std::nullopt};
  out.cgg = extract(cgg_req, models.cgg_inverse, simulator, options.thresholds, models.cgg_hash);

  double phig = out.cgg.param("PHIG");
  if (options.phig_handoff_offset != 0.0)
    phig = std::clamp(phig + options.phig_handoff_offset, phig_spec().global_min, phig_spec().global_max);
  ExtractionRequest id_req{Stage::kId, {id_curve.begin(), id_curve.end()}, id_constraints, phig};
  out.id = extract(id_req, models.id_inverse, simulator, options.thresholds, models.id_hash);

  out.provenance_id = content_hash(out.cgg.provenance_id + "+" + out.id.provenance_id);
  out.cgg.provenance_id = out.provenance_id;
  out.id.provenance_id = out.provenance_id;
  return out;
}

json result_to_json(const ExtractionResult& r) {
  const auto specs = stage_parameters(r.stage);
  json j;
  j["stage"] = to_string(r.stage);
  json params = json::object();
  json norm = json::object();
  json sat = json::object();
  json cons = json::object();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string name(specs[i].name);
    params[name] = r.params[i];
    norm[name] = r.normalized_outputs[i];
    sat[name] = to_string(r.saturation[i]);
    cons[name] = {r.constraints[i].local_min, r.constraints[i].local_max};
  }
  j["params"] = params;
  j["normalized_outputs"] = norm;
  j["saturation"] = sat;
  j["constraints"] = cons;
  j["fixed_phig"] = r.phig ? json(*r.phig) : json(nullptr);
  j["rmse_percent"] = r.rmse_percent;
  const auto& grid = BiasGrid::canonical();
  json curves;
  if (r.stage == Stage::kCgg) {
    curves["vg"] = std::vector<double>(grid.cgg_vg.begin(), grid.cgg_vg.end());
  } else {
    std::vector<double> vg;
    std::vector<double> vd;
    for (double d : grid.id_vd)
      for (double g : grid.id_vg) {
        vg.push_back(g);
        vd.push_back(d);
      }
    curves["vg"] = vg;
    curves["vd"] = vd;
  }
  curves["target"] = r.target.values;
  curves["reconstructed"] = r.reconstructed.values;
  curves["target_scaled"] = r.target.scaled;
  curves["reconstructed_scaled"] = r.reconstructed.scaled;
  j["curves"] = curves;
  j["model_hash"] = r.model_hash;
  j["provenance_id"] = r.provenance_id;
  return j;
}

json result_to_json(const TwoStageResult& r) {
  json j;
  j["cgg"] = result_to_json(r.cgg);
  j["id"] = result_to_json(r.id);
  j["provenance_id"] = r.provenance_id;
  return j;
}

}  // namespace floatnorm
