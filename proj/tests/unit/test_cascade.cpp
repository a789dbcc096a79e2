#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <optional>

#include "floatnorm/cascade.hpp"
#include "floatnorm/error.hpp"
#include "floatnorm/model_io.hpp"
#include "floatnorm/sampling.hpp"

using namespace floatnorm;

namespace {

const AnalyticSurrogate& sim() {
  static const AnalyticSurrogate s;
  return s;
}

CascadeTrainOptions small_options(std::uint64_t seed, std::size_t epochs = 3) {
  CascadeTrainOptions o;
  o.shape = {2, 16};
  o.train.batch_size = 32;
  o.train.max_epochs = epochs;
  o.train.seed = seed;
  o.init_seed = seed;
  return o;
}

MlpNetwork untrained_inverse(Stage stage, std::uint64_t seed) {
  std::vector<std::size_t> dims{inverse_input_size(stage), 12, parameter_count(stage)};
  MlpNetwork n = init_network(dims, Activation::kRelu, Activation::kSigmoid, seed);
  n.metadata = cascade_metadata(stage, Scheme::kCustom);
  // Wide biases push many outputs toward the sigmoid tails.
  Rng rng = make_rng(seed, 1);
  for (auto& l : n.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = uniform(rng, -6.0, 6.0);
  return n;
}

std::vector<double> cgg_curve(const CggParams& p) { return sim().simulate_cgg(p).values; }
std::vector<double> id_curve(const IdParams& p) { return sim().simulate_id(p).values; }

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Layout, InputSizes) {
  EXPECT_EQ(forward_input_size(Stage::kCgg), 18u);
  EXPECT_EQ(inverse_input_size(Stage::kCgg), 27u);
  EXPECT_EQ(forward_input_size(Stage::kId), 34u);
  EXPECT_EQ(inverse_input_size(Stage::kId), 39u);
}

TEST(Layout, RangesGloballyScaledAndPhigLast) {
  const auto specs = id_parameters();
  auto ranges = global_constraints(Stage::kId);
  const double lo = specs[0].global_min + 0.25 * (specs[0].global_max - specs[0].global_min);
  ranges[0] = {lo, specs[0].global_max};
  const double phig = 4.5;
  const auto in = forward_input(Stage::kId, std::vector<double>(11, 0.3), ranges, phig);
  ASSERT_EQ(in.size(), 34u);
  EXPECT_EQ(in[0], 0.3);
  EXPECT_NEAR(in[11], 0.25, 1e-12);
  EXPECT_EQ(in[12], 1.0);
  EXPECT_EQ(in[13], 0.0);
  EXPECT_DOUBLE_EQ(in[33], normalize_global(phig, phig_spec()));
  EXPECT_THROW(forward_input(Stage::kId, std::vector<double>(11, 0.3), ranges, std::nullopt), Error);

  const auto inv = inverse_input(Stage::kCgg, std::vector<double>(15, 0.7), global_constraints(Stage::kCgg), {});
  ASSERT_EQ(inv.size(), 27u);
  for (std::size_t i = 15; i < 27; ++i) EXPECT_EQ(inv[i], i % 2 ? 0.0 : 1.0);
  EXPECT_THROW(inverse_input(Stage::kCgg, std::vector<double>(14, 0.7), global_constraints(Stage::kCgg), {}), Error);
}

TEST(Layout, DatasetMatricesMatchPerSampleLayout) {
  const Dataset ds = build_dataset(Stage::kId, Scheme::kCustom, 20, 3, sim());
  const auto f = forward_inputs(ds);
  const auto v = inverse_inputs(ds);
  const auto t = curve_targets(ds);
  ASSERT_EQ(f.rows(), 34);
  ASSERT_EQ(v.rows(), 39);
  ASSERT_EQ(t.rows(), 16);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    const auto fi = forward_input(Stage::kId, s.normalized, s.ranges, s.phig);
    const auto vi = inverse_input(Stage::kId, s.curve, s.ranges, s.phig);
    for (std::size_t r = 0; r < fi.size(); ++r) EXPECT_EQ(f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)), fi[r]);
    for (std::size_t r = 0; r < vi.size(); ++r) EXPECT_EQ(v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)), vi[r]);
  }
}

TEST(Training, ForwardDeterministicAndStageChecked) {
  const Dataset ds = build_dataset(Stage::kCgg, Scheme::kCustom, 300, 1, sim());
  const TrainedNet a = train_forward(Stage::kCgg, ds, small_options(4));
  const TrainedNet b = train_forward(Stage::kCgg, ds, small_options(4));
  EXPECT_EQ(model_to_json(a.net).dump(), model_to_json(b.net).dump());
  EXPECT_EQ(a.net.metadata.stage, "cgg");
  EXPECT_EQ(a.net.metadata.scheme, "custom");
  EXPECT_EQ(a.net.output_activation(), Activation::kLinear);
  EXPECT_EQ(a.net.dims(), (std::vector<std::size_t>{18, 16, 16, 15}));
  EXPECT_THROW(train_forward(Stage::kId, ds, small_options(4)), Error);
}

TEST(Training, InverseRequiresFrozenForwardAndLeavesItUntouched) {
  const Dataset ds = build_dataset(Stage::kCgg, Scheme::kCustom, 300, 2, sim());
  TrainedNet fwd = train_forward(Stage::kCgg, ds, small_options(5));
  EXPECT_THROW(train_inverse(fwd.net, ds, small_options(6)), Error);
  fwd.net.freeze();
  const std::string before = weights_hash(fwd.net);
  const TrainedNet inv = train_inverse(fwd.net, ds, small_options(6));
  EXPECT_EQ(weights_hash(fwd.net), before);
  EXPECT_EQ(inv.net.output_activation(), Activation::kSigmoid);
  EXPECT_NO_THROW(check_inverse_net(inv.net, Stage::kCgg));
  EXPECT_LE(inv.report.best_validation_mse, inv.report.epochs.front().validation_mse);
  EXPECT_TRUE(std::isfinite(cascade_reconstruction_mse(fwd.net, inv.net, ds)));

  const Dataset id = build_dataset(Stage::kId, Scheme::kCustom, 50, 2, sim());
  EXPECT_THROW(train_inverse(fwd.net, id, small_options(6)), Error);
}

TEST(Training, ForwardMseRejectsSchemeMismatch) {
  const Dataset custom = build_dataset(Stage::kCgg, Scheme::kCustom, 100, 7, sim());
  const Dataset fixed = build_dataset(Stage::kCgg, Scheme::kFixed, 100, 7, sim());
  const TrainedNet f = train_forward(Stage::kCgg, fixed, small_options(1, 1));
  EXPECT_GE(forward_mse(f.net, fixed), 0.0);
  EXPECT_THROW(forward_mse(f.net, custom), Error);
}

TEST(Extraction, ConstraintsAlwaysSatisfied) {
  const MlpNetwork cgg = untrained_inverse(Stage::kCgg, 11);
  const MlpNetwork id = untrained_inverse(Stage::kId, 12);
  Rng rng = make_rng(99, 0);
  std::size_t checked = 0;
  for (int t = 0; t < 5000; ++t) {
    const Stage stage = t % 2 ? Stage::kId : Stage::kCgg;
    const auto specs = stage_parameters(stage);
    const auto truth = sample_params(specs, rng);
    std::vector<RangeConstraint> ranges;
    for (std::size_t i = 0; i < specs.size(); ++i) ranges.push_back(sample_local_range(specs[i], truth[i], rng, 0.2));
    ExtractionRequest req{stage, {}, ranges, std::nullopt};
    if (stage == Stage::kCgg) {
      req.curve = cgg_curve(CggParams::from_array(truth));
    } else {
      req.fixed_phig = uniform(rng, phig_spec().global_min, phig_spec().global_max);
      req.curve = id_curve(IdParams::from_array(truth, *req.fixed_phig));
    }
    const ExtractionResult r = extract(req, stage == Stage::kCgg ? cgg : id, sim());
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& c = ranges[i];
      ASSERT_GE(r.params[i], c.local_min);
      ASSERT_LE(r.params[i], c.local_max);
      if (c.local_min == c.local_max) {
        ASSERT_EQ(r.params[i], c.local_min);
        ASSERT_EQ(r.saturation[i], Saturation::kNone);
      }
      ASSERT_GT(r.normalized_outputs[i], 0.0);
      ASSERT_LT(r.normalized_outputs[i], 1.0);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2500u * 6 + 2500u * 11);
}

TEST(Extraction, FixedPhigIsExactAndDeterministic) {
  const MlpNetwork cgg = untrained_inverse(Stage::kCgg, 3);
  auto ranges = global_constraints(Stage::kCgg);
  ranges[0] = {4.7, 4.7};
  CggParams truth;
  truth.phig = 4.4;
  const ExtractionRequest req{Stage::kCgg, cgg_curve(truth), ranges, std::nullopt};
  const ExtractionResult a = extract(req, cgg, sim());
  const ExtractionResult b = extract(req, cgg, sim());
  EXPECT_EQ(a.param("PHIG"), 4.7);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.rmse_percent, b.rmse_percent);
  EXPECT_EQ(a.provenance_id, b.provenance_id);
  EXPECT_EQ(result_to_json(a).dump(), result_to_json(b).dump());
  EXPECT_EQ(a.reconstructed.values, sim().simulate_cgg(CggParams::from_array(a.params)).values);
}

TEST(Extraction, SaturationFlagsFollowThresholds) {
  MlpNetwork n = untrained_inverse(Stage::kCgg, 4);
  for (auto& l : n.layers) l.weights.setZero();
  auto& out = n.layers.back();
  out.bias << -10.0, 10.0, 0.0, -10.0, 10.0, 0.0;
  auto ranges = global_constraints(Stage::kCgg);
  ranges[3] = {ranges[3].local_min, ranges[3].local_min};
  const ExtractionResult r = extract({Stage::kCgg, cgg_curve({}), ranges, std::nullopt}, n, sim());
  EXPECT_EQ(r.saturation_of("PHIG"), Saturation::kLow);
  EXPECT_EQ(r.saturation_of("CFS"), Saturation::kHigh);
  EXPECT_EQ(r.saturation_of("EOT"), Saturation::kNone);
  EXPECT_EQ(r.saturation_of("QMFACTOR"), Saturation::kNone);  // zero span
  EXPECT_EQ(r.saturation_of("QMTCECV"), Saturation::kHigh);
  EXPECT_EQ(to_string(Saturation::kLow), "low");
  const auto j = result_to_json(r);
  EXPECT_EQ(j["saturation"]["PHIG"], "low");
  EXPECT_EQ(j["params"].size(), 6u);
  EXPECT_EQ(j["curves"]["target"].size(), 15u);
  EXPECT_TRUE(j["fixed_phig"].is_null());
}

TEST(Extraction, RequestValidation) {
  const MlpNetwork cgg = untrained_inverse(Stage::kCgg, 5);
  const MlpNetwork id = untrained_inverse(Stage::kId, 6);
  const auto good = cgg_curve({});
  EXPECT_EQ(kind_of([&] { extract({Stage::kCgg, std::vector<double>(14, 1e-16), {}, {}}, cgg, sim()); }),
            ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { extract({Stage::kCgg, good, {}, 4.5}, cgg, sim()); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { extract({Stage::kId, id_curve({}), {}, {}}, id, sim()); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { extract({Stage::kId, id_curve({}), {}, 9.0}, id, sim()); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(kind_of([&] { extract({Stage::kId, good, {}, 4.5}, cgg, sim()); }), ErrorKind::kInvalidInput);
  auto bad = global_constraints(Stage::kCgg);
  bad[2] = {bad[2].local_min * 0.5, bad[2].local_max};
  try {
    extract({Stage::kCgg, good, bad, {}}, cgg, sim());
    FAIL();
  } catch (const Error& e) {
    ASSERT_TRUE(e.parameter());
    EXPECT_EQ(*e.parameter(), "EOT");
  }
  EXPECT_EQ(kind_of([&] { check_inverse_net(MlpNetwork{}, Stage::kCgg); }), ErrorKind::kUnavailable);
  MlpNetwork drifted = cgg;
  std::swap(drifted.metadata.parameter_order[0], drifted.metadata.parameter_order[1]);
  EXPECT_THROW(check_inverse_net(drifted, Stage::kCgg), Error);
}

TEST(Extraction, ConstraintsFromMap) {
  const auto c = constraints_from_map(Stage::kCgg, {{"PHIG", {4.7, 4.8}}});
  EXPECT_EQ(c[0].local_min, 4.7);
  EXPECT_EQ(c[1].local_min, global_constraints(Stage::kCgg)[1].local_min);
  EXPECT_THROW(constraints_from_map(Stage::kCgg, {{"U0", {0.02, 0.03}}}), Error);
  EXPECT_THROW(constraints_from_map(Stage::kCgg, {{"PHIG", {4.8, 4.7}}}), Error);
}

TEST(Rmse, WorkedExamples) {
  std::vector<double> t(15);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1e-16 * static_cast<double>(i + 1);
  EXPECT_EQ(rmse_percent(t, t, CurveKind::kCgg), 0.0);
  std::vector<double> f = t;
  for (auto& v : f) v *= 1.01;
  EXPECT_NEAR(rmse_percent(f, t, CurveKind::kCgg), 1.0, 1e-9);
  f = t;
  f[4] *= 1.1;
  EXPECT_NEAR(rmse_percent(f, t, CurveKind::kCgg), 100.0 * std::sqrt(0.01 / 15.0), 1e-9);
  EXPECT_NEAR(rmse_percent(f, t, CurveKind::kCgg), 2.582, 1e-3);
  // Below the floor the error is measured against the floor.
  EXPECT_NEAR(rmse_percent(std::vector<double>{2e-15}, std::vector<double>{1e-15}, CurveKind::kId), 10.0, 1e-9);
  EXPECT_THROW(rmse_percent(t, std::vector<double>(3, 1.0), CurveKind::kCgg), Error);
}

TEST(TwoStage, PhigHandoffIsBitExact) {
  CascadeModels m{untrained_inverse(Stage::kCgg, 7), untrained_inverse(Stage::kId, 8), "h1", "h2"};
  IdParams id;
  id.phig = 4.4;
  CggParams cgg;
  cgg.phig = 4.4;
  const auto r = two_stage_extract(cgg_curve(cgg), id_curve(id), {}, {}, m, sim());
  ASSERT_TRUE(r.id.phig);
  EXPECT_EQ(*r.id.phig, r.cgg.param("PHIG"));
  EXPECT_EQ(r.cgg.model_hash, "h1");
  EXPECT_EQ(r.id.model_hash, "h2");
  EXPECT_FALSE(r.provenance_id.empty());
  EXPECT_EQ(r.cgg.provenance_id, r.provenance_id);
  EXPECT_EQ(r.id.provenance_id, r.provenance_id);

  TwoStageOptions shifted;
  shifted.phig_handoff_offset = 0.2;
  const auto s = two_stage_extract(cgg_curve(cgg), id_curve(id), {}, {}, m, sim(), shifted);
  EXPECT_DOUBLE_EQ(*s.id.phig, std::min(r.cgg.param("PHIG") + 0.2, phig_spec().global_max));
  EXPECT_NE(s.provenance_id, r.provenance_id);
  const auto j = result_to_json(r);
  EXPECT_EQ(j["provenance_id"], r.provenance_id);
  EXPECT_EQ(j["id"]["fixed_phig"], *r.id.phig);
}
