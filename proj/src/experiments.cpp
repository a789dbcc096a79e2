#include "floatnorm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"
#include "floatnorm/sampling.hpp"

namespace floatnorm {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// Distinct generator streams for the study's datasets.
std::uint64_t validation_seed(std::uint64_t seed, Stage stage, Scheme scheme) {
  return seed * 1000003u + 17u * (static_cast<unsigned>(stage) + 1u) + 5u * static_cast<unsigned>(scheme) + 0xA11u;
}

std::uint64_t training_seed(std::uint64_t seed, Stage stage, Scheme scheme, std::uint64_t cell_seed) {
  return seed * 1000003u + cell_seed * 7919u + 31u * (static_cast<unsigned>(stage) + 1u) +
         3u * static_cast<unsigned>(scheme);
}

Dataset prefix(const Dataset& ds, std::size_t n) {
  Dataset out;
  out.stage = ds.stage;
  out.scheme = ds.scheme;
  out.metadata = ds.metadata;
  out.metadata.n_samples = n;
  out.samples.assign(ds.samples.begin(), ds.samples.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

}  // namespace

Crossing crossing_sample_count(std::span<const std::size_t> n, std::span<const double> mse, double target) {
  if (n.size() != mse.size()) throw invalid_input("crossing: ladder and MSE lengths differ");
  std::vector<double> ln;
  std::vector<double> lm;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!std::isfinite(mse[i]) || mse[i] <= 0.0) continue;
    ln.push_back(std::log(static_cast<double>(n[i])));
    lm.push_back(std::log(mse[i]));
  }
  Crossing c{kNaN, false};
  if (ln.empty() || !(target > 0.0)) return c;
  const double lt = std::log(target);
  auto along = [&](std::size_t a, std::size_t b) {
    const double slope = (lm[b] - lm[a]) / (ln[b] - ln[a]);
    if (!(slope < 0.0)) return kNaN;
    return std::exp(ln[a] + (lt - lm[a]) / slope);
  };
  for (std::size_t i = 0; i < ln.size(); ++i) {
    if (lm[i] > lt) continue;
    if (lm[i] == lt) return {std::exp(ln[i]), false};
    if (i == 0) {
      c.extrapolated = true;
      c.n = ln.size() > 1 ? along(0, 1) : kNaN;
      return c;
    }
    return {along(i - 1, i), false};
  }
  c.extrapolated = true;
  c.n = ln.size() > 1 ? along(ln.size() - 2, ln.size() - 1) : kNaN;
  return c;
}

StageConvergence summarize_convergence(Stage stage, std::span<const ConvergenceRow> rows,
                                       std::optional<double> target_mse) {
  StageConvergence s;
  s.stage = stage;
  std::vector<std::size_t> ladder;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rows) {
    if (r.stage != stage) continue;
    if (std::find(ladder.begin(), ladder.end(), r.n_train) == ladder.end()) ladder.push_back(r.n_train);
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  }
  std::sort(ladder.begin(), ladder.end());
  std::sort(seeds.begin(), seeds.end());

  auto curve = [&](Scheme scheme, std::optional<std::uint64_t> seed) {
    std::vector<double> out;
    for (std::size_t n : ladder) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.stage == stage && r.scheme == scheme && r.n_train == n && (!seed || r.seed == *seed))
          v.push_back(r.validation_mse);
      out.push_back(median(v));
    }
    return out;
  };
  const auto fixed_med = curve(Scheme::kFixed, std::nullopt);
  const auto custom_med = curve(Scheme::kCustom, std::nullopt);

  if (target_mse) {
    s.target_mse = *target_mse;
  } else {
    // The lowest error both schemes reach on their median curves.
    auto best = [](const std::vector<double>& v) {
      double b = std::numeric_limits<double>::infinity();
      for (double x : v)
        if (std::isfinite(x)) b = std::min(b, x);
      return b;
    };
    s.target_mse = std::max(best(fixed_med), best(custom_med));
    if (!std::isfinite(s.target_mse)) s.target_mse = kNaN;
  }
  s.fixed_median = crossing_sample_count(ladder, fixed_med, s.target_mse);
  s.custom_median = crossing_sample_count(ladder, custom_med, s.target_mse);

  std::vector<double> ratios;
  for (std::uint64_t seed : seeds) {
    const Crossing f = crossing_sample_count(ladder, curve(Scheme::kFixed, seed), s.target_mse);
    const Crossing c = crossing_sample_count(ladder, curve(Scheme::kCustom, seed), s.target_mse);
    const double ratio = c.n / f.n;
    s.ratio_by_seed[seed] = ratio;
    ratios.push_back(ratio);
  }
  s.median_ratio = median(ratios);
  return s;
}

ConvergenceResult convergence_study(const ConvergenceRequest& req, const Simulator& simulator,
                                    const ProgressFn& progress) {
  const auto& cfg = req.settings;
  if (req.cross_evaluate)
    throw invalid_input("cross-scheme evaluation is not supported: fixed-scheme nets never see varying range inputs");
  if (cfg.sample_counts.empty()) throw invalid_input("convergence study needs a sample ladder", "sample_counts");
  if (!std::is_sorted(cfg.sample_counts.begin(), cfg.sample_counts.end()) ||
      std::adjacent_find(cfg.sample_counts.begin(), cfg.sample_counts.end()) != cfg.sample_counts.end())
    throw invalid_input("sample_counts must be strictly ascending", "sample_counts");
  if (cfg.sample_counts.front() < 2) throw invalid_input("sample counts must be at least 2", "sample_counts");
  if (cfg.seeds.size() < 2) throw invalid_input("convergence study needs at least two seeds", "seeds");
  if (cfg.validation_size < 1) throw invalid_input("validation_size must be positive", "validation_size");

  ConvergenceResult result;
  const std::size_t n_max = cfg.sample_counts.back();
  for (Stage stage : cfg.stages) {
    for (Scheme scheme : {Scheme::kFixed, Scheme::kCustom}) {
      const Dataset validation = build_dataset(stage, scheme, cfg.validation_size,
                                               validation_seed(req.seed, stage, scheme), simulator, req.sampling);
      for (std::uint64_t cell_seed : cfg.seeds) {
        const Dataset pool = build_dataset(stage, scheme, n_max, training_seed(req.seed, stage, scheme, cell_seed),
                                           simulator, req.sampling);
        for (std::size_t n : cfg.sample_counts) {
          ConvergenceRow row{stage, scheme, n, cell_seed, kNaN, 0.0, 0, {}};
          try {
            CascadeTrainOptions opts{cfg.net.train, cfg.net.shape, cell_seed};
            opts.train.seed = cell_seed;
            if (cfg.steps_per_cell > 0) {
              const double n_fit = std::max(1.0, std::floor(static_cast<double>(n) * (1.0 - opts.train.validation_fraction)));
              const double batches = std::ceil(n_fit / static_cast<double>(opts.train.batch_size));
              opts.train.max_epochs =
                  static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.steps_per_cell) / batches));
            }
            const TrainedNet t = train_forward(stage, prefix(pool, n), opts);
            row.validation_mse = forward_mse(t.net, validation);
            row.wall_seconds = t.report.wall_seconds;
            row.epochs = t.report.epochs.size();
          } catch (const std::exception& e) {
            row.error = sanitize(e.what());
          }
          if (progress) {
            std::ostringstream msg;
            msg << to_string(stage) << ' ' << to_string(scheme) << " n=" << n << " seed=" << cell_seed
                << " mse=" << row.validation_mse << " epochs=" << row.epochs << " (" << row.wall_seconds << " s)";
            if (!row.error.empty()) msg << " error: " << row.error;
            progress(msg.str());
          }
          result.rows.push_back(std::move(row));
        }
      }
    }
    result.stages.push_back(summarize_convergence(stage, result.rows, cfg.target_mse));
  }
  return result;
}

// ---------------------------------------------------------------------------

DeviceTruth random_device(std::uint64_t seed, double phig) {
  if (!phig_spec().contains(phig)) throw invalid_input("PHIG outside its global range", "PHIG");
  Rng rng = make_rng(seed, 0xDE1CE);
  DeviceTruth d;
  d.cgg = CggParams::from_array(sample_params(cgg_parameters(), rng));
  d.id = IdParams::from_array(sample_params(id_parameters(), rng), phig);
  d.cgg.phig = phig;
  return d;
}

std::vector<ConstraintSet> make_constraint_sets(const DeviceTruth& truth, std::size_t n_random, std::uint64_t seed,
                                                const RangeConstraint& infeasible_phig) {
  validate_constraint(phig_spec(), infeasible_phig);
  std::vector<ConstraintSet> sets;
  sets.push_back({"PS1", global_constraints(Stage::kCgg), global_constraints(Stage::kId), true});

  const auto cgg_x = truth.cgg.to_array();
  const auto id_x = truth.id.to_array();
  auto narrowed = [](std::span<const ParameterSpec> specs, std::span<const double> x, Rng& rng) {
    std::vector<RangeConstraint> out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (unit_uniform(rng) < 0.5)
        out.push_back(RangeConstraint::global(specs[i]));
      else
        out.push_back(sample_local_range(specs[i], x[i], rng, 0.0));
    }
    return out;
  };
  for (std::size_t k = 0; k < n_random; ++k) {
    Rng rng = make_rng(seed, k);
    ConstraintSet s;
    s.label = "PS" + std::to_string(k + 2);
    s.cgg = narrowed(cgg_parameters(), cgg_x, rng);
    s.id = narrowed(id_parameters(), id_x, rng);
    sets.push_back(std::move(s));
  }
  ConstraintSet bad{"PS" + std::to_string(n_random + 2), global_constraints(Stage::kCgg), global_constraints(Stage::kId),
                    true};
  bad.cgg[phig_spec().index] = infeasible_phig;
  bad.feasible = infeasible_phig.contains(truth.cgg.phig);
  sets.push_back(std::move(bad));
  return sets;
}

std::vector<StudyRow> multi_range_study(const CggParams& cgg_truth, const IdParams& id_truth,
                                        std::span<const ConstraintSet> sets, const CascadeModels& models,
                                        const Simulator& simulator, const TwoStageOptions& options,
                                        std::size_t device) {
  const CurveVector cgg_curve = simulator.simulate_cgg(cgg_truth);
  const CurveVector id_curve = simulator.simulate_id(id_truth);
  std::vector<StudyRow> rows;
  for (const auto& set : sets) {
    StudyRow row;
    row.device = device;
    row.constraints = set;
    row.result = two_stage_extract(cgg_curve.values, id_curve.values, set.cgg, set.id, models, simulator, options);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<double> central_difference(const std::function<double(double)>& f, std::span<const double> xs, double h) {
  if (!(h > 0.0)) throw invalid_input("finite-difference step must be positive");
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back((f(x + h) - f(x - h)) / (2.0 * h));
  return out;
}

std::vector<DerivativeCurve> derivative_report(const IdParams& target, const IdParams& fit, const Simulator& simulator,
                                               double step) {
  if (!(step > 0.0 && step <= 0.35)) throw invalid_input("sweep step must lie in (0, 0.35]");
  const double h = 0.5 * step;
  const auto n_pts = static_cast<int>(std::llround(0.7 / step));
  std::vector<double> vg;
  std::vector<double> vd;
  for (int k = 0; k <= n_pts; ++k) vg.push_back(k * 0.7 / n_pts);
  for (int k = 1; k <= n_pts; ++k) vd.push_back(k * 0.7 / n_pts);

  std::vector<DerivativeCurve> out;
  for (double d : BiasGrid::canonical().id_vd) {
    DerivativeCurve c{"gm_vd" + format_double(d), "vg", vg, {}, {}};
    c.target = central_difference([&](double g) { return simulator.id_at(target, g, d); }, vg, h);
    c.fit = central_difference([&](double g) { return simulator.id_at(fit, g, d); }, vg, h);
    out.push_back(std::move(c));
  }
  for (double g : {0.3, 0.5, 0.7}) {
    DerivativeCurve c{"gd_vg" + format_double(g), "vd", vd, {}, {}};
    c.target = central_difference([&](double d) { return simulator.id_at(target, g, d); }, vd, h);
    c.fit = central_difference([&](double d) { return simulator.id_at(fit, g, d); }, vd, h);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kConvergenceHeader = "stage,scheme,n_train,seed,validation_mse,epochs,error";
constexpr std::string_view kMultiRangeHeader =
    "device,label,stage,parameter,value,local_min,local_max,saturation,rmse_percent";

template <typename T>
T parse_uint(std::string_view s, std::size_t line) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw parse_error("expected an unsigned integer, found '" + std::string(s) + "'", line);
  return v;
}

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  if (!parse_double(s, v)) throw parse_error("expected a number, found '" + std::string(s) + "'", line);
  return v;
}

template <typename Fn>
void for_each_row(std::string_view text, std::string_view header, std::size_t columns, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != header) throw parse_error("unexpected header", line_no);
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns)
      throw parse_error("expected " + std::to_string(columns) + " columns, found " + std::to_string(cells.size()),
                        line_no);
    fn(cells, line_no);
  }
  if (!saw_header) throw parse_error("empty report file", 1);
}

}  // namespace

std::string convergence_csv(std::span<const ConvergenceRow> rows) {
  std::string out(kConvergenceHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(to_string(r.stage)) + ',' + std::string(to_string(r.scheme)) + ',' + std::to_string(r.n_train) +
           ',' + std::to_string(r.seed) + ',' + format_double(r.validation_mse) + ',' + std::to_string(r.epochs) + ',' +
           sanitize(r.error) + '\n';
  }
  return out;
}

std::vector<ConvergenceRow> parse_convergence_csv(std::string_view text) {
  std::vector<ConvergenceRow> rows;
  for_each_row(text, kConvergenceHeader, 7, [&](const auto& c, std::size_t line) {
    ConvergenceRow r;
    r.stage = parse_stage(c[0]);
    r.scheme = parse_scheme(c[1]);
    r.n_train = parse_uint<std::size_t>(c[2], line);
    r.seed = parse_uint<std::uint64_t>(c[3], line);
    r.validation_mse = parse_number(c[4], line);
    r.epochs = parse_uint<std::size_t>(c[5], line);
    r.error = std::string(c[6]);
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<MultiRangeRecord> multirange_records(std::span<const StudyRow> rows) {
  std::vector<MultiRangeRecord> out;
  for (const auto& row : rows) {
    for (const ExtractionResult* r : {&row.result.cgg, &row.result.id}) {
      const auto specs = stage_parameters(r->stage);
      for (std::size_t i = 0; i < specs.size(); ++i) {
        out.push_back({row.device, row.constraints.label, std::string(to_string(r->stage)), std::string(specs[i].name),
                       r->params[i], r->constraints[i].local_min, r->constraints[i].local_max,
                       std::string(to_string(r->saturation[i])), r->rmse_percent});
      }
    }
  }
  return out;
}

std::string multirange_csv(std::span<const StudyRow> rows) {
  std::string out(kMultiRangeHeader);
  out += '\n';
  for (const auto& r : multirange_records(rows)) {
    out += std::to_string(r.device) + ',' + sanitize(r.label) + ',' + r.stage + ',' + r.parameter + ',' +
           format_double(r.value) + ',' + format_double(r.local_min) + ',' + format_double(r.local_max) + ',' +
           r.saturation + ',' + format_double(r.rmse_percent) + '\n';
  }
  return out;
}

std::vector<MultiRangeRecord> parse_multirange_csv(std::string_view text) {
  std::vector<MultiRangeRecord> out;
  for_each_row(text, kMultiRangeHeader, 9, [&](const auto& c, std::size_t line) {
    MultiRangeRecord r;
    r.device = parse_uint<std::size_t>(c[0], line);
    r.label = std::string(c[1]);
    r.stage = std::string(c[2]);
    r.parameter = std::string(c[3]);
    r.value = parse_number(c[4], line);
    r.local_min = parse_number(c[5], line);
    r.local_max = parse_number(c[6], line);
    r.saturation = std::string(c[7]);
    r.rmse_percent = parse_number(c[8], line);
    out.push_back(std::move(r));
  });
  return out;
}

std::string derivative_csv(const DerivativeCurve& c) {
  std::string out = "bias,target_derivative,fit_derivative\n";
  for (std::size_t i = 0; i < c.x.size(); ++i)
    out += format_double(c.x[i]) + ',' + format_double(c.target[i]) + ',' + format_double(c.fit[i]) + '\n';
  return out;
}

json emit_report(const std::filesystem::path& dir, const std::map<std::string, std::string>& files,
                 const ReportMetadata& metadata) {
  json file_hashes = json::object();
  for (const auto& [name, contents] : files) {
    if (name == "metadata.json" || name == "manifest.json")
      throw invalid_input("report file name '" + name + "' is reserved");
    write_file(dir / name, contents);
    file_hashes[name] = content_hash(contents);
  }
  json meta = {{"study", metadata.study},
               {"seeds", metadata.seeds},
               {"config_hash", metadata.config_hash},
               {"model_hashes", metadata.model_hashes},
               {"dataset_hashes", metadata.dataset_hashes},
               {"extra", metadata.extra}};
  const std::string meta_text = meta.dump(2) + "\n";
  write_file(dir / "metadata.json", meta_text);
  json manifest = {{"format_version", 1}, {"files", file_hashes}, {"metadata", content_hash(meta_text)}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

json convergence_summary_json(const ConvergenceResult& result) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json stages = json::array();
  for (const auto& s : result.stages) {
    json ratios = json::object();
    for (const auto& [seed, r] : s.ratio_by_seed) ratios[std::to_string(seed)] = num(r);
    stages.push_back({{"stage", to_string(s.stage)},
                      {"target_mse", num(s.target_mse)},
                      {"ratio_by_seed", ratios},
                      {"median_ratio", num(s.median_ratio)},
                      {"fixed_samples_needed", num(s.fixed_median.n)},
                      {"fixed_extrapolated", s.fixed_median.extrapolated},
                      {"custom_samples_needed", num(s.custom_median.n)},
                      {"custom_extrapolated", s.custom_median.extrapolated}});
  }
  return {{"stages", stages}};
}

}  // namespace floatnorm
