#include "cli.hpp"

#include <cmath>
#include <iostream>
#include <optional>

#include "floatnorm/cascade.hpp"
#include "floatnorm/config.hpp"
#include "floatnorm/curve_io.hpp"
#include "floatnorm/dataset.hpp"
#include "floatnorm/error.hpp"
#include "floatnorm/experiments.hpp"
#include "floatnorm/io_util.hpp"
#include "floatnorm/model_io.hpp"
#include "floatnorm/service.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen headers.
#include <CLI11.hpp>
#include <httplib.h>

namespace floatnorm::cli {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_error(std::ostream& err, const std::string& kind, const std::string& message,
                 const std::optional<std::string>& parameter = std::nullopt) {
  json j = {{"error", message}, {"kind", kind}};
  if (parameter) j["parameter"] = *parameter;
  err << j.dump() << '\n';
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw parse_error(path + " is not valid JSON: " + e.what());
  }
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_file(path, text);
}

json report_summary(const TrainReport& r) {
  return {{"epochs", r.epochs.size()},
          {"best_epoch", r.best_epoch},
          {"best_validation_mse", r.best_validation_mse},
          {"stop_reason", r.stop_reason},
          {"wall_seconds", r.wall_seconds}};
}

void check_stage(Stage requested, Stage actual, const std::string& what) {
  if (requested != actual)
    throw UsageError("--stage " + std::string(to_string(requested)) + " contradicts the " +
                     std::string(to_string(actual)) + "-stage " + what);
}

CascadeModels load_cascade(const std::filesystem::path& dir) {
  const ServiceModels m = load_service_models(dir);
  if (!m.cgg || !m.id) throw Error(ErrorKind::kUnavailable, "models directory " + dir.string() + " is incomplete");
  return {m.cgg->network, m.id->network, m.cgg->content_hash, m.id->content_hash};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Range-constrained compact-model parameter extraction with cascaded networks", "floatnorm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  const std::map<std::string, std::string> stages{{"cgg", "cgg"}, {"id", "id"}};
  const std::map<std::string, std::string> schemes{{"fixed", "fixed"}, {"custom", "custom"}};

  std::string stage_s, scheme_s, out_path, config_path, data_path, forward_path, inverse_path, curve_path,
      ranges_path, params_path, in_path, models_dir, static_dir, study_kind, host = "127.0.0.1";
  std::size_t n = 0, k = 0;
  std::uint64_t seed = 0;
  double p_fixed = 0.1;
  double p_global = 0.0;
  bool log_uniform = false;
  std::optional<double> fixed_phig;
  std::optional<double> phig_override;
  int port = 8080;

  auto* gen = app.add_subcommand("gen-data", "Simulate a training dataset");
  gen->add_option("--stage", stage_s, "cgg or id")->required()->check(CLI::IsMember(stages));
  gen->add_option("--scheme", scheme_s, "fixed or custom")->required()->check(CLI::IsMember(schemes));
  gen->add_option("--n", n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out_path, "Dataset CSV (metadata goes to PATH.json)")->required();
  gen->add_option("--p-fixed", p_fixed, "Probability of a pinned local range")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-global", p_global, "Probability that a sample keeps all global ranges")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--log-uniform", log_uniform, "Log-space draws for positive ranges");

  auto* aug = app.add_subcommand("augment", "Re-range a fixed-scheme dataset without simulating");
  aug->add_option("--in", in_path, "Fixed-scheme dataset CSV")->required();
  aug->add_option("--k", k, "Copies per sample")->required()->check(CLI::PositiveNumber);
  aug->add_option("--seed", seed, "Generator seed")->required();
  aug->add_option("--out", out_path, "Output dataset CSV")->required();
  aug->add_option("--p-fixed", p_fixed, "Probability of a pinned local range")->check(CLI::Range(0.0, 1.0));
  aug->add_option("--p-global", p_global, "Probability that a copy keeps all global ranges")
      ->check(CLI::Range(0.0, 1.0));

  auto* trf = app.add_subcommand("train-forward", "Train a forward network");
  trf->add_option("--stage", stage_s)->required()->check(CLI::IsMember(stages));
  trf->add_option("--data", data_path, "Dataset CSV")->required();
  trf->add_option("--config", config_path, "Run config JSON");
  trf->add_option("--out", out_path, "Model JSON")->required();

  auto* tri = app.add_subcommand("train-inverse", "Train an inverse network through a frozen forward network");
  tri->add_option("--stage", stage_s)->required()->check(CLI::IsMember(stages));
  tri->add_option("--forward", forward_path, "Forward model JSON")->required();
  tri->add_option("--data", data_path, "Dataset CSV")->required();
  tri->add_option("--config", config_path, "Run config JSON");
  tri->add_option("--out", out_path, "Model JSON")->required();

  auto* ext = app.add_subcommand("extract", "Extract parameters from a curve file");
  ext->add_option("--stage", stage_s)->required()->check(CLI::IsMember(stages));
  ext->add_option("--inverse", inverse_path, "Inverse model JSON")->required();
  ext->add_option("--curve", curve_path, "Curve CSV (bias_index,vg,vd,value,scaled)")->required();
  ext->add_option("--ranges", ranges_path, "Constraints JSON {name: [min, max]}");
  ext->add_option("--fixed-phig", fixed_phig, "PHIG in eV (Id stage)");
  ext->add_option("--out", out_path, "Result JSON (stdout if omitted)");

  auto* study = app.add_subcommand("study", "Run a study and emit its report");
  study->add_option("kind", study_kind, "convergence or multirange")
      ->required()
      ->check(CLI::IsMember({"convergence", "multirange"}));
  study->add_option("--config", config_path, "Run config JSON")->required();
  study->add_option("--out", out_path, "Report directory")->required();
  study->add_option("--models", models_dir, "Models directory (multirange; overrides the config)");

  auto* sim = app.add_subcommand("simulate", "Simulate a curve from parameters");
  sim->add_option("--stage", stage_s)->required()->check(CLI::IsMember(stages));
  sim->add_option("--params", params_path, "Parameters JSON {name: value}; omitted names take defaults");
  sim->add_option("--phig", phig_override, "PHIG in eV (Id stage)");
  sim->add_option("--out", out_path, "Curve CSV (stdout if omitted)");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--models", models_dir, "Models directory (FLOATNORM_MODELS overrides)");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--static", static_dir, "Static UI directory served at /");
  serve->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) {
      SamplingOptions opts;
      opts.p_fixed = p_fixed;
      opts.p_global = p_global;
      opts.log_uniform = log_uniform;
      const AnalyticSurrogate simulator;
      const Dataset ds = build_dataset(parse_stage(stage_s), parse_scheme(scheme_s), n, seed, simulator, opts);
      write_dataset(ds, out_path);
      out << json{{"samples", ds.size()}, {"out", out_path}, {"content_hash", file_content_hash(out_path)}}.dump()
          << '\n';
    } else if (aug->parsed()) {
      SamplingOptions opts;
      opts.p_fixed = p_fixed;
      opts.p_global = p_global;
      const Dataset ds = augment_with_ranges(read_dataset(in_path), k, seed, opts);
      write_dataset(ds, out_path);
      out << json{{"samples", ds.size()}, {"out", out_path}, {"content_hash", file_content_hash(out_path)}}.dump()
          << '\n';
    } else if (trf->parsed()) {
      const RunConfig cfg = config_or_default(config_path);
      const Dataset ds = read_dataset(data_path);
      check_stage(parse_stage(stage_s), ds.stage, "dataset");
      const TrainedNet t = train_forward(ds.stage, ds, cfg.forward_options());
      save_model(t.net, out_path);
      json summary = report_summary(t.report);
      summary["content_hash"] = file_content_hash(out_path);
      out << summary.dump() << '\n';
    } else if (tri->parsed()) {
      const RunConfig cfg = config_or_default(config_path);
      const Dataset ds = read_dataset(data_path);
      check_stage(parse_stage(stage_s), ds.stage, "dataset");
      LoadedModel fwd = load_model(forward_path);
      for (const auto& w : fwd.warnings) err << "warning: " << w << '\n';
      check_stage(parse_stage(stage_s), parse_stage(fwd.network.metadata.stage), "forward model");
      fwd.network.freeze();
      const std::string before = weights_hash(fwd.network);
      const TrainedNet t = train_inverse(fwd.network, ds, cfg.inverse_options());
      if (weights_hash(fwd.network) != before) throw Error(ErrorKind::kTraining, "forward weights changed");
      save_model(t.net, out_path);
      json summary = report_summary(t.report);
      summary["content_hash"] = file_content_hash(out_path);
      summary["forward_content_hash"] = fwd.content_hash;
      out << summary.dump() << '\n';
    } else if (ext->parsed()) {
      const Stage stage = parse_stage(stage_s);
      if (stage == Stage::kCgg && fixed_phig) throw UsageError("--fixed-phig only applies to --stage id");
      if (stage == Stage::kId && !fixed_phig) throw UsageError("--stage id requires --fixed-phig");
      const LoadedModel inv = load_model(inverse_path);
      for (const auto& w : inv.warnings) err << "warning: " << w << '\n';
      ExtractionRequest req;
      req.stage = stage;
      req.curve = parse_curve_csv(read_file(curve_path), stage);
      req.constraints = ranges_path.empty() ? global_constraints(stage)
                                            : constraints_from_json(stage, parse_json_file(ranges_path));
      req.fixed_phig = fixed_phig;
      const RunConfig cfg = config_or_default(config_path);
      const AnalyticSurrogate simulator;
      const ExtractionResult r = extract(req, inv.network, simulator, cfg.saturation, inv.content_hash);
      write_output(out_path, result_to_json(r).dump(2) + "\n", out);
    } else if (sim->parsed()) {
      const Stage stage = parse_stage(stage_s);
      if (stage == Stage::kCgg && phig_override) throw UsageError("--phig only applies to --stage id");
      const json params = params_path.empty() ? json::object() : parse_json_file(params_path);
      const AnalyticSurrogate simulator;
      CurveVector c;
      if (stage == Stage::kCgg) {
        c = simulator.simulate_cgg(cgg_params_from_json(params));
      } else {
        IdParams p = id_params_from_json(params);
        if (phig_override) p.phig = *phig_override;
        c = simulator.simulate_id(p);
      }
      write_output(out_path, curve_csv(c), out);
    } else if (study->parsed()) {
      const RunConfig cfg = load_run_config(config_path);
      const AnalyticSurrogate simulator;
      ReportMetadata meta;
      meta.study = study_kind;
      meta.config_hash = config_hash(cfg);
      meta.extra["config"] = run_config_to_json(cfg);
      std::map<std::string, std::string> files;
      if (study_kind == "convergence") {
        ConvergenceRequest req{cfg.convergence, cfg.seed, cfg.sampling(), false};
        const ConvergenceResult res =
            convergence_study(req, simulator, [&](const std::string& m) { err << m << std::endl; });
        meta.seeds = cfg.convergence.seeds;
        meta.seeds.insert(meta.seeds.begin(), cfg.seed);
        files["convergence.csv"] = convergence_csv(res.rows);
        files["summary.json"] = convergence_summary_json(res).dump(2) + "\n";
        json timings = json::array();
        for (const auto& r : res.rows)
          timings.push_back({{"stage", to_string(r.stage)},
                             {"scheme", to_string(r.scheme)},
                             {"n_train", r.n_train},
                             {"seed", r.seed},
                             {"wall_seconds", r.wall_seconds}});
        write_file(std::filesystem::path(out_path) / "timings.json", timings.dump(2) + "\n");
        out << convergence_summary_json(res).dump() << '\n';
      } else {
        const std::filesystem::path dir = std::filesystem::path(models_dir.empty() ? cfg.models_dir : models_dir);
        if (dir.empty()) throw UsageError("multirange study needs --models or models_dir in the config");
        const CascadeModels models = load_cascade(dir);
        meta.model_hashes = {{"cgg_inverse.json", models.cgg_hash}, {"id_inverse.json", models.id_hash}};
        TwoStageOptions opts;
        opts.thresholds = cfg.saturation;
        std::vector<StudyRow> all;
        json details = json::array();
        for (std::size_t d = 0; d < cfg.multirange.n_devices; ++d) {
          const std::uint64_t dseed = cfg.seed + d;
          meta.seeds.push_back(dseed);
          const DeviceTruth truth = random_device(dseed, cfg.multirange.truth_phig);
          const auto sets = make_constraint_sets(truth, cfg.multirange.n_random_sets, dseed, cfg.multirange.infeasible_phig);
          auto rows = multi_range_study(truth.cgg, truth.id, sets, models, simulator, opts, d);
          json dev = {{"device", d}, {"truth", {{"cgg", params_to_json(truth.cgg)}, {"id", params_to_json(truth.id)}}}};
          json results = json::array();
          for (const auto& r : rows) {
            json rj = result_to_json(r.result);
            rj["label"] = r.constraints.label;
            rj["feasible"] = r.constraints.feasible;
            results.push_back(rj);
          }
          dev["rows"] = results;
          details.push_back(dev);
          const IdParams fit = IdParams::from_array(rows.front().result.id.params, *rows.front().result.id.phig);
          for (const auto& c : derivative_report(truth.id, fit, simulator))
            files["derivatives/device" + std::to_string(d) + "_" + c.name + ".csv"] = derivative_csv(c);
          all.insert(all.end(), rows.begin(), rows.end());
        }
        files["multirange.csv"] = multirange_csv(all);
        files["results.json"] = details.dump(2) + "\n";
        out << multirange_csv(all);
      }
      emit_report(out_path, files, meta);
    } else if (serve->parsed()) {
      const std::filesystem::path dir = resolve_models_dir(models_dir);
      ServiceModels models = dir.empty() ? ServiceModels{} : load_service_models(dir);
      for (const auto& w : models.warnings) err << "warning: " << w << '\n';
      const RunConfig cfg = config_or_default(config_path);
      Service service(std::move(models), std::make_shared<AnalyticSurrogate>(), cfg.saturation);
      httplib::Server server;
      service.mount(server, static_dir);
      err << "listening on http://" << host << ':' << port << std::endl;
      if (!server.listen(host, port)) throw Error(ErrorKind::kUnavailable, "could not bind " + host + ":" + std::to_string(port));
    }
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what(), e.parameter());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace floatnorm::cli
