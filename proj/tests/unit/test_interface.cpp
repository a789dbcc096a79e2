#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "floatnorm/curve_io.hpp"
#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"
#include "floatnorm/model_io.hpp"
#include "floatnorm/service.hpp"
#include "cli.hpp"

// httplib pulls in <resolv.h>, whose macros collide with Eigen; keep it last.
#include <httplib.h>

using namespace floatnorm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

MlpNetwork small_inverse(Stage stage, std::uint64_t seed) {
  MlpNetwork n = init_network(std::vector<std::size_t>{inverse_input_size(stage), 8, parameter_count(stage)},
                              Activation::kRelu, Activation::kSigmoid, seed);
  n.metadata = cascade_metadata(stage, Scheme::kCustom);
  return n;
}

fs::path models_dir(bool with_id = true) {
  const auto d = temp_dir(with_id ? "floatnorm_models_full" : "floatnorm_models_cgg");
  save_model(small_inverse(Stage::kCgg, 1), d / "cgg_inverse.json");
  if (with_id) save_model(small_inverse(Stage::kId, 2), d / "id_inverse.json");
  return d;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "floatnorm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = floatnorm::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Service make_service(const fs::path& dir) {
  return Service(load_service_models(dir), std::make_shared<AnalyticSurrogate>());
}

std::vector<double> default_cgg_curve() { return AnalyticSurrogate().simulate_cgg(CggParams{}).values; }

}  // namespace

TEST(CurveIo, CsvRoundTripAndGridCheck) {
  const auto c = AnalyticSurrogate().simulate_id(IdParams{});
  const std::string csv = curve_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bias_index,vg,vd,value,scaled");
  EXPECT_EQ(parse_curve_csv(csv, Stage::kId), c.values);
  EXPECT_THROW(parse_curve_csv(csv, Stage::kCgg), Error);
  const auto g = AnalyticSurrogate().simulate_cgg(CggParams{});
  EXPECT_EQ(parse_curve_csv(curve_csv(g), Stage::kCgg), g.values);
}

TEST(CurveIo, ParamsAndConstraintsJson) {
  CggParams p;
  p.phig = 4.6;
  EXPECT_EQ(cgg_params_from_json(params_to_json(p)).to_array(), p.to_array());
  EXPECT_THROW(cgg_params_from_json({{"U0", 0.02}}), Error);
  const IdParams q = id_params_from_json({{"PHIG", 4.3}, {"U0", 0.02}});
  EXPECT_EQ(q.phig, 4.3);
  EXPECT_EQ(q.u0, 0.02);
  EXPECT_EQ(id_params_from_json(params_to_json(q)).to_array(), q.to_array());
  const auto c = constraints_from_json(Stage::kCgg, {{"PHIG", {4.7, 4.7}}});
  EXPECT_EQ(c[0], (RangeConstraint{4.7, 4.7}));
  EXPECT_EQ(constraints_from_json(Stage::kCgg, json(nullptr)), global_constraints(Stage::kCgg));
  EXPECT_EQ(constraints_from_json(Stage::kCgg, constraints_to_json(Stage::kCgg, c)), c);
  EXPECT_THROW(constraints_from_json(Stage::kCgg, {{"PHIG", {4.7}}}), Error);
}

TEST(ServiceHandlers, HealthAndParameters) {
  const Service s = make_service(models_dir());
  const auto h = s.health();
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.body["status"], "ok");
  EXPECT_TRUE(h.body["model_hashes"]["cgg"].is_string());
  const auto p = s.parameters();
  ASSERT_EQ(p.body["parameters"].size(), 17u);
  std::size_t cgg = 0;
  for (const auto& e : p.body["parameters"]) cgg += e["stage"] == "cgg";
  EXPECT_EQ(cgg, 6u);
  EXPECT_EQ(p.body["parameters"][0]["name"], "PHIG");
  EXPECT_TRUE(p.body.contains("model_hashes"));
}

TEST(ServiceHandlers, ExtractDefaultsAndErrors) {
  const Service s = make_service(models_dir());
  json req = {{"stage", "cgg"}, {"curve", default_cgg_curve()}};
  const auto ok = s.extract(req.dump());
  ASSERT_EQ(ok.status, 200) << ok.body.dump();
  EXPECT_EQ(ok.body["constraints"]["PHIG"], json({4.2, 4.8}));
  EXPECT_EQ(ok.body["model_hash"], ok.body["model_hashes"]["cgg"]);

  req["constraints"] = {{"PHIG", {4.7, 4.7}}};
  EXPECT_EQ(s.extract(req.dump()).body["params"]["PHIG"], 4.7);

  req["constraints"] = {{"PHIG", {4.9, 5.0}}};
  const auto bad = s.extract(req.dump());
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["parameter"], "PHIG");

  EXPECT_EQ(s.extract(R"({"stage":"cgg","curve":[1,2]})").status, 400);
  EXPECT_EQ(s.extract("{not json").status, 400);
  EXPECT_EQ(s.extract(R"({"stage":"cgg","curve":[],"extra":1})").status, 400);
  const auto unknown = s.extract(R"({"stage":"tox","curve":[]})");
  EXPECT_EQ(unknown.status, 404);
  EXPECT_TRUE(unknown.body.contains("model_hashes"));
}

TEST(ServiceHandlers, MissingModelIs503) {
  const Service s = make_service(models_dir(false));
  EXPECT_EQ(s.health().body["status"], "degraded");
  json req = {{"stage", "id"}, {"curve", AnalyticSurrogate().simulate_id(IdParams{}).values}, {"fixed_phig", 4.5}};
  EXPECT_EQ(s.extract(req.dump()).status, 503);
  EXPECT_TRUE(s.extract(req.dump()).body["model_hashes"]["id"].is_null());
}

TEST(ServiceHandlers, SimulateAndTwoStage) {
  const Service s = make_service(models_dir());
  const auto sim = s.simulate(R"({"stage":"id","params":{"U0":0.03},"phig":4.4})");
  ASSERT_EQ(sim.status, 200) << sim.body.dump();
  EXPECT_EQ(sim.body["curve"]["values"].size(), 16u);
  EXPECT_EQ(sim.body["curve"]["log10"].size(), 16u);
  EXPECT_EQ(sim.body["params"]["PHIG"], 4.4);
  IdParams p;
  p.u0 = 0.03;
  p.phig = 4.4;
  EXPECT_EQ(sim.body["curve"]["values"].get<std::vector<double>>(), AnalyticSurrogate().simulate_id(p).values);

  json req = {{"cgg_curve", default_cgg_curve()},
              {"id_curve", sim.body["curve"]["values"]},
              {"cgg_constraints", {{"PHIG", {4.7, 4.7}}}}};
  const auto two = s.two_stage_extract(req.dump());
  ASSERT_EQ(two.status, 200) << two.body.dump();
  EXPECT_EQ(two.body["cgg"]["params"]["PHIG"], 4.7);
  EXPECT_EQ(two.body["id"]["fixed_phig"], 4.7);
  EXPECT_EQ(two.body["cgg"]["provenance_id"], two.body["provenance_id"]);
}

TEST(ServiceHttp, EndpointsOverSockets) {
  const Service s = make_service(models_dir());
  const auto web = temp_dir("floatnorm_static");
  write_file(web / "index.html", "<html>ok</html>");
  httplib::Server server;
  s.mount(server, web);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);
  const auto health = c.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");
  const auto page = c.Get("/");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->body, "<html>ok</html>");
  const json req = {{"stage", "cgg"}, {"curve", default_cgg_curve()}, {"constraints", {{"EOT", {0.0, 1.0}}}}};
  const auto bad = c.Post("/api/extract", req.dump(), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["parameter"], "EOT");
  const auto missing = c.Post("/api/extract", R"({"stage":"nope","curve":[]})", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  t.join();
}

TEST(ServiceModelsDir, EnvironmentOverrides) {
  ::setenv("FLOATNORM_MODELS", "/from/env", 1);
  EXPECT_EQ(resolve_models_dir("/from/cli"), fs::path("/from/env"));
  ::unsetenv("FLOATNORM_MODELS");
  EXPECT_EQ(resolve_models_dir("/from/cli"), fs::path("/from/cli"));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"gen-data", "--stage", "tox", "--scheme", "fixed", "--n", "3", "--seed", "1", "--out", "x"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, GenDataIsDeterministic) {
  const auto d = temp_dir("floatnorm_cli_gen");
  for (const char* name : {"a.csv", "b.csv"}) {
    const auto r = invoke({"gen-data", "--stage", "cgg", "--scheme", "fixed", "--n", "10", "--seed", "7", "--out",
                        (d / name).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(read_file(d / "a.csv"), read_file(d / "b.csv"));
  EXPECT_EQ(read_file(d / "a.csv.json"), read_file(d / "b.csv.json"));
  const auto aug = invoke({"augment", "--in", (d / "a.csv").string(), "--k", "3", "--seed", "2", "--out",
                        (d / "c.csv").string()});
  ASSERT_EQ(aug.code, 0) << aug.err;
  EXPECT_EQ(read_dataset(d / "c.csv").size(), 30u);
}

TEST(Cli, DomainErrorsExitOneWithJson) {
  const auto r = invoke({"augment", "--in", "/nonexistent/x.csv", "--k", "2", "--seed", "1", "--out", "/tmp/y.csv"});
  EXPECT_EQ(r.code, 1);
  const auto e = json::parse(r.err);
  EXPECT_TRUE(e.contains("error"));
  EXPECT_TRUE(e.contains("kind"));
}

TEST(Cli, TrainSimulateExtractPipeline) {
  const auto d = temp_dir("floatnorm_cli_pipeline");
  write_file(d / "run.json",
             R"({"schema_version": 1,
                 "forward_train": {"max_epochs": 2, "hidden_layers": 1, "hidden_width": 8, "batch_size": 16},
                 "inverse_train": {"max_epochs": 2, "hidden_layers": 1, "hidden_width": 8, "batch_size": 16}})");
  ASSERT_EQ(invoke({"gen-data", "--stage", "cgg", "--scheme", "custom", "--n", "60", "--seed", "3", "--out",
                 (d / "train.csv").string()})
                .code,
            0);
  auto r = invoke({"train-forward", "--stage", "cgg", "--data", (d / "train.csv").string(), "--config",
                (d / "run.json").string(), "--out", (d / "fwd.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = invoke({"train-forward", "--stage", "id", "--data", (d / "train.csv").string(), "--out",
           (d / "x.json").string()});
  EXPECT_EQ(r.code, 2);
  r = invoke({"train-inverse", "--stage", "cgg", "--forward", (d / "fwd.json").string(), "--data",
           (d / "train.csv").string(), "--config", (d / "run.json").string(), "--out", (d / "inv.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;

  write_file(d / "params.json", R"({"PHIG": 4.4})");
  r = invoke({"simulate", "--stage", "cgg", "--params", (d / "params.json").string(), "--out",
           (d / "curve.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  write_file(d / "ranges.json", R"({"PHIG": [4.7, 4.7]})");
  r = invoke({"extract", "--stage", "cgg", "--inverse", (d / "inv.json").string(), "--curve", (d / "curve.csv").string(),
           "--ranges", (d / "ranges.json").string(), "--out", (d / "result.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto result = json::parse(read_file(d / "result.json"));
  EXPECT_EQ(result["params"]["PHIG"], 4.7);
  EXPECT_EQ(result["saturation"]["PHIG"], "none");

  r = invoke({"extract", "--stage", "cgg", "--inverse", (d / "inv.json").string(), "--curve", (d / "curve.csv").string(),
           "--fixed-phig", "4.5"});
  EXPECT_EQ(r.code, 2);
  r = invoke({"extract", "--stage", "id", "--inverse", (d / "inv.json").string(), "--curve", (d / "curve.csv").string(),
           "--fixed-phig", "4.5"});
  EXPECT_NE(r.code, 0);
}
