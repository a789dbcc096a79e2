#include "floatnorm/service.hpp"

#include <cstdlib>
#include <functional>

#include <httplib.h>

#include "floatnorm/curve_io.hpp"
#include "floatnorm/error.hpp"

namespace floatnorm {

using nlohmann::json;

std::filesystem::path resolve_models_dir(const std::filesystem::path& cli_value) {
  if (const char* env = std::getenv("FLOATNORM_MODELS"); env && *env) return env;
  return cli_value;
}

ServiceModels load_service_models(const std::filesystem::path& dir) {
  ServiceModels m;
  auto load = [&](Stage stage, const char* file) -> std::optional<LoadedModel> {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) {
      m.warnings.push_back(path.string() + " not found; " + std::string(to_string(stage)) + " endpoints disabled");
      return std::nullopt;
    }
    LoadedModel lm = load_model(path);
    check_inverse_net(lm.network, stage);
    m.warnings.insert(m.warnings.end(), lm.warnings.begin(), lm.warnings.end());
    return lm;
  };
  m.cgg = load(Stage::kCgg, "cgg_inverse.json");
  m.id = load(Stage::kId, "id_inverse.json");
  return m;
}

Service::Service(ServiceModels models, std::shared_ptr<const Simulator> simulator, SaturationThresholds thresholds)
    : models_(std::move(models)), simulator_(std::move(simulator)), thresholds_(thresholds) {
  if (!simulator_) throw invalid_input("service needs a simulator");
}

json Service::model_hashes() const {
  return {{"cgg", models_.cgg ? json(models_.cgg->content_hash) : json(nullptr)},
          {"id", models_.id ? json(models_.id->content_hash) : json(nullptr)}};
}

const LoadedModel& Service::require(Stage stage) const {
  const auto& m = stage == Stage::kCgg ? models_.cgg : models_.id;
  if (!m) throw Error(ErrorKind::kUnavailable, "no " + std::string(to_string(stage)) + " model loaded");
  return *m;
}

ApiResponse Service::run(const std::function<json()>& fn) const {
  ApiResponse r;
  try {
    r.body = fn();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::kNotFound: r.status = 404; break;
      case ErrorKind::kUnavailable: r.status = 503; break;
      case ErrorKind::kTraining: r.status = 500; break;
      default: r.status = 400; break;
    }
    r.body = {{"error", e.what()}};
    if (e.parameter()) r.body["parameter"] = *e.parameter();
  } catch (const json::exception& e) {
    r.status = 400;
    r.body = {{"error", std::string("malformed request: ") + e.what()}};
  } catch (const std::exception& e) {
    r.status = 500;
    r.body = {{"error", e.what()}};
  }
  r.body["model_hashes"] = model_hashes();
  return r;
}

namespace {

json parse_body(std::string_view body) {
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) throw invalid_input("request body must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw invalid_input(std::string("request body is not valid JSON: ") + e.what());
  }
}

void check_fields(const json& doc, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : doc.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw invalid_input("unknown request field '" + key + "'", key);
  }
}

Stage stage_of(const json& doc) {
  if (!doc.contains("stage") || !doc.at("stage").is_string()) throw invalid_input("missing stage", "stage");
  return parse_stage(doc.at("stage").get<std::string>());
}

std::vector<double> curve_of(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) throw invalid_input(std::string(key) + " must be an array", key);
  std::vector<double> out;
  for (const auto& v : doc.at(key)) {
    if (!v.is_number()) throw invalid_input(std::string(key) + " must contain only numbers", key);
    out.push_back(v.get<double>());
  }
  return out;
}

json constraints_of(const json& doc, const char* key) { return doc.contains(key) ? doc.at(key) : json(nullptr); }

json curve_json(const CurveVector& c) {
  const auto& g = BiasGrid::canonical();
  json out;
  if (c.kind == CurveKind::kCgg) {
    out["vg"] = std::vector<double>(g.cgg_vg.begin(), g.cgg_vg.end());
  } else {
    std::vector<double> vg;
    std::vector<double> vd;
    std::vector<double> log10;
    for (double d : g.id_vd)
      for (double v : g.id_vg) {
        vg.push_back(v);
        vd.push_back(d);
      }
    for (double v : c.values) log10.push_back(std::log10(v));
    out["vg"] = vg;
    out["vd"] = vd;
    out["log10"] = log10;
  }
  out["values"] = c.values;
  out["scaled"] = c.scaled;
  return out;
}

}  // namespace

ApiResponse Service::health() const {
  return run([&] {
    json versions = json::object();
    for (auto [name, m] : {std::pair{"cgg", &models_.cgg}, std::pair{"id", &models_.id}}) {
      if (*m)
        versions[name] = {{"content_hash", (*m)->content_hash},
                          {"schema_version", (*m)->network.metadata.schema_version},
                          {"scheme", (*m)->network.metadata.scheme}};
      else
        versions[name] = nullptr;
    }
    const bool all = models_.cgg && models_.id;
    return json{{"status", all ? "ok" : "degraded"}, {"model_versions", versions}, {"warnings", models_.warnings}};
  });
}

ApiResponse Service::parameters() const {
  return run([] {
    json list = json::array();
    for (Stage stage : {Stage::kCgg, Stage::kId})
      for (const auto& s : stage_parameters(stage))
        list.push_back({{"name", s.name},
                        {"global_min", s.global_min},
                        {"global_max", s.global_max},
                        {"stage", to_string(s.stage)},
                        {"index", s.index},
                        {"units", s.units}});
    return json{{"parameters", list},
                {"canonical_order", {{"cgg", parameter_names(Stage::kCgg)}, {"id", parameter_names(Stage::kId)}}}};
  });
}

ApiResponse Service::extract(std::string_view body) const {
  return run([&] {
    const json doc = parse_body(body);
    check_fields(doc, {"stage", "curve", "constraints", "fixed_phig"});
    ExtractionRequest req;
    req.stage = stage_of(doc);
    req.curve = curve_of(doc, "curve");
    req.constraints = constraints_from_json(req.stage, constraints_of(doc, "constraints"));
    if (doc.contains("fixed_phig") && !doc.at("fixed_phig").is_null()) {
      if (!doc.at("fixed_phig").is_number()) throw invalid_input("fixed_phig must be a number", "PHIG");
      req.fixed_phig = doc.at("fixed_phig").get<double>();
    }
    const LoadedModel& m = require(req.stage);
    return result_to_json(floatnorm::extract(req, m.network, *simulator_, thresholds_, m.content_hash));
  });
}

ApiResponse Service::simulate(std::string_view body) const {
  return run([&] {
    const json doc = parse_body(body);
    check_fields(doc, {"stage", "params", "phig"});
    const Stage stage = stage_of(doc);
    const json params = doc.contains("params") ? doc.at("params") : json::object();
    json out;
    out["stage"] = to_string(stage);
    if (stage == Stage::kCgg) {
      const CggParams p = cgg_params_from_json(params);
      out["params"] = params_to_json(p);
      out["curve"] = curve_json(simulator_->simulate_cgg(p));
    } else {
      IdParams p = id_params_from_json(params);
      if (doc.contains("phig")) {
        if (!doc.at("phig").is_number()) throw invalid_input("phig must be a number", "PHIG");
        p.phig = doc.at("phig").get<double>();
      }
      out["params"] = params_to_json(p);
      out["curve"] = curve_json(simulator_->simulate_id(p));
    }
    return out;
  });
}

ApiResponse Service::two_stage_extract(std::string_view body) const {
  return run([&] {
    const json doc = parse_body(body);
    check_fields(doc, {"cgg_curve", "id_curve", "cgg_constraints", "id_constraints"});
    const auto cgg_curve = curve_of(doc, "cgg_curve");
    const auto id_curve = curve_of(doc, "id_curve");
    const auto cgg_c = constraints_from_json(Stage::kCgg, constraints_of(doc, "cgg_constraints"));
    const auto id_c = constraints_from_json(Stage::kId, constraints_of(doc, "id_constraints"));
    const LoadedModel& cgg = require(Stage::kCgg);
    const LoadedModel& id = require(Stage::kId);
    CascadeModels nets{cgg.network, id.network, cgg.content_hash, id.content_hash};
    TwoStageOptions opts;
    opts.thresholds = thresholds_;
    return result_to_json(floatnorm::two_stage_extract(cgg_curve, id_curve, cgg_c, id_c, nets, *simulator_, opts));
  });
}

void Service::mount(httplib::Server& server, const std::filesystem::path& static_dir) const {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Get("/api/parameters",
             [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, parameters()); });
  server.Post("/api/extract", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, extract(req.body));
  });
  server.Post("/api/simulate", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, simulate(req.body));
  });
  server.Post("/api/two-stage-extract", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, two_stage_extract(req.body));
  });
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir.string()))
    throw invalid_input("static directory " + static_dir.string() + " does not exist");
}

}  // namespace floatnorm
