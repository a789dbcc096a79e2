#include "floatnorm/config.hpp"

#include <initializer_list>
#include <string>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"

namespace floatnorm {

using nlohmann::json;

namespace {

void check_keys(const json& doc, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!doc.is_object()) throw invalid_input(std::string(where) + " must be a JSON object", std::string(where));
  for (const auto& [key, _] : doc.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw invalid_input("unknown key '" + key + "' in " + std::string(where), key);
  }
}

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

json train_config_to_json(const NetTrainConfig& cfg) {
  const auto& t = cfg.train;
  return {{"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"initial_lr", t.initial_lr},
          {"plateau_factor", t.plateau_factor},
          {"plateau_patience", t.plateau_patience},
          {"plateau_min_delta", t.plateau_min_delta},
          {"min_lr", t.min_lr},
          {"early_stop_patience", t.early_stop_patience},
          {"seed", t.seed},
          {"validation_fraction", t.validation_fraction},
          {"hidden_layers", cfg.shape.hidden_layers},
          {"hidden_width", cfg.shape.hidden_width}};
}

NetTrainConfig train_config_from_json(const json& doc) {
  check_keys(doc, "train block",
             {"batch_size", "max_epochs", "initial_lr", "plateau_factor", "plateau_patience", "plateau_min_delta",
              "min_lr", "early_stop_patience", "seed", "validation_fraction", "hidden_layers", "hidden_width"});
  NetTrainConfig c;
  auto& t = c.train;
  read_opt(doc, "batch_size", t.batch_size);
  read_opt(doc, "max_epochs", t.max_epochs);
  read_opt(doc, "initial_lr", t.initial_lr);
  read_opt(doc, "plateau_factor", t.plateau_factor);
  read_opt(doc, "plateau_patience", t.plateau_patience);
  read_opt(doc, "plateau_min_delta", t.plateau_min_delta);
  read_opt(doc, "min_lr", t.min_lr);
  read_opt(doc, "early_stop_patience", t.early_stop_patience);
  read_opt(doc, "seed", t.seed);
  read_opt(doc, "validation_fraction", t.validation_fraction);
  read_opt(doc, "hidden_layers", c.shape.hidden_layers);
  read_opt(doc, "hidden_width", c.shape.hidden_width);
  t.validate();
  if (c.shape.hidden_layers < 1 || c.shape.hidden_width < 1) throw invalid_input("hidden layers/width must be >= 1");
  return c;
}

RunConfig run_config_from_json(const json& doc) {
  try {
    check_keys(doc, "run config",
               {"schema_version", "seed", "p_fixed", "p_global", "log_uniform", "saturation", "datasets", "forward_train",
                "inverse_train", "convergence", "multirange", "models_dir"});
    RunConfig c;
    if (!doc.contains("schema_version")) throw invalid_input("run config is missing schema_version", "schema_version");
    c.schema_version = doc.at("schema_version").get<int>();
    if (c.schema_version != kRunConfigVersion)
      throw Error(ErrorKind::kVersion, "run config schema_version " + std::to_string(c.schema_version) +
                                           " is not supported (expected " + std::to_string(kRunConfigVersion) + ")");
    read_opt(doc, "seed", c.seed);
    read_opt(doc, "p_fixed", c.p_fixed);
    read_opt(doc, "p_global", c.p_global);
    read_opt(doc, "log_uniform", c.log_uniform);
    read_opt(doc, "models_dir", c.models_dir);
    if (!(c.p_fixed >= 0.0 && c.p_fixed <= 1.0)) throw invalid_input("p_fixed must lie in [0, 1]", "p_fixed");
    if (!(c.p_global >= 0.0 && c.p_global <= 1.0)) throw invalid_input("p_global must lie in [0, 1]", "p_global");

    if (doc.contains("saturation")) {
      const auto& s = doc.at("saturation");
      check_keys(s, "saturation", {"low", "high"});
      read_opt(s, "low", c.saturation.low);
      read_opt(s, "high", c.saturation.high);
      if (!(c.saturation.low > 0.0 && c.saturation.low < c.saturation.high && c.saturation.high < 1.0))
        throw invalid_input("saturation thresholds must satisfy 0 < low < high < 1", "saturation");
    }
    if (doc.contains("datasets")) {
      const auto& d = doc.at("datasets");
      check_keys(d, "datasets", {"cgg", "id", "augment_k"});
      read_opt(d, "cgg", c.datasets.cgg);
      read_opt(d, "id", c.datasets.id);
      read_opt(d, "augment_k", c.datasets.augment_k);
      if (c.datasets.cgg < 2 || c.datasets.id < 2) throw invalid_input("dataset sizes must be at least 2", "datasets");
      if (c.datasets.augment_k < 1) throw invalid_input("augment_k must be at least 1", "augment_k");
    }
    if (doc.contains("forward_train")) c.forward = train_config_from_json(doc.at("forward_train"));
    if (doc.contains("inverse_train")) c.inverse = train_config_from_json(doc.at("inverse_train"));

    if (doc.contains("convergence")) {
      const auto& v = doc.at("convergence");
      check_keys(v, "convergence",
                 {"stages", "sample_counts", "seeds", "validation_size", "target_mse", "steps_per_cell", "train"});
      auto& cv = c.convergence;
      if (v.contains("stages")) {
        cv.stages.clear();
        for (const auto& s : v.at("stages")) cv.stages.push_back(parse_stage(s.get<std::string>()));
      }
      read_opt(v, "sample_counts", cv.sample_counts);
      read_opt(v, "seeds", cv.seeds);
      read_opt(v, "validation_size", cv.validation_size);
      read_opt(v, "steps_per_cell", cv.steps_per_cell);
      if (v.contains("target_mse")) {
        const auto& t = v.at("target_mse");
        if (t.is_string() && t.get<std::string>() == "auto")
          cv.target_mse.reset();
        else if (t.is_number() && t.get<double>() > 0.0)
          cv.target_mse = t.get<double>();
        else
          throw invalid_input("target_mse must be a positive number or \"auto\"", "target_mse");
      }
      if (v.contains("train")) cv.net = train_config_from_json(v.at("train"));
    }
    if (doc.contains("multirange")) {
      const auto& m = doc.at("multirange");
      check_keys(m, "multirange", {"n_devices", "n_random_sets", "truth_phig", "infeasible_phig"});
      auto& mr = c.multirange;
      read_opt(m, "n_devices", mr.n_devices);
      read_opt(m, "n_random_sets", mr.n_random_sets);
      read_opt(m, "truth_phig", mr.truth_phig);
      if (m.contains("infeasible_phig")) {
        const auto r = m.at("infeasible_phig").get<std::vector<double>>();
        if (r.size() != 2) throw invalid_input("infeasible_phig must be [min, max]", "infeasible_phig");
        mr.infeasible_phig = {r[0], r[1]};
      }
      validate_constraint(phig_spec(), mr.infeasible_phig);
      if (!phig_spec().contains(mr.truth_phig)) throw invalid_input("truth_phig outside the PHIG range", "truth_phig");
      if (mr.n_devices < 1) throw invalid_input("n_devices must be at least 1", "n_devices");
    }
    return c;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("malformed run config: ") + e.what());
  }
}

json run_config_to_json(const RunConfig& c) {
  json stages = json::array();
  for (Stage s : c.convergence.stages) stages.push_back(std::string(to_string(s)));
  json conv = {{"stages", stages},
               {"sample_counts", c.convergence.sample_counts},
               {"seeds", c.convergence.seeds},
               {"validation_size", c.convergence.validation_size},
               {"steps_per_cell", c.convergence.steps_per_cell},
               {"train", train_config_to_json(c.convergence.net)}};
  conv["target_mse"] = c.convergence.target_mse ? json(*c.convergence.target_mse) : json("auto");
  return {{"schema_version", c.schema_version},
          {"seed", c.seed},
          {"p_fixed", c.p_fixed},
          {"p_global", c.p_global},
          {"log_uniform", c.log_uniform},
          {"saturation", {{"low", c.saturation.low}, {"high", c.saturation.high}}},
          {"datasets", {{"cgg", c.datasets.cgg}, {"id", c.datasets.id}, {"augment_k", c.datasets.augment_k}}},
          {"forward_train", train_config_to_json(c.forward)},
          {"inverse_train", train_config_to_json(c.inverse)},
          {"convergence", conv},
          {"multirange",
           {{"n_devices", c.multirange.n_devices},
            {"n_random_sets", c.multirange.n_random_sets},
            {"truth_phig", c.multirange.truth_phig},
            {"infeasible_phig", {c.multirange.infeasible_phig.local_min, c.multirange.infeasible_phig.local_max}}}},
          {"models_dir", c.models_dir}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw parse_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

std::string config_hash(const RunConfig& cfg) { return content_hash(run_config_to_json(cfg).dump()); }

SamplingOptions RunConfig::sampling() const {
  SamplingOptions o;
  o.p_fixed = p_fixed;
  o.p_global = p_global;
  o.log_uniform = log_uniform;
  return o;
}

CascadeTrainOptions RunConfig::forward_options(std::uint64_t seed_offset) const {
  CascadeTrainOptions o{forward.train, forward.shape, seed + seed_offset};
  o.train.seed = forward.train.seed + seed + seed_offset;
  return o;
}

CascadeTrainOptions RunConfig::inverse_options(std::uint64_t seed_offset) const {
  CascadeTrainOptions o{inverse.train, inverse.shape, seed + seed_offset + 1};
  o.train.seed = inverse.train.seed + seed + seed_offset + 1;
  return o;
}

}  // namespace floatnorm
