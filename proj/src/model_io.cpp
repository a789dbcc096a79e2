#include "floatnorm/model_io.hpp"

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"
#include "floatnorm/parameters.hpp"

namespace floatnorm {

using nlohmann::json;

json model_to_json(const MlpNetwork& net) {
  const auto& m = net.metadata;
  json doc;
  doc["schema_version"] = m.schema_version;
  doc["stage"] = m.stage;
  doc["scheme"] = m.scheme;
  doc["dims"] = net.dims();
  json acts = json::array();
  for (const auto& l : net.layers) acts.push_back(std::string(to_string(l.activation)));
  doc["activations"] = acts;
  doc["parameter_order"] = m.parameter_order;
  doc["scaling_constants"] = m.scaling_constants;
  json weights = json::array();
  json biases = json::array();
  for (const auto& l : net.layers) {
    weights.push_back(std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size()));
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc;
}

MlpNetwork model_from_json(const json& doc) {
  static const char* kFields[] = {"schema_version", "stage",           "scheme",  "dims",  "activations",
                                  "parameter_order", "scaling_constants", "weights", "biases"};
  try {
    if (!doc.is_object()) throw parse_error("model document must be a JSON object");
    for (const char* f : kFields)
      if (!doc.contains(f)) throw parse_error(std::string("model is missing field '") + f + "'");
    for (const auto& [key, _] : doc.items()) {
      bool known = false;
      for (const char* f : kFields) known = known || key == f;
      if (!known) throw parse_error("model has unknown field '" + key + "'");
    }
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw Error(ErrorKind::kVersion, "model schema_version " + std::to_string(version) + " is not supported (expected " +
                                           std::to_string(kModelSchemaVersion) + ")");
    MlpNetwork net;
    net.metadata.schema_version = version;
    net.metadata.stage = doc.at("stage").get<std::string>();
    net.metadata.scheme = doc.at("scheme").get<std::string>();
    net.metadata.parameter_order = doc.at("parameter_order").get<std::vector<std::string>>();
    net.metadata.scaling_constants = doc.at("scaling_constants").get<std::map<std::string, double>>();

    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    const auto acts = doc.at("activations").get<std::vector<std::string>>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (dims.size() < 2) throw parse_error("model dims must list at least two sizes");
    const std::size_t n_layers = dims.size() - 1;
    if (acts.size() != n_layers || weights.size() != n_layers || biases.size() != n_layers)
      throw parse_error("model dims describe " + std::to_string(n_layers) +
                        " layers but activations/weights/biases disagree");
    for (std::size_t k = 0; k < n_layers; ++k) {
      const auto w = weights.at(k).get<std::vector<double>>();
      const auto b = biases.at(k).get<std::vector<double>>();
      if (dims[k] == 0 || dims[k + 1] == 0) throw parse_error("layer " + std::to_string(k) + ": zero dimension");
      if (w.size() != dims[k] * dims[k + 1])
        throw parse_error("layer " + std::to_string(k) + ": expected " + std::to_string(dims[k] * dims[k + 1]) +
                          " weights for " + std::to_string(dims[k]) + "x" + std::to_string(dims[k + 1]) + ", found " +
                          std::to_string(w.size()));
      if (b.size() != dims[k + 1])
        throw parse_error("layer " + std::to_string(k) + ": expected " + std::to_string(dims[k + 1]) + " biases, found " +
                          std::to_string(b.size()));
      DenseLayer layer;
      layer.activation = parse_activation(acts[k]);
      layer.weights = Eigen::Map<const Eigen::MatrixXd>(w.data(), static_cast<Eigen::Index>(dims[k + 1]),
                                                        static_cast<Eigen::Index>(dims[k]));
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      net.layers.push_back(std::move(layer));
    }
    return net;
  } catch (const json::exception& e) {
    throw parse_error(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const MlpNetwork& net, const std::filesystem::path& path) {
  write_file(path, model_to_json(net).dump() + "\n");
}

LoadedModel load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw parse_error("corrupt model file " + path.string() + ": " + e.what());
  }
  LoadedModel out;
  out.network = model_from_json(doc);
  out.content_hash = content_hash(text);
  const auto& m = out.network.metadata;
  if (m.stage == "cgg" || m.stage == "id") {
    const auto expected = parameter_names(parse_stage(m.stage));
    if (m.parameter_order != expected)
      out.warnings.push_back("parameter_order in " + path.string() + " does not match the current " + m.stage +
                             " registry ordering");
  }
  return out;
}

}  // namespace floatnorm
