#include "floatnorm/curve_io.hpp"

#include <charconv>
#include <cmath>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"

namespace floatnorm {

using nlohmann::json;

namespace {

constexpr std::string_view kHeader = "bias_index,vg,vd,value,scaled";

struct BiasPoint {
  double vg;
  double vd;  // NaN for Cgg
};

std::vector<BiasPoint> bias_points(CurveKind kind) {
  const auto& g = BiasGrid::canonical();
  std::vector<BiasPoint> out;
  if (kind == CurveKind::kCgg) {
    for (double vg : g.cgg_vg) out.push_back({vg, std::nan("")});
  } else {
    for (double vd : g.id_vd)
      for (double vg : g.id_vg) out.push_back({vg, vd});
  }
  return out;
}

double number_at(std::string_view cell, std::size_t line, const char* what) {
  double v = 0.0;
  if (!parse_double(cell, v)) throw parse_error(std::string("bad ") + what + " '" + std::string(cell) + "'", line);
  return v;
}

double require_number(const json& v, const std::string& name) {
  if (!v.is_number()) throw invalid_input("value for " + name + " must be a number", name);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw invalid_input("value for " + name + " must be finite", name);
  return x;
}

template <std::size_t N>
std::array<double, N> fill(Stage stage, const json& doc, std::array<double, N> base, double* phig) {
  if (!doc.is_object()) throw invalid_input("params must be a JSON object of name -> value");
  for (const auto& [name, value] : doc.items()) {
    if (name == "PHIG" && phig) {
      *phig = require_number(value, name);
      continue;
    }
    const ParameterSpec* spec = nullptr;
    for (const auto& s : stage_parameters(stage))
      if (s.name == name) spec = &s;
    if (!spec)
      throw invalid_input("unknown " + std::string(to_string(stage)) + "-stage parameter '" + name + "'", name);
    base[spec->index] = require_number(value, name);
  }
  return base;
}

}  // namespace

std::string curve_csv(const CurveVector& curve) {
  const auto pts = bias_points(curve.kind);
  if (curve.values.size() != pts.size() || curve.scaled.size() != pts.size())
    throw invalid_input("curve does not match the canonical grid");
  std::string out(kHeader);
  out += '\n';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(pts[i].vg) + ',' +
           (std::isnan(pts[i].vd) ? std::string() : format_double(pts[i].vd)) + ',' + format_double(curve.values[i]) +
           ',' + format_double(curve.scaled[i]) + '\n';
  }
  return out;
}

std::vector<double> parse_curve_csv(std::string_view text, Stage stage) {
  const auto pts = bias_points(curve_kind(stage));
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header) {
      if (line != kHeader) throw parse_error("curve file must start with '" + std::string(kHeader) + "'", line_no);
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw parse_error("expected 5 columns", line_no);
    const std::size_t i = values.size();
    if (i >= pts.size())
      throw parse_error("too many rows for the " + std::string(to_string(stage)) + " grid", line_no);
    std::size_t idx = 0;
    const auto [p, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), idx);
    if (ec != std::errc{} || p != cells[0].data() + cells[0].size() || idx != i)
      throw parse_error("bias_index must count up from 0", line_no);
    const double vg = number_at(cells[1], line_no, "vg");
    if (std::abs(vg - pts[i].vg) > 1e-9) throw parse_error("vg is off the canonical grid", line_no);
    if (!std::isnan(pts[i].vd) && std::abs(number_at(cells[2], line_no, "vd") - pts[i].vd) > 1e-9)
      throw parse_error("vd is off the canonical grid", line_no);
    values.push_back(number_at(cells[3], line_no, "value"));
  }
  if (values.size() != pts.size())
    throw parse_error("curve has " + std::to_string(values.size()) + " points; the " + std::string(to_string(stage)) +
                          " grid has " + std::to_string(pts.size()),
                      line_no + 1);
  return values;
}

std::vector<RangeConstraint> constraints_from_json(Stage stage, const json& doc) {
  if (doc.is_null()) return global_constraints(stage);
  if (!doc.is_object()) throw invalid_input("constraints must be a JSON object of name -> [min, max]");
  std::map<std::string, RangeConstraint> by_name;
  for (const auto& [name, value] : doc.items()) {
    if (!value.is_array() || value.size() != 2)
      throw invalid_input("constraint for " + name + " must be [min, max]", name);
    by_name[name] = {require_number(value[0], name), require_number(value[1], name)};
  }
  return constraints_from_map(stage, by_name);
}

json constraints_to_json(Stage stage, const std::vector<RangeConstraint>& constraints) {
  const auto specs = stage_parameters(stage);
  if (constraints.size() != specs.size()) throw invalid_input("constraint vector has the wrong length");
  json out = json::object();
  for (std::size_t i = 0; i < specs.size(); ++i)
    out[std::string(specs[i].name)] = {constraints[i].local_min, constraints[i].local_max};
  return out;
}

CggParams cgg_params_from_json(const json& doc) {
  return CggParams::from_array(fill(Stage::kCgg, doc, CggParams{}.to_array(), nullptr));
}

IdParams id_params_from_json(const json& doc) {
  IdParams base;
  double phig = base.phig;
  const auto values = fill(Stage::kId, doc, base.to_array(), &phig);
  return IdParams::from_array(values, phig);
}

json params_to_json(const CggParams& p) {
  json out = json::object();
  const auto v = p.to_array();
  for (const auto& s : cgg_parameters()) out[std::string(s.name)] = v[s.index];
  return out;
}

json params_to_json(const IdParams& p) {
  json out = json::object();
  const auto v = p.to_array();
  for (const auto& s : id_parameters()) out[std::string(s.name)] = v[s.index];
  out["PHIG"] = p.phig;
  return out;
}

}  // namespace floatnorm
