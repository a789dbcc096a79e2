#include "floatnorm/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "floatnorm/error.hpp"

namespace floatnorm {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw invalid_input(std::string("non-finite parameter ") + name, name);
}

void require_finite(const CggParams& p) {
  require_finite(p.phig, "PHIG");
  require_finite(p.cfs, "CFS");
  require_finite(p.eot, "EOT");
  require_finite(p.qmfactor, "QMFACTOR");
  require_finite(p.qmtcecv, "QMTCECV");
  require_finite(p.cgsl, "CGSL");
}

void require_valid(const IdParams& p) {
  require_finite(p.cit, "CIT");
  require_finite(p.u0, "U0");
  require_finite(p.ua, "UA");
  require_finite(p.eu, "EU");
  require_finite(p.eta0, "ETA0");
  require_finite(p.cdscd, "CDSCD");
  require_finite(p.vsat, "VSAT");
  require_finite(p.ksativ, "KSATIV");
  require_finite(p.rdsw, "RDSW");
  require_finite(p.pclm, "PCLM");
  require_finite(p.mexp, "MEXP");
  require_finite(p.phig, "PHIG");
  if (p.mexp <= 0.0) throw invalid_input("MEXP must be positive", "MEXP");
}

BiasGrid make_canonical() {
  BiasGrid g{};
  for (std::size_t k = 0; k < kCggPoints; ++k) g.cgg_vg[k] = (static_cast<double>(k) - 7.0) / 10.0;
  for (std::size_t k = 0; k < kIdVgPoints; ++k) g.id_vg[k] = static_cast<double>(k) / 10.0;
  g.id_vd = {0.05, 0.7};
  return g;
}

double unchecked_gate_capacitance(const CggParams& p, double vg) {
  using namespace device;
  const double vth = p.phig - kPhiRef;
  const double eot_q = p.eot + p.qmfactor * kTqm0 * sigmoid(p.qmtcecv * (vg - vth) / kVt);
  if (!(eot_q > 0.0)) throw Error(ErrorKind::kDomain, "quantum-corrected EOT is not positive");
  return kWidth * p.cfs + kWidth * p.cgsl * sigmoid(kOverlapSlope * (vth - vg)) +
         kArea * (kEpsHk / eot_q) * sigmoid((vg - vth) / (kNc * kVt));
}

double unchecked_drain_current(const IdParams& p, double vg, double vd) {
  using namespace device;
  if (!(vd >= 0.0)) throw invalid_input("drain voltage must be non-negative");
  const double vth = p.phig - kPhiRef + kVoff - kDibl * p.eta0 * vd;
  const double n = 1.0 + (p.cit + p.cdscd * vd) / kCden;
  const double q = n * kVt * softplus((vg - vth) / (n * kVt));
  const double mu_eff = p.u0 / (1.0 + std::pow(p.ua * softplus(vg - vth + 0.3), p.eu));
  const double esat_l = 2.0 * p.vsat * kLength / mu_eff;
  const double vdsat = p.ksativ * (q * esat_l) / (q + esat_l) + 1e-3;
  // (1 + (vd/vdsat)^m)^(1/m) evaluated as exp(softplus(m*ln(vd/vdsat))/m).
  double vdseff = 0.0;
  if (vd > 0.0) vdseff = vd * std::exp(-softplus(p.mexp * std::log(vd / vdsat)) / p.mexp);
  const double id0 = (kWidth / kLength) * mu_eff * kCoxI * q * vdseff * (1.0 + p.pclm * (vd - vdseff));
  const double rds = p.rdsw * 1e-6 / kWidth;
  const double id = id0 / (1.0 + rds * id0 / std::max(vd, 0.05));
  return std::max(id, kIfloor);
}

}  // namespace

const BiasGrid& BiasGrid::canonical() {
  static const BiasGrid grid = make_canonical();
  return grid;
}

void BiasGrid::validate() const {
  for (std::size_t k = 1; k < kCggPoints; ++k) {
    if (std::abs(cgg_vg[k] - cgg_vg[k - 1] - 0.1) > 1e-12)
      throw invalid_input("Cgg grid must be uniform with 0.1 V spacing");
  }
  if (std::abs(cgg_vg.front() + 0.7) > 1e-12 || std::abs(cgg_vg.back() - 0.7) > 1e-12)
    throw invalid_input("Cgg grid must span -0.7 V to 0.7 V");
  for (std::size_t k = 1; k < kIdVgPoints; ++k) {
    if (std::abs(id_vg[k] - id_vg[k - 1] - 0.1) > 1e-12)
      throw invalid_input("Id grid must be uniform with 0.1 V spacing");
  }
  if (std::abs(id_vg.front()) > 1e-12) throw invalid_input("Id grid must start at 0 V");
  if (id_vd[0] != 0.05 || id_vd[1] != 0.7) throw invalid_input("Id drain conditions must be {0.05, 0.7} V");
}

std::array<double, 6> CggParams::to_array() const { return {phig, cfs, eot, qmfactor, qmtcecv, cgsl}; }

CggParams CggParams::from_array(std::span<const double> v) {
  if (v.size() != 6) throw invalid_input("Cgg parameter vector must have 6 entries");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

std::array<double, 11> IdParams::to_array() const {
  return {cit, u0, ua, eu, eta0, cdscd, vsat, ksativ, rdsw, pclm, mexp};
}

IdParams IdParams::from_array(std::span<const double> v, double phig) {
  if (v.size() != 11) throw invalid_input("Id parameter vector must have 11 entries");
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], phig};
}

std::size_t curve_length(CurveKind kind) { return kind == CurveKind::kCgg ? kCggPoints : kIdPoints; }

double scale_value(CurveKind kind, double value) {
  if (kind == CurveKind::kCgg) return value / device::kCref;
  return (std::log10(std::max(value, device::kIfloor)) + 14.0) / 12.0;
}

double unscale_value(CurveKind kind, double scaled) {
  if (kind == CurveKind::kCgg) return scaled * device::kCref;
  return std::pow(10.0, scaled * 12.0 - 14.0);
}

std::vector<double> scale_curve(CurveKind kind, std::span<const double> values) {
  if (values.size() != curve_length(kind))
    throw invalid_input("curve has " + std::to_string(values.size()) + " points, expected " +
                        std::to_string(curve_length(kind)));
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw invalid_input("curve values must be finite and positive");
    out[i] = scale_value(kind, values[i]);
  }
  return out;
}

std::vector<double> unscale_curve(CurveKind kind, std::span<const double> scaled) {
  if (scaled.size() != curve_length(kind))
    throw invalid_input("scaled curve has " + std::to_string(scaled.size()) + " points, expected " +
                        std::to_string(curve_length(kind)));
  std::vector<double> out(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) out[i] = unscale_value(kind, scaled[i]);
  return out;
}

CurveVector CurveVector::from_values(CurveKind kind, std::vector<double> values) {
  CurveVector c;
  c.kind = kind;
  c.scaled = scale_curve(kind, values);
  c.values = std::move(values);
  return c;
}

CurveVector CurveVector::from_scaled(CurveKind kind, std::vector<double> scaled) {
  CurveVector c;
  c.kind = kind;
  c.values = unscale_curve(kind, scaled);
  c.scaled = std::move(scaled);
  return c;
}

double gate_capacitance(const CggParams& p, double vg) {
  require_finite(p);
  return unchecked_gate_capacitance(p, vg);
}

double drain_current(const IdParams& p, double vg, double vd) {
  require_valid(p);
  return unchecked_drain_current(p, vg, vd);
}

AnalyticSurrogate::AnalyticSurrogate() : grid_(BiasGrid::canonical()) {}

AnalyticSurrogate::AnalyticSurrogate(BiasGrid grid) : grid_(grid) { grid_.validate(); }

CurveVector AnalyticSurrogate::simulate_cgg(const CggParams& p) const {
  require_finite(p);
  std::vector<double> values(kCggPoints);
  for (std::size_t k = 0; k < kCggPoints; ++k) values[k] = unchecked_gate_capacitance(p, grid_.cgg_vg[k]);
  return CurveVector::from_values(CurveKind::kCgg, std::move(values));
}

CurveVector AnalyticSurrogate::simulate_id(const IdParams& p) const {
  require_valid(p);
  std::vector<double> values(kIdPoints);
  for (std::size_t d = 0; d < 2; ++d)
    for (std::size_t k = 0; k < kIdVgPoints; ++k)
      values[d * kIdVgPoints + k] = unchecked_drain_current(p, grid_.id_vg[k], grid_.id_vd[d]);
  return CurveVector::from_values(CurveKind::kId, std::move(values));
}

double AnalyticSurrogate::id_at(const IdParams& p, double vg, double vd) const {
  return drain_current(p, vg, vd);
}

std::vector<std::vector<double>> simulate_id_vd(const Simulator& sim, const IdParams& p,
                                                std::span<const double> vg_list,
                                                std::span<const double> vd_grid) {
  std::vector<std::vector<double>> family;
  family.reserve(vg_list.size());
  for (double vg : vg_list) {
    std::vector<double> row;
    row.reserve(vd_grid.size());
    for (double vd : vd_grid) row.push_back(sim.id_at(p, vg, vd));
    family.push_back(std::move(row));
  }
  return family;
}

std::vector<double> default_vd_sweep() {
  std::vector<double> vd(15);
  for (std::size_t k = 0; k < vd.size(); ++k) vd[k] = static_cast<double>(k) / 20.0;
  return vd;
}

}  // namespace floatnorm
