#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace floatnorm {

inline constexpr std::size_t kCggPoints = 15;
inline constexpr std::size_t kIdVgPoints = 8;
inline constexpr std::size_t kIdPoints = 2 * kIdVgPoints;

/// Fixed bias points. The Id curve is the Vd=0.05 block followed by the Vd=0.7 block.
struct BiasGrid {
  std::array<double, kCggPoints> cgg_vg;
  std::array<double, kIdVgPoints> id_vg;
  std::array<double, 2> id_vd;

  static const BiasGrid& canonical();
  /// Throws if the point counts, ordering or spacing are off.
  void validate() const;
};

/// Surrogate device constants.
namespace device {
inline constexpr double kVt = 0.02585;        // V
inline constexpr double kEpsHk = 3.453e-11;   // F/m
inline constexpr double kWidth = 1.0e-7;      // m
inline constexpr double kLength = 2.0e-8;     // m
inline constexpr double kArea = kWidth * kLength;
inline constexpr double kPhiRef = 4.5;        // eV
inline constexpr double kNc = 1.5;
inline constexpr double kOverlapSlope = 5.0;  // 1/V
inline constexpr double kTqm0 = 1.0e-11;      // m
inline constexpr double kCoxI = 0.02;         // F/m^2
inline constexpr double kCden = 0.5;          // F/m^2
inline constexpr double kDibl = 0.02;         // V
inline constexpr double kVoff = 0.3;          // V
inline constexpr double kCref = 1e-16;        // F
inline constexpr double kIfloor = 1e-14;      // A
}  // namespace device

struct CggParams {
  double phig = 4.5;
  double cfs = 1e-10;
  double eot = 1e-9;
  double qmfactor = 0.0;
  double qmtcecv = 1.0;
  double cgsl = 1e-10;

  /// Canonical-order view: PHIG, CFS, EOT, QMFACTOR, QMTCECV, CGSL.
  std::array<double, 6> to_array() const;
  static CggParams from_array(std::span<const double> values);
};

/// Id-stage parameters plus PHIG, which rides along as a fixed companion value.
struct IdParams {
  double cit = 5e-3;
  double u0 = 2.75e-2;
  double ua = 1.5;
  double eu = 3.0;
  double eta0 = 3.0;
  double cdscd = 0.35;
  double vsat = 1e5;
  double ksativ = 5.0;
  double rdsw = 175.0;
  double pclm = 6.5e-2;
  double mexp = 6.0;
  double phig = 4.5;

  /// Canonical-order view of the 11 extracted parameters (PHIG excluded).
  std::array<double, 11> to_array() const;
  static IdParams from_array(std::span<const double> values, double phig);
};

enum class CurveKind { kCgg, kId };

/// Discretized device response plus its network-space representation.
struct CurveVector {
  CurveKind kind = CurveKind::kCgg;
  std::vector<double> values;  // F or A
  std::vector<double> scaled;

  /// Builds from physical values; throws if the length does not match the kind.
  static CurveVector from_values(CurveKind kind, std::vector<double> values);
  static CurveVector from_scaled(CurveKind kind, std::vector<double> scaled);
};

std::size_t curve_length(CurveKind kind);

double scale_value(CurveKind kind, double value);
double unscale_value(CurveKind kind, double scaled);
std::vector<double> scale_curve(CurveKind kind, std::span<const double> values);
std::vector<double> unscale_curve(CurveKind kind, std::span<const double> scaled);

/// Closed-form gate capacitance at one gate voltage.
double gate_capacitance(const CggParams& p, double vg);
/// Closed-form drain current at one bias point, floored at kIfloor.
double drain_current(const IdParams& p, double vg, double vd);

/// Backend contract shared by extraction and studies. Implementations must
/// honour the canonical grid and output ordering.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual CurveVector simulate_cgg(const CggParams& p) const = 0;
  virtual CurveVector simulate_id(const IdParams& p) const = 0;
  /// Drain current at an arbitrary bias point; used for sweeps and derivatives.
  virtual double id_at(const IdParams& p, double vg, double vd) const = 0;
};

class AnalyticSurrogate final : public Simulator {
 public:
  AnalyticSurrogate();
  explicit AnalyticSurrogate(BiasGrid grid);

  CurveVector simulate_cgg(const CggParams& p) const override;
  CurveVector simulate_id(const IdParams& p) const override;
  double id_at(const IdParams& p, double vg, double vd) const override;

  const BiasGrid& grid() const { return grid_; }

 private:
  BiasGrid grid_;
};

/// Id-Vd family: result[i][j] is Id at vg_list[i], vd_grid[j].
std::vector<std::vector<double>> simulate_id_vd(const Simulator& sim, const IdParams& p,
                                                std::span<const double> vg_list,
                                                std::span<const double> vd_grid);

/// 0, 0.05, ..., 0.7.
std::vector<double> default_vd_sweep();

}  // namespace floatnorm
