#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "spindiff/crystal.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/diffusion.hpp"

namespace spindiff {

enum class ScalingQuantity { ZQWidth, DOverP0 };

std::string_view to_string(ScalingQuantity q) noexcept;

struct ScalingPoint {
  double f_percent = 0.0;
  double value = 0.0;
};

/// value = prefactor(gamma, a) * u * f^m with f in percent.
struct PowerLawFit {
  ScalingQuantity quantity = ScalingQuantity::ZQWidth;
  LatticeKind structure = LatticeKind::Diamond;
  double u = 0.0;
  double m = 0.0;
  double u_err = 0.0;
  double m_err = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<double> log_residuals;

  double evaluate(double f_percent) const;
};

/// Prefactor divided out before fitting, with gamma~ = gamma / 1e6 and
/// a~ = a / 1 Angstrom: gamma~^2 / a~^3 for the ZQ width (Hz) and
/// gamma~^4 / a~^4 for D/p0, which carries d^2 r^2.
double scaling_prefactor(ScalingQuantity q, double gamma, double a) noexcept;

/// Unweighted least squares of log(value / prefactor) against log f.
/// Throws Domain for fewer than three points or non-positive entries.
PowerLawFit fit_power_law(std::span<const ScalingPoint> points, ScalingQuantity quantity,
                          double gamma = 1e6, double a = 1.0);

/// gamma~^2 / a~^3 * u * f^m in Hz.
double predict_zq_width(double gamma, double a, const PowerLawFit& fit, double f_percent);

/// D in nm^2/s. D/p0 fits are in rad^2 s^-2 nm^2 (angular couplings), so the
/// Hz-convention lattice sum is recovered with a 1/(2 pi)^2 factor.
double predict_D(double gamma, double a, const PowerLawFit& fit, double f_percent,
                 double p0);

/// D/p0 of a lattice-sum weight in rad^2 s^-2 nm^2.
double d_over_p0(const LatticeSumWeight& weight) noexcept;

/// (f_i / f_0)^2.
std::vector<double> abundance_rate_ratio(std::span<const double> f_percent);

struct StructureFits {
  LatticeKind structure = LatticeKind::Diamond;
  PowerLawFit zq;
  PowerLawFit d;
};

/// Columns: structure, u_zq, u_zq_err, m_zq, m_zq_err, u_d, u_d_err, m_d, m_d_err.
CsvTable scaling_csv(std::span<const StructureFits> fits);

}  // namespace spindiff
