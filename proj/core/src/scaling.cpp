#include "spindiff/scaling.hpp"

#include <cmath>

#include "spindiff/errors.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

std::string_view to_string(ScalingQuantity q) noexcept {
  return q == ScalingQuantity::ZQWidth ? "zq_width" : "d_over_p0";
}

double PowerLawFit::evaluate(double f_percent) const {
  return f_percent <= 0.0 ? 0.0 : u * std::pow(f_percent, m);
}

double scaling_prefactor(ScalingQuantity q, double gamma, double a) noexcept {
  const double g = std::abs(gamma) / units::gamma_reference;
  const double l = a / units::lattice_reference;
  return q == ScalingQuantity::ZQWidth ? g * g / (l * l * l) : (g * g * g * g) / (l * l * l * l);
}

PowerLawFit fit_power_law(std::span<const ScalingPoint> points, ScalingQuantity quantity,
                          double gamma, double a) {
  require(points.size() >= 3, ErrorKind::Domain, "power-law fit needs >= 3 points");
  const double pre = scaling_prefactor(quantity, gamma, a);
  require(pre > 0.0, ErrorKind::Domain, "gamma and a must be non-zero");
  const std::size_t n = points.size();
  std::vector<double> x(n), y(n);
  PowerLawFit fit;
  fit.quantity = quantity;
  fit.f_min = points.front().f_percent;
  fit.f_max = points.front().f_percent;
  for (std::size_t i = 0; i < n; ++i) {
    require(points[i].f_percent > 0.0 && points[i].value > 0.0 &&
                std::isfinite(points[i].value),
            ErrorKind::Domain, "power-law fit needs positive abundances and values");
    x[i] = std::log(points[i].f_percent);
    y[i] = std::log(points[i].value / pre);
    fit.f_min = std::min(fit.f_min, points[i].f_percent);
    fit.f_max = std::max(fit.f_max, points[i].f_percent);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::Domain, "power-law fit needs distinct abundances");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  fit.log_residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    fit.log_residuals[i] = r;
    ssr += r * r;
  }
  const double s2 = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
  const double se_slope = std::sqrt(s2 / sxx);
  const double se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  fit.m = slope;
  fit.u = std::exp(intercept);
  fit.m_err = se_slope;
  fit.u_err = fit.u * se_intercept;
  return fit;
}

double predict_zq_width(double gamma, double a, const PowerLawFit& fit, double f_percent) {
  require(fit.quantity == ScalingQuantity::ZQWidth, ErrorKind::Domain,
          "predict_zq_width needs a ZQ-width fit");
  return scaling_prefactor(ScalingQuantity::ZQWidth, gamma, a) * fit.evaluate(f_percent);
}

double predict_D(double gamma, double a, const PowerLawFit& fit, double f_percent,
                 double p0) {
  require(fit.quantity == ScalingQuantity::DOverP0, ErrorKind::Domain,
          "predict_D needs a D/p0 fit");
  require(p0 >= 0.0, ErrorKind::Domain, "p0 must be non-negative");
  return scaling_prefactor(ScalingQuantity::DOverP0, gamma, a) * fit.evaluate(f_percent) *
         p0 / (units::two_pi * units::two_pi);
}

double d_over_p0(const LatticeSumWeight& weight) noexcept {
  return weight.mean * units::two_pi * units::two_pi * units::angstrom2_to_nm2;
}

std::vector<double> abundance_rate_ratio(std::span<const double> f_percent) {
  require(!f_percent.empty(), ErrorKind::Domain, "abundance list is empty");
  require(f_percent.front() > 0.0, ErrorKind::Domain, "reference abundance must be positive");
  std::vector<double> out;
  out.reserve(f_percent.size());
  for (const double f : f_percent) {
    const double r = f / f_percent.front();
    out.push_back(r * r);
  }
  return out;
}

CsvTable scaling_csv(std::span<const StructureFits> fits) {
  CsvTable t;
  t.columns = {"structure", "u_zq", "u_zq_err", "m_zq", "m_zq_err",
               "u_d",       "u_d_err", "m_d", "m_d_err"};
  for (const auto& f : fits) {
    t.rows.push_back({std::string(to_string(f.structure)), format_number(f.zq.u),
                      format_number(f.zq.u_err), format_number(f.zq.m),
                      format_number(f.zq.m_err), format_number(f.d.u),
                      format_number(f.d.u_err), format_number(f.d.m),
                      format_number(f.d.m_err)});
  }
  return t;
}

}  // namespace spindiff
