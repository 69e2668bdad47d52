#include "spindiff/particle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spindiff/errors.hpp"
#include "spindiff/parallel.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

void ParticleGeometry::validate() const {
  require(radius_nm > 0.0 && std::isfinite(radius_nm), ErrorKind::Domain,
          "particle radius must be positive");
  require(shell_nm > 0.0 && shell_nm < radius_nm, ErrorKind::Domain,
          "shell thickness must lie in (0, R)");
  require(n_elements >= 10, ErrorKind::Domain, "need at least 10 radial elements");
}

std::size_t ParticleGeometry::first_shell_element() const noexcept {
  const double h = element_width();
  const double inner = radius_nm - shell_nm;
  std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(inner / h - 0.5)));
  while (i < n_elements && (static_cast<double>(i) + 0.5) * h <= inner) ++i;
  while (i > 0 && (static_cast<double>(i) - 0.5) * h > inner) --i;
  return i;
}

std::vector<double> ParticleGeometry::element_volumes() const {
  std::vector<double> v(n_elements);
  const double h = element_width();
  for (std::size_t i = 0; i < n_elements; ++i) {
    const double a = static_cast<double>(i) * h;
    const double b = static_cast<double>(i + 1) * h;
    v[i] = 4.0 / 3.0 * units::pi * (b * b * b - a * a * a);
  }
  return v;
}

std::string_view to_string(TraceKind k) noexcept {
  return k == TraceKind::BuildUp ? "buildup" : "decay";
}

double volume_average(const RadialProfile& profile, const ParticleGeometry& geometry) {
  require(profile.values.size() == geometry.n_elements, ErrorKind::Domain,
          "profile size does not match the geometry");
  const auto v = geometry.element_volumes();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    num += profile.values[i] * v[i];
    den += v[i];
  }
  return num / den;
}

namespace {

double rate_per_s(double t1_h) {
  require(t1_h > 0.0, ErrorKind::Domain, "T1 must be positive");
  return std::isinf(t1_h) ? 0.0 : 1.0 / (t1_h * units::seconds_per_hour);
}

void check_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && times[i] >= 0.0, ErrorKind::Domain,
            "times must be finite and non-negative");
    if (i > 0) {
      require(times[i] > times[i - 1], ErrorKind::Domain, "times must be strictly increasing");
    }
  }
}

// Finite-volume operator on the active elements [0, n): per-element volume,
// relaxation rate and conductance to the next element; `boundary` is the
// conductance from element n-1 to a clamped neighbour (0 for zero flux).
struct FvSystem {
  std::vector<double> volume;
  std::vector<double> rate;
  std::vector<double> conductance;  // size n - 1
  double boundary = 0.0;
  double boundary_value = 0.0;
};

FvSystem make_system(const ParticleGeometry& g, double d, double t1_in_h, double t1_out_h,
                     std::size_t n_active, bool clamp) {
  const auto vol = g.element_volumes();
  const std::size_t shell = g.first_shell_element();
  const double h = g.element_width();
  const double k_in = rate_per_s(t1_in_h);
  const double k_out = rate_per_s(t1_out_h);
  FvSystem s;
  s.volume.assign(vol.begin(), vol.begin() + static_cast<std::ptrdiff_t>(n_active));
  s.rate.resize(n_active);
  for (std::size_t i = 0; i < n_active; ++i) s.rate[i] = i >= shell ? k_out : k_in;
  s.conductance.resize(n_active > 0 ? n_active - 1 : 0);
  for (std::size_t i = 0; i + 1 < n_active; ++i) {
    const double r = static_cast<double>(i + 1) * h;
    s.conductance[i] = d * 4.0 * units::pi * r * r / h;
  }
  if (clamp) {
    const double r = static_cast<double>(n_active) * h;
    s.boundary = d * 4.0 * units::pi * r * r / h;
  }
  return s;
}

// Solves (L + diag(V k) + h^-1 V) x = rhs, or without the h term when
// inv_dt == 0, where L is the conductance Laplacian including the clamp.
std::vector<double> solve_tridiagonal(const FvSystem& s, double inv_dt,
                                      std::vector<double> rhs) {
  const std::size_t n = s.volume.size();
  std::vector<double> diag(n), upper(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    double dd = s.volume[i] * (s.rate[i] + inv_dt);
    if (i > 0) dd += s.conductance[i - 1];
    if (i + 1 < n) dd += s.conductance[i];
    if (i + 1 == n) dd += s.boundary;
    diag[i] = dd;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) upper[i] = -s.conductance[i];
  // Thomas algorithm; the matrix is symmetric and diagonally dominant.
  for (std::size_t i = 1; i < n; ++i) {
    const double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double r = rhs[i];
    if (i + 1 < n) r -= upper[i] * x[i + 1];
    require(diag[i] != 0.0, ErrorKind::Numerical, "singular finite-volume system");
    x[i] = r / diag[i];
  }
  return x;
}

std::vector<double> steady_state(const FvSystem& s) {
  const std::size_t n = s.volume.size();
  std::vector<double> rhs(n, 0.0);
  if (n == 0) return rhs;
  rhs[n - 1] = s.boundary * s.boundary_value;
  const bool no_sink = s.boundary == 0.0 &&
                       std::all_of(s.rate.begin(), s.rate.end(), [](double k) { return k == 0.0; });
  if (no_sink || s.boundary_value == 0.0) return std::vector<double>(n, 0.0);
  return solve_tridiagonal(s, 0.0, std::move(rhs));
}

struct ActiveTrajectory {
  std::vector<double> weighted_sums;  // sum V_i P_i over active elements per time
  std::vector<double> final_values;
};

ActiveTrajectory propagate_spectral(const FvSystem& s, const std::vector<double>& p0,
                                    std::span<const double> times) {
  const std::size_t n = s.volume.size();
  const auto pss = steady_state(s);
  ActiveTrajectory out;
  out.weighted_sums.resize(times.size());
  std::vector<double> sqrt_v(n), x0(n);
  double base = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sqrt_v[i] = std::sqrt(s.volume[i]);
    x0[i] = sqrt_v[i] * (p0[i] - pss[i]);
    base += s.volume[i] * pss[i];
  }
  // Symmetrised operator S = -V^-1/2 L V^-1/2 - diag(k).
  std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double l = 0.0;
    if (i > 0) l += s.conductance[i - 1];
    if (i + 1 < n) l += s.conductance[i];
    if (i + 1 == n) l += s.boundary;
    diag[i] = -l / s.volume[i] - s.rate[i];
    bound = std::max(bound, std::abs(diag[i]));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    off[i] = s.conductance[i] / (sqrt_v[i] * sqrt_v[i + 1]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::abs(diag[i]);
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    bound = std::max(bound, r);
  }
  double t_min = std::numeric_limits<double>::infinity();
  for (const double t : times) {
    if (t > 0.0) t_min = std::min(t_min, t);
  }
  const double initial_sum = [&] {
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) a += s.volume[i] * p0[i];
    return a;
  }();
  if (!std::isfinite(t_min)) {
    std::fill(out.weighted_sums.begin(), out.weighted_sums.end(), initial_sum);
    out.final_values = p0;
    return out;
  }
  // Modes below -40 / t_min contribute less than e^-40 at every requested
  // positive time.
  const double cut = 40.0 / t_min;
  const bool all = cut >= bound;
  lapack_int found = 0;
  std::vector<double> w(n), z(n * n);
  std::vector<lapack_int> support(2 * n);
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, 'V', all ? 'A' : 'V', static_cast<lapack_int>(n), diag.data(),
      off.data(), -cut, 1.0, 0, 0, 0.0, &found, w.data(), z.data(),
      static_cast<lapack_int>(n), support.data());
  require(info == 0, ErrorKind::Numerical,
          "tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  const std::size_t m = static_cast<std::size_t>(found);
  std::vector<double> amp(m), coef(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double* q = &z[k * n];
    // Rayleigh quotient as a sum of non-negative terms: keeps slow modes
    // (the conserved one in particular) accurate to high relative precision.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = q[i] / sqrt_v[i];
      if (i + 1 < n) {
        const double dp = p - q[i + 1] / sqrt_v[i + 1];
        num += s.conductance[i] * dp * dp;
      }
      num += s.rate[i] * q[i] * q[i];
      den += q[i] * q[i];
    }
    num += s.boundary * (q[n - 1] / sqrt_v[n - 1]) * (q[n - 1] / sqrt_v[n - 1]);
    w[k] = -num / den;
    double a = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a += sqrt_v[i] * q[i];
      c += q[i] * x0[i];
    }
    amp[k] = a;
    coef[k] = c;
  }
  for (std::size_t t = 0; t < times.size(); ++t) {
    if (times[t] == 0.0) {
      out.weighted_sums[t] = initial_sum;
      continue;
    }
    double acc = base;
    for (std::size_t k = 0; k < m; ++k) acc += amp[k] * coef[k] * std::exp(w[k] * times[t]);
    out.weighted_sums[t] = acc;
  }
  const double t_end = times.empty() ? 0.0 : times.back();
  if (t_end == 0.0) {
    out.final_values = p0;
  } else {
    out.final_values = pss;
    for (std::size_t k = 0; k < m; ++k) {
      const double e = coef[k] * std::exp(w[k] * t_end);
      const double* q = &z[k * n];
      for (std::size_t i = 0; i < n; ++i) out.final_values[i] += e * q[i] / sqrt_v[i];
    }
  }
  return out;
}

ActiveTrajectory propagate_euler(const FvSystem& s, std::vector<double> p,
                                 std::span<const double> times, double dt) {
  const std::size_t n = s.volume.size();
  ActiveTrajectory out;
  double now = 0.0;
  auto weighted = [&](const std::vector<double>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) a += s.volume[i] * v[i];
    return a;
  };
  for (const double t : times) {
    const double span = t - now;
    if (span > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
      const double h = span / static_cast<double>(steps);
      for (std::size_t k = 0; k < steps; ++k) {
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = s.volume[i] * p[i] / h;
        if (n > 0) rhs[n - 1] += s.boundary * s.boundary_value;
        p = solve_tridiagonal(s, 1.0 / h, std::move(rhs));
      }
      now = t;
    }
    out.weighted_sums.push_back(weighted(p));
  }
  out.final_values = std::move(p);
  return out;
}

double default_dt(const ParticleGeometry& g, double d, double t1_in_h, double t1_out_h) {
  double dt = std::numeric_limits<double>::infinity();
  if (d > 0.0) dt = g.radius_nm * g.radius_nm / d / 100.0;
  const double t1 = std::min(t1_in_h, t1_out_h);
  if (std::isfinite(t1)) dt = std::min(dt, t1 * units::seconds_per_hour / 1000.0);
  return std::isfinite(dt) ? dt : 1.0;
}

Simulation run(const ParticleGeometry& g, double d, double t1_in_h, double t1_out_h,
               bool clamp, double clamp_value, const std::vector<double>& start,
               std::span<const double> times, const SolverOptions& options, TraceKind kind) {
  g.validate();
  require(d >= 0.0 && std::isfinite(d), ErrorKind::Domain,
          "diffusion coefficient must be finite and non-negative");
  check_times(times);
  const std::size_t shell = g.first_shell_element();
  const std::size_t n_active = clamp ? shell : g.n_elements;
  require(n_active > 0, ErrorKind::Domain, "the clamped shell leaves no core elements");
  FvSystem sys = make_system(g, d, t1_in_h, t1_out_h, n_active, clamp);
  sys.boundary_value = clamp_value;
  std::vector<double> p0(start.begin(), start.begin() + static_cast<std::ptrdiff_t>(n_active));

  ActiveTrajectory traj;
  if (options.scheme == TimeScheme::Spectral) {
    traj = propagate_spectral(sys, p0, times);
  } else {
    const double dt = options.dt_s.value_or(default_dt(g, d, t1_in_h, t1_out_h));
    require(dt > 0.0, ErrorKind::Domain, "time step must be positive");
    traj = propagate_euler(sys, p0, times, dt);
  }

  const auto vol = g.element_volumes();
  const double total = std::accumulate(vol.begin(), vol.end(), 0.0);
  double clamped_sum = 0.0;
  for (std::size_t i = n_active; i < g.n_elements; ++i) clamped_sum += vol[i] * clamp_value;

  Simulation sim;
  sim.trace.kind = kind;
  sim.trace.times_s.assign(times.begin(), times.end());
  sim.trace.geometry = g;
  sim.trace.d_nm2_per_s = d;
  sim.trace.t1_in_h = t1_in_h;
  sim.trace.t1_out_h = t1_out_h;
  sim.trace.values.resize(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    const double v = (traj.weighted_sums[t] + clamped_sum) / total;
    require(std::isfinite(v), ErrorKind::Numerical, "non-finite polarization");
    sim.trace.values[t] = v;
  }
  sim.final_profile.values = std::move(traj.final_values);
  sim.final_profile.values.resize(g.n_elements, clamp_value);
  sim.final_profile.time_s = times.empty() ? 0.0 : times.back();
  return sim;
}

}  // namespace

Simulation simulate_buildup(const ParticleGeometry& geometry, double d_nm2_per_s,
                            double t1_in_h, double t1_out_h, double p_shell,
                            std::span<const double> times_s, const SolverOptions& options) {
  require(std::isfinite(p_shell), ErrorKind::Domain, "shell polarization must be finite");
  std::vector<double> start(geometry.n_elements, 0.0);
  return run(geometry, d_nm2_per_s, t1_in_h, t1_out_h, true, p_shell, start, times_s, options,
             TraceKind::BuildUp);
}

Simulation simulate_decay(const ParticleGeometry& geometry, double d_nm2_per_s, double t1_in_h,
                          double t1_out_h, const std::variant<RadialProfile, double>& initial,
                          std::span<const double> times_s, const SolverOptions& options) {
  std::vector<double> start;
  if (const auto* p = std::get_if<RadialProfile>(&initial)) {
    require(p->values.size() == geometry.n_elements, ErrorKind::Domain,
            "initial profile does not match the geometry");
    start = p->values;
  } else {
    start.assign(geometry.n_elements, std::get<double>(initial));
  }
  for (const double v : start) {
    require(std::isfinite(v), ErrorKind::Domain, "initial profile must be finite");
  }
  return run(geometry, d_nm2_per_s, t1_in_h, t1_out_h, false, 0.0, start, times_s, options,
             TraceKind::Decay);
}

namespace {

std::vector<double> log_axis(const AxisSpec& a) {
  require(a.min_h > 0.0 && a.max_h >= a.min_h && a.count >= 1, ErrorKind::Domain,
          "T1 grid axis needs 0 < min <= max and count >= 1");
  std::vector<double> v(a.count);
  if (a.count == 1) {
    v[0] = a.min_h;
    return v;
  }
  const double lo = std::log(a.min_h), hi = std::log(a.max_h);
  for (std::size_t i = 0; i < a.count; ++i) {
    v[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(a.count - 1));
  }
  return v;
}

double log_step(const AxisSpec& a) {
  return a.count > 1 ? (std::log(a.max_h) - std::log(a.min_h)) / static_cast<double>(a.count - 1)
                     : 0.0;
}

}  // namespace

FitResult fit_t1(const Trace& experimental, const ParticleGeometry& geometry,
                 double d_nm2_per_s, const GridSpec& grid, const FitModel& model,
                 unsigned threads) {
  require(experimental.times_s.size() >= 3 &&
              experimental.values.size() == experimental.times_s.size(),
          ErrorKind::Domain, "T1 fit needs at least three experimental points");
  check_times(experimental.times_s);
  geometry.validate();
  double level = 0.0;
  if (model.level) {
    level = *model.level;
  } else if (model.kind == TraceKind::Decay) {
    level = experimental.values.front();
  } else {
    level = fit_mono_exponential(experimental).amplitude;
  }

  auto residue_at = [&](double t_in, double t_out) {
    const auto sim =
        model.kind == TraceKind::Decay
            ? simulate_decay(geometry, d_nm2_per_s, t_in, t_out, level, experimental.times_s)
            : simulate_buildup(geometry, d_nm2_per_s, t_in, t_out, level, experimental.times_s);
    double r = 0.0;
    for (std::size_t i = 0; i < experimental.values.size(); ++i) {
      const double e = sim.trace.values[i] - experimental.values[i];
      r += e * e;
    }
    return r;
  };

  auto evaluate = [&](const std::vector<double>& ins, const std::vector<double>& outs) {
    std::vector<ResiduePoint> surface(ins.size() * outs.size());
    parallel_for(surface.size(), threads, [&](std::size_t idx) {
      const double a = ins[idx / outs.size()];
      const double b = outs[idx % outs.size()];
      surface[idx] = {a, b, residue_at(a, b)};
    });
    return surface;
  };

  const auto ins = log_axis(grid.t1_in);
  const auto outs = log_axis(grid.t1_out);
  FitResult fit;
  fit.residue_surface = evaluate(ins, outs);
  fit.log_step_in = log_step(grid.t1_in);
  fit.log_step_out = log_step(grid.t1_out);

  const auto best_it =
      std::min_element(fit.residue_surface.begin(), fit.residue_surface.end(),
                       [](const ResiduePoint& a, const ResiduePoint& b) { return a.residue < b.residue; });
  const std::size_t best = static_cast<std::size_t>(best_it - fit.residue_surface.begin());
  const std::size_t bi = best / outs.size(), bo = best % outs.size();
  fit.t1_in_h = best_it->t1_in_h;
  fit.t1_out_h = best_it->t1_out_h;
  fit.residue = best_it->residue;

  double rmin = fit.residue, rmax = fit.residue;
  for (const auto& p : fit.residue_surface) rmax = std::max(rmax, p.residue);
  fit.insensitive = rmax <= 0.0 || (rmax - rmin) / rmax < 0.01;
  double out_lo = std::numeric_limits<double>::infinity(), out_hi = 0.0;
  for (std::size_t j = 0; j < outs.size(); ++j) {
    const double r = fit.residue_surface[bi * outs.size() + j].residue;
    out_lo = std::min(out_lo, r);
    out_hi = std::max(out_hi, r);
  }
  double in_lo = std::numeric_limits<double>::infinity(), in_hi = 0.0;
  for (std::size_t i = 0; i < ins.size(); ++i) {
    const double r = fit.residue_surface[i * outs.size() + bo].residue;
    in_lo = std::min(in_lo, r);
    in_hi = std::max(in_hi, r);
  }
  const double in_range = in_hi - in_lo;
  fit.sensitivity_ratio = in_range > 0.0 ? (out_hi - out_lo) / in_range
                                         : std::numeric_limits<double>::infinity();

  if (grid.refine && (ins.size() > 1 || outs.size() > 1)) {
    auto refined_axis = [](double centre, double step, const AxisSpec& a) {
      std::vector<double> v;
      if (step == 0.0) return std::vector<double>{centre};
      for (int k = -2; k <= 2; ++k) {
        const double x = std::exp(std::log(centre) + 0.5 * step * k);
        if (x >= a.min_h * (1.0 - 1e-12) && x <= a.max_h * (1.0 + 1e-12)) v.push_back(x);
      }
      return v;
    };
    const auto rin = refined_axis(fit.t1_in_h, fit.log_step_in, grid.t1_in);
    const auto rout = refined_axis(fit.t1_out_h, fit.log_step_out, grid.t1_out);
    fit.refined_surface = evaluate(rin, rout);
    for (const auto& p : fit.refined_surface) {
      if (p.residue < fit.residue) {
        fit.residue = p.residue;
        fit.t1_in_h = p.t1_in_h;
        fit.t1_out_h = p.t1_out_h;
      }
    }
    fit.log_step_in *= 0.5;
    fit.log_step_out *= 0.5;
  }
  return fit;
}

RateModelParams rate_model(double p0, double tau_bup_h, double a) {
  require(p0 > 0.0 && tau_bup_h > 0.0 && a > 0.0, ErrorKind::Domain,
          "rate model needs positive P0, tau and A");
  require(p0 <= a, ErrorKind::InconsistentAsymptote,
          "steady-state polarization exceeds the asymptote A");
  RateModelParams r;
  r.p0 = p0;
  r.tau_bup_h = tau_bup_h;
  r.a = a;
  r.k_w = p0 / (a * tau_bup_h);
  r.k_r = 1.0 / tau_bup_h - r.k_w;
  return r;
}

namespace {

struct ProfileFit {
  double amplitude = 0.0;
  double rss = 0.0;
};

ProfileFit profile_at(const Trace& tr, double tau) {
  double sy = 0.0, gg = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < tr.times_s.size(); ++i) {
    const double e = std::exp(-tr.times_s[i] / tau);
    const double g = tr.kind == TraceKind::Decay ? e : 1.0 - e;
    sy += g * tr.values[i];
    gg += g * g;
    yy += tr.values[i] * tr.values[i];
  }
  if (gg <= 0.0) return {0.0, yy};
  return {sy / gg, std::max(0.0, yy - sy * sy / gg)};
}

}  // namespace

MonoExponentialFit fit_mono_exponential(const Trace& trace) {
  const auto& t = trace.times_s;
  const auto& y = trace.values;
  require(t.size() >= 3 && y.size() == t.size(), ErrorKind::Domain,
          "mono-exponential fit needs at least three points");
  check_times(t);
  for (const double v : y) {
    require(std::isfinite(v), ErrorKind::Domain, "trace values must be finite");
  }
  const double span = t.back() - t.front();
  double min_gap = span;
  for (std::size_t i = 1; i < t.size(); ++i) min_gap = std::min(min_gap, t[i] - t[i - 1]);
  require(span > 0.0, ErrorKind::Domain, "trace has zero time span");

  // Coarse scan of the profiled objective in log tau.
  const double lo = std::log(min_gap * 1e-2), hi = std::log(std::max(t.back(), span) * 1e2);
  constexpr int kScan = 400;
  int best = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double tau = std::exp(lo + (hi - lo) * k / kScan);
    const double r = profile_at(trace, tau).rss;
    if (r < best_rss) {
      best_rss = r;
      best = k;
    }
  }
  if (best == 0 || best == kScan) {
    fail(ErrorKind::NonConvergence,
         "mono-exponential fit: objective minimum at the edge of the scanned time-constant "
         "range [" + std::to_string(std::exp(lo)) + ", " + std::to_string(std::exp(hi)) +
             "] s, rss " + std::to_string(best_rss));
  }
  // Golden-section refinement in log tau.
  double a = lo + (hi - lo) * (best - 1) / kScan;
  double b = lo + (hi - lo) * (best + 1) / kScan;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = profile_at(trace, std::exp(c)).rss, fd = profile_at(trace, std::exp(d)).rss;
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = profile_at(trace, std::exp(c)).rss;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = profile_at(trace, std::exp(d)).rss;
    }
  }
  double tau = std::exp(0.5 * (a + b));
  double amp = profile_at(trace, tau).amplitude;

  // Gauss-Newton polish on (B, tau) with step halving.
  auto rss_of = [&](double bb, double tt) {
    double r = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-t[i] / tt);
      const double m = trace.kind == TraceKind::Decay ? bb * e : bb * (1.0 - e);
      r += (m - y[i]) * (m - y[i]);
    }
    return r;
  };
  double rss = rss_of(amp, tau);
  std::size_t iterations = 0;
  for (; iterations < 50; ++iterations) {
    double jbb = 0.0, jbt = 0.0, jtt = 0.0, gb = 0.0, gt = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-t[i] / tau);
      const double de = e * t[i] / (tau * tau);  // d e / d tau
      double m, dmb, dmt;
      if (trace.kind == TraceKind::Decay) {
        m = amp * e;
        dmb = e;
        dmt = amp * de;
      } else {
        m = amp * (1.0 - e);
        dmb = 1.0 - e;
        dmt = -amp * de;
      }
      const double r = m - y[i];
      jbb += dmb * dmb;
      jbt += dmb * dmt;
      jtt += dmt * dmt;
      gb += dmb * r;
      gt += dmt * r;
    }
    const double det = jbb * jtt - jbt * jbt;
    if (!(det > 0.0)) break;
    double db = -(jtt * gb - jbt * gt) / det;
    double dt = -(-jbt * gb + jbb * gt) / det;
    double step = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      const double nb = amp + step * db, nt = tau + step * dt;
      if (nt > 0.0) {
        const double nr = rss_of(nb, nt);
        if (nr <= rss) {
          const bool done = std::abs(step * dt) <= 1e-15 * tau && std::abs(step * db) <= 1e-15 * std::abs(amp);
          amp = nb;
          tau = nt;
          rss = nr;
          improved = !done;
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  require(std::isfinite(amp) && std::isfinite(tau) && tau > 0.0, ErrorKind::NonConvergence,
          "mono-exponential fit produced non-finite parameters");
  return {amp, tau, rss, iterations};
}

Trace read_trace_csv(const CsvTable& table, TraceKind kind) {
  Trace tr;
  tr.kind = kind;
  const bool has_norm = std::find(table.columns.begin(), table.columns.end(), "normalization") !=
                        table.columns.end();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    tr.times_s.push_back(table.number(r, "time_s"));
    double v = table.number(r, "signal");
    if (has_norm) {
      const double n = table.number(r, "normalization");
      require(n != 0.0, ErrorKind::Io, "trace row " + std::to_string(r + 1) + ": zero normalization");
      v /= n;
    }
    tr.values.push_back(v);
  }
  for (std::size_t i = 1; i < tr.times_s.size(); ++i) {
    require(tr.times_s[i] > tr.times_s[i - 1], ErrorKind::Io,
            "trace times must be strictly increasing (row " + std::to_string(i + 1) + ")");
  }
  return tr;
}

CsvTable trace_csv(const Trace& trace) {
  CsvTable t;
  t.columns = {"time_s", "signal"};
  for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
    t.rows.push_back({format_number(trace.times_s[i]), format_number(trace.values[i])});
  }
  return t;
}

CsvTable residue_csv(std::span<const ResiduePoint> surface) {
  CsvTable t;
  t.columns = {"t1_in_h", "t1_out_h", "residue"};
  for (const auto& p : surface) {
    t.rows.push_back({format_number(p.t1_in_h), format_number(p.t1_out_h),
                      format_number(p.residue)});
  }
  return t;
}

}  // namespace spindiff
