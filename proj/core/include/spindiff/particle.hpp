#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spindiff/csv.hpp"

namespace spindiff {

/// Sphere of radius R split into n_elements shells of equal thickness; the
/// outer shell_thickness is the defect-bearing shell.
struct ParticleGeometry {
  double radius_nm = 10.0;
  double shell_nm = 3.0;
  std::size_t n_elements = 1000;

  /// Throws Domain unless 0 < shell < R and n_elements >= 10.
  void validate() const;
  double element_width() const noexcept { return radius_nm / static_cast<double>(n_elements); }
  /// Index of the first shell element: elements whose centre lies beyond R - shell.
  std::size_t first_shell_element() const noexcept;
  /// Element volumes 4 pi / 3 (r_{i+1}^3 - r_i^3), nm^3.
  std::vector<double> element_volumes() const;
};

struct RadialProfile {
  std::vector<double> values;
  double time_s = 0.0;
};

enum class TraceKind { BuildUp, Decay };

std::string_view to_string(TraceKind k) noexcept;

struct Trace {
  TraceKind kind = TraceKind::Decay;
  std::vector<double> times_s;
  std::vector<double> values;
  // Provenance of simulated traces; zero for experimental input.
  ParticleGeometry geometry{};
  double d_nm2_per_s = 0.0;
  double t1_in_h = 0.0;
  double t1_out_h = 0.0;
};

/// sum P_i V_i / sum V_i. Throws Domain on a size mismatch.
double volume_average(const RadialProfile& profile, const ParticleGeometry& geometry);

enum class TimeScheme {
  /// Exact propagation in the eigenbasis of the symmetrised finite-volume
  /// operator; modes that have decayed below e^-40 by the first requested
  /// time are skipped.
  Spectral,
  /// Backward Euler with a fixed step (tridiagonal solve per step).
  BackwardEuler,
};

struct SolverOptions {
  TimeScheme scheme = TimeScheme::Spectral;
  /// Backward Euler step; default min(R^2 / (100 D), min(T1) / 1000).
  std::optional<double> dt_s;
};

struct Simulation {
  Trace trace;
  RadialProfile final_profile;
};

/// Build-up with every shell element clamped at p_shell, zero initial core
/// polarization, zero flux at r = 0, T1 = t1_out in the shell and t1_in in
/// the core (hours, +inf allowed). Returns the whole-particle average at
/// each requested time (seconds, non-decreasing, >= 0).
Simulation simulate_buildup(const ParticleGeometry& geometry, double d_nm2_per_s,
                            double t1_in_h, double t1_out_h, double p_shell,
                            std::span<const double> times_s, const SolverOptions& options = {});

/// Unclamped decay with zero flux at both ends, from a profile or a uniform value.
Simulation simulate_decay(const ParticleGeometry& geometry, double d_nm2_per_s, double t1_in_h,
                          double t1_out_h, const std::variant<RadialProfile, double>& initial,
                          std::span<const double> times_s, const SolverOptions& options = {});

struct AxisSpec {
  double min_h = 0.05;
  double max_h = 50.0;
  std::size_t count = 40;
};

struct GridSpec {
  AxisSpec t1_in{};
  AxisSpec t1_out{};
  bool refine = true;
};

struct FitModel {
  TraceKind kind = TraceKind::Decay;
  /// Shell clamp for build-ups, uniform start for decays. When unset the
  /// decay starts at the first experimental value and the build-up clamp is
  /// the steady state of a mono-exponential fit to the experimental trace.
  std::optional<double> level;
};

struct ResiduePoint {
  double t1_in_h = 0.0;
  double t1_out_h = 0.0;
  double residue = 0.0;
};

struct FitResult {
  double t1_in_h = 0.0;
  double t1_out_h = 0.0;
  double residue = 0.0;
  std::vector<ResiduePoint> residue_surface;  // coarse grid, t1_in-major
  std::vector<ResiduePoint> refined_surface;
  /// Log spacing of the grid that produced the best pair.
  double log_step_in = 0.0;
  double log_step_out = 0.0;
  /// Relative residue variation (max - min) / max across the coarse grid
  /// below 1 %.
  bool insensitive = false;
  /// Residue range along t1_out (at the best t1_in) over the range along
  /// t1_in (at the best t1_out), on the coarse grid.
  double sensitivity_ratio = 0.0;
};

/// Least-squares grid search over log-spaced (t1_in, t1_out).
FitResult fit_t1(const Trace& experimental, const ParticleGeometry& geometry,
                 double d_nm2_per_s, const GridSpec& grid = {}, const FitModel& model = {},
                 unsigned threads = 1);

struct RateModelParams {
  double k_w = 0.0;  // 1/h
  double k_r = 0.0;  // 1/h
  double a = 0.0;
  double p0 = 0.0;
  double tau_bup_h = 0.0;
};

/// k_W = P0 / (A tau), k_R = 1 / tau - k_W. Throws InconsistentAsymptote
/// for P0 > A and Domain for non-positive inputs.
RateModelParams rate_model(double p0, double tau_bup_h, double a);

struct MonoExponentialFit {
  double amplitude = 0.0;
  double tau_s = 0.0;
  double rss = 0.0;
  std::size_t iterations = 0;
};

/// y = B exp(-t / tau) (decay) or B (1 - exp(-t / tau)) (build-up). Throws
/// NonConvergence with diagnostics when no finite minimum is found.
MonoExponentialFit fit_mono_exponential(const Trace& trace);

/// CSV with columns time_s, signal and an optional normalization column
/// (signal is divided by it).
Trace read_trace_csv(const CsvTable& table, TraceKind kind);
CsvTable trace_csv(const Trace& trace);
CsvTable residue_csv(std::span<const ResiduePoint> surface);

}  // namespace spindiff
