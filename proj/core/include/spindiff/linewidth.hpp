#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "spindiff/crystal.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/dipolar.hpp"

namespace spindiff {

/// Coefficients of the second-moment forms
///   M2_SQ = sq * sum_k d_ik^2
///   M2_ZQ = zq * sum_k (d_ik - d_jk)^2 + zq_flipflop * sum_k (d_ik^2 + d_jk^2)
///           + zq_pair * d_ij^2
/// The z-z Hamiltonian gives (1, 1, 0, 0); see oracle.hpp for calibration.
struct MomentCoefficients {
  double sq = 1.0;
  double zq = 1.0;
  double zq_flipflop = 0.0;
  double zq_pair = 0.0;

  friend bool operator==(const MomentCoefficients&, const MomentCoefficients&) = default;
};

struct MomentValue {
  double m2 = 0.0;  // Hz^2
  bool isolated = false;
};

/// Couplings in Hz of the central spin to each spin in `others`.
std::vector<double> couplings_from(const Vec3& central, std::span<const Vec3> others,
                                   const Vec3& field_dir, const SpinSpecies& species);

/// SQ second moment of the central spin. Spins coinciding with the central
/// one are skipped. `isolated` is set when no other spin is given.
MomentValue m2_single_quantum(const Vec3& central, std::span<const Vec3> others,
                              const Vec3& field_dir, const SpinSpecies& species,
                              const MomentCoefficients& coeffs = {});

/// ZQ second moment of the i <-> j flip-flop detuned by `background`.
/// Background entries coinciding with i or j are skipped.
MomentValue m2_zero_quantum(const Vec3& i, const Vec3& j,
                            std::span<const Vec3> background, const Vec3& field_dir,
                            const SpinSpecies& species,
                            const MomentCoefficients& coeffs = {});

/// 2 sqrt(2 ln 2 M2).
double fwhm_from_m2(double m2) noexcept;
double m2_from_fwhm(double fwhm) noexcept;

/// How per-target and per-sample moments are combined into one width.
enum class Averaging {
  /// Mean M2 over targets, orientations and lattices, then one FWHM.
  GrandMeanM2,
  /// FWHM per (lattice, orientation) from the target-mean M2, then averaged.
  SampleWidth,
  /// FWHM per flip-flop pair, averaged over targets, orientations and lattices.
  PairWidth,
};

enum class TargetWeighting {
  Uniform,
  /// Targets weighted by d_ij^2, proportional to their flip-flop rate.
  FlipFlopRate,
};

std::string_view to_string(Averaging a) noexcept;
std::optional<Averaging> parse_averaging(std::string_view name) noexcept;
std::string_view to_string(TargetWeighting w) noexcept;
std::optional<TargetWeighting> parse_target_weighting(std::string_view name) noexcept;

struct LinewidthOptions {
  Averaging averaging = Averaging::GrandMeanM2;
  TargetWeighting target_weighting = TargetWeighting::FlipFlopRate;
  MomentCoefficients coefficients{};
  /// Background spins lie within this multiple of the d^2 cut-off from the
  /// central spin.
  double background_factor = 2.0;
  /// Replace the sampled SQ moment by its exact occupation average
  /// f * sum_k d_ik^2 over every site in the background sphere. Same
  /// ensemble mean, no sampling noise; std_sq then reports zero spread.
  bool exact_sq_average = true;
};

struct LinewidthRequest {
  CubicStructure structure{LatticeKind::Diamond, 5.431};
  SpinSpecies species = SpinSpecies::silicon29();
  double abundance = 0.047;
  std::size_t ensemble_size = 100;
  std::size_t n_orientations = 1597;
  std::uint64_t seed = 1;
  /// Target radius (Angstrom). When unset the d^2 cut-off is computed from
  /// the same seed on a box of `cutoff_extent` cells.
  std::optional<double> cutoff;
  int cutoff_extent = 30;
  std::size_t cutoff_ensemble = 100;
  double threshold = 0.95;
  LinewidthOptions options{};
  unsigned threads = 1;
};

struct LineWidthResult {
  LatticeKind structure = LatticeKind::Diamond;
  double abundance = 0.0;
  double fwhm_sq = 0.0;  // Hz
  double fwhm_zq = 0.0;  // Hz
  double std_sq = 0.0;   // spread of per-lattice widths, Hz
  double std_zq = 0.0;
  double m2_sq = 0.0;    // grand-mean moments, Hz^2
  double m2_zq = 0.0;
  /// Ensemble-mean ZQ width per orientation, in orientation order.
  std::vector<double> orientation_fwhm_zq;
  std::vector<double> orientation_fwhm_sq;
  std::size_t n_orientations = 0;
  std::size_t n_lattices = 0;  // lattices with at least one target
  std::size_t n_isolated = 0;  // lattices without any target
  double cutoff = 0.0;         // target radius, Angstrom
  std::uint64_t seed = 0;

  /// Standard deviation of the per-orientation ZQ widths over their mean.
  double orientation_relative_spread() const;
};

/// Powder- and ensemble-averaged SQ and ZQ widths. Throws DegenerateAbundance
/// when no lattice has a target spin inside the cut-off.
LineWidthResult powder_linewidths(const LinewidthRequest& request);

enum class LineShapeSource { GaussianFromFwhm, ExperimentalTabulated };

struct SpectralDensity {
  double p0 = 0.0;  // s (per Hz)
  LineShapeSource source = LineShapeSource::GaussianFromFwhm;
};

/// Gaussian: p0 = 2 sqrt(ln 2 / pi) / FWHM.
SpectralDensity p_zero(double fwhm_hz);
SpectralDensity p_zero(const LineWidthResult& line);

/// Tabulated line shape: offsets (Hz, strictly increasing) and intensities.
/// Normalised by trapezoidal area and interpolated linearly at zero offset.
/// Throws Normalization for non-positive area, negative intensities or a
/// grid that does not bracket zero.
SpectralDensity p_zero(std::span<const double> offsets_hz,
                       std::span<const double> intensity);

/// Columns: structure, abundance_percent, fwhm_sq_hz, fwhm_zq_hz, std_hz,
/// n_lattices, n_orientations, seed.
CsvTable linewidth_csv(std::span<const LineWidthResult> rows);

}  // namespace spindiff
