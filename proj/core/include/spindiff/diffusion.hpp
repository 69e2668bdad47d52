#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spindiff/crystal.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/dipolar.hpp"
#include "spindiff/linewidth.hpp"

namespace spindiff {

enum class DiffusionMethod { NearestNeighbor, LatticeSum };

std::string_view to_string(DiffusionMethod m) noexcept;

struct DiffusionCoefficient {
  double value = 0.0;  // nm^2/s
  DiffusionMethod method = DiffusionMethod::NearestNeighbor;
  LatticeKind structure = LatticeKind::Diamond;
  double abundance = 0.0;
  SpectralDensity p0{};
  double cutoff = 0.0;  // Angstrom (lattice sum) or r_NN (nearest neighbour)
  std::uint64_t seed = 0;
  std::size_t n_lattices = 0;
  std::size_t n_orientations = 0;
  bool isolated = false;
};

/// W = (pi/2) d^2 p0, d in Hz, p0 in s.
double flip_flop_rate(double d_hz, const SpectralDensity& p0);

/// (fwhm / 30) r_nn^2 with fwhm in Hz and r_nn in Angstrom.
DiffusionCoefficient d_nearest_neighbor(double fwhm_hz, double r_nn_angstrom);

struct LatticeSumRequest {
  CubicStructure structure{LatticeKind::Diamond, 5.431};
  SpinSpecies species = SpinSpecies::silicon29();
  double abundance = 0.047;
  std::size_t ensemble_size = 100;
  std::size_t n_orientations = 1597;
  std::uint64_t seed = 1;
  /// d^2 r^2 cut-off (Angstrom); computed like the line-width cut-off when unset.
  std::optional<double> cutoff;
  int cutoff_extent = 30;
  std::size_t cutoff_ensemble = 100;
  double threshold = 0.95;
  unsigned threads = 1;
};

struct LatticeSumWeight {
  /// Ensemble and powder mean of sum_j (pi/4) d_ij^2 r_ij^2, Hz^2 Angstrom^2.
  double mean = 0.0;
  double std_lattice = 0.0;
  double cutoff = 0.0;
  std::size_t n_lattices = 0;
  std::size_t n_isolated = 0;
  std::size_t n_orientations = 0;
};

/// The p0-independent part of the lattice sum.
LatticeSumWeight lattice_sum_weight(const LatticeSumRequest& request);

/// D_lat = p0 * sum_j (pi/4) d_ij^2 r_ij^2 averaged over lattices and
/// orientations; zero with the isolated flag when no spin is within the cut-off.
DiffusionCoefficient d_lattice_sum(const LatticeSumRequest& request,
                                   const SpectralDensity& p0);
DiffusionCoefficient d_lattice_sum(const LatticeSumWeight& weight,
                                   const LatticeSumRequest& request,
                                   const SpectralDensity& p0);

struct SweepConfig {
  SpinSpecies species = SpinSpecies::silicon29();
  std::size_t ensemble_size = 100;
  std::size_t n_orientations = 1597;
  int extent = 30;
  std::uint64_t seed = 1;
  double threshold = 0.95;
  LinewidthOptions linewidth{};
  bool poisson_correction = false;
  /// Replaces the simulated Gaussian p0 in the lattice sum.
  std::optional<SpectralDensity> p0_override;
  /// Experimental SQ width for a second nearest-neighbour estimate.
  std::optional<double> experimental_fwhm;
  unsigned threads = 1;
};

struct SweepRow {
  double abundance = 0.0;
  std::optional<LineWidthResult> line;
  std::optional<DiffusionCoefficient> nearest_neighbor;
  std::optional<DiffusionCoefficient> nearest_neighbor_experimental;
  std::optional<DiffusionCoefficient> lattice_sum;
  std::optional<LatticeSumWeight> weight;
  NearestNeighborDistance r_nn{};
  double cutoff_d2 = 0.0;
  double cutoff_d2r2 = 0.0;
  std::string error;  // empty on success
};

/// Full pipeline per abundance. Cut-offs come from the nearest point of the
/// fixed abundance grid. Failures are recorded per row and do not stop the sweep.
std::vector<SweepRow> abundance_sweep(const CubicStructure& structure,
                                      std::span<const double> abundances,
                                      const SweepConfig& config);

CsvTable sweep_table(const CubicStructure& structure, std::span<const SweepRow> rows);

}  // namespace spindiff
