#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "spindiff/crystal.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/vec3.hpp"

namespace spindiff {

/// Spin-1/2 species; gamma in rad s^-1 T^-1 (sign kept).
struct SpinSpecies {
  double gamma = 0.0;

  static SpinSpecies silicon29();
  /// gamma = 1e6 rad s^-1 T^-1, the reference for reduced units.
  static SpinSpecies reference();
};

/// (mu0/4pi) hbar gamma_i gamma_j / (2 pi) in Hz * Angstrom^3, so that the
/// coupling at distance r and polar angle theta is
/// prefactor / r^3 * (3 cos^2 theta - 1) / 2.
double coupling_prefactor(const SpinSpecies& i, const SpinSpecies& j);

/// (3 cos^2 theta - 1) / 2.
constexpr double angular_factor(double cos_theta) noexcept {
  return 1.5 * cos_theta * cos_theta - 0.5;
}

/// Secular dipolar coupling d_ij in Hz. `field_dir` need not be normalised.
/// Throws Domain for a zero-length displacement.
double coupling(const Vec3& displacement, const Vec3& field_dir,
                const SpinSpecies& i, const SpinSpecies& j);

enum class WeightKind { DSquared, DSquaredRSquared };

std::string_view to_string(WeightKind kind) noexcept;
std::optional<WeightKind> parse_weight_kind(std::string_view name) noexcept;

struct ProfilePoint {
  double distance = 0.0;  // Angstrom from the central spin
  double fraction = 0.0;  // enclosed share of the total weight
};

/// Cumulative share of sum d^2 (or d^2 r^2) over the occupied sites, sorted by
/// distance from the central spin and normalised by the total over the box.
/// Starts with (0, 0) and ends at exactly 1. Throws EmptyProfile when the
/// lattice has no spin besides the central one or the total weight vanishes.
std::vector<ProfilePoint> cumulative_profile(const OccupiedLattice& lattice,
                                             WeightKind kind,
                                             const Vec3& field_dir);

struct CouplingCutoff {
  WeightKind weight_kind = WeightKind::DSquared;
  double threshold = 0.95;
  double radius = 0.0;              // Angstrom
  double contained_fraction = 0.0;  // mean enclosed share at `radius`
  std::size_t lattices_used = 0;
};

struct CutoffRequest {
  CubicStructure structure{LatticeKind::Diamond, 5.431};
  double abundance = 0.047;
  WeightKind weight_kind = WeightKind::DSquared;
  std::size_t ensemble_size = 100;
  double threshold = 0.95;
  int extent = 30;
  std::uint64_t seed = 1;
  /// Field direction in the crystal frame; +z when unset.
  std::optional<Vec3> field_dir;
  unsigned threads = 1;
};

/// Mean of the per-lattice cumulative profiles over the ensemble, evaluated
/// on the distinct lattice shells, and the smallest shell radius at which the
/// mean reaches the threshold. The radius must stay inside the sphere
/// inscribed in the box (extent * a), otherwise BoxTooSmall is thrown.
CouplingCutoff cutoff_radius(const CutoffRequest& request);

/// Same as above on a prebuilt box template (reused across abundances).
CouplingCutoff cutoff_radius(const CutoffRequest& request,
                             const SiteTemplate& box);

/// The fixed abundance grid (fractions) used for cut-off tables.
std::span<const double> default_abundance_grid() noexcept;

struct CutoffTableRow {
  LatticeKind structure = LatticeKind::Diamond;
  double abundance = 0.0;  // fraction
  CouplingCutoff cutoff;
};

/// Cut-off radii per (abundance, weight kind) with nearest-grid lookup.
class CutoffTable {
 public:
  void add(CutoffTableRow row);
  std::span<const CutoffTableRow> rows() const noexcept { return rows_; }
  /// Row for the grid abundance nearest to `abundance` (in log space).
  const CutoffTableRow& lookup(double abundance, WeightKind kind) const;

 private:
  std::vector<CutoffTableRow> rows_;
};

CutoffTable build_cutoff_table(const CubicStructure& structure,
                               std::span<const double> abundances,
                               const CutoffRequest& base);

/// Columns: structure, abundance_percent, weight_kind, threshold,
/// radius_angstrom, contained_fraction.
CsvTable cutoff_csv(const CutoffTable& table);

}  // namespace spindiff
