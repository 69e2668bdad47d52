#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "spindiff/vec3.hpp"

namespace spindiff {

enum class LatticeKind { SimpleCubic, BodyCentered, FaceCentered, Diamond };

std::string_view to_string(LatticeKind kind) noexcept;
/// Accepts "simple_cubic"/"sc", "bcc", "fcc", "diamond"/"diamond_cubic".
std::optional<LatticeKind> parse_lattice_kind(std::string_view name) noexcept;

/// A conventional cubic cell with its basis in fractional coordinates.
class CubicStructure {
 public:
  CubicStructure(LatticeKind kind, double lattice_constant);

  LatticeKind kind() const noexcept { return kind_; }
  double lattice_constant() const noexcept { return a_; }
  std::span<const Vec3> basis() const noexcept;
  std::size_t basis_size() const noexcept { return basis().size(); }

  /// Shortest distance between two lattice sites (Angstrom).
  double min_site_distance() const noexcept;
  /// Lattice sites per cubic Angstrom.
  double site_density() const noexcept;

  friend bool operator==(const CubicStructure&, const CubicStructure&) = default;

 private:
  LatticeKind kind_;
  double a_;
};

inline constexpr std::size_t kDefaultSiteBudget = 60'000'000;

/// Every lattice position of the (2*extent+1)^3 cell box, cell-major
/// (x outermost, z innermost) and basis-minor. Position 0 of the central cell
/// is the origin. Throws ResourceLimit when the count exceeds `site_budget`.
std::vector<Vec3> build_lattice(const CubicStructure& structure, int extent,
                                std::size_t site_budget = kDefaultSiteBudget);

/// Number of positions build_lattice would produce.
std::size_t lattice_position_count(const CubicStructure& structure, int extent) noexcept;

/// Stable identifier of a lattice position, independent of the box extent.
std::uint64_t site_key(int ix, int iy, int iz, int basis_index) noexcept;

/// Seed of ensemble member `member` at abundance `abundance`, derived from a
/// base seed by hashing. Members are independent and order-insensitive.
std::uint64_t member_seed(std::uint64_t base_seed, std::size_t member,
                          double abundance) noexcept;

/// Counter-based Bernoulli occupation: a site is occupied iff a hash of
/// (seed, site key) falls below abundance * 2^64. Any subset of sites can be
/// queried in any order with identical results.
class Occupation {
 public:
  Occupation(double abundance, std::uint64_t seed);

  bool occupied(std::uint64_t key) const noexcept;
  double abundance() const noexcept { return abundance_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  double abundance_;
  std::uint64_t seed_;
  std::uint64_t threshold_;
  bool always_;
};

struct OccupiedLattice {
  CubicStructure structure;
  int extent = 0;
  double abundance = 1.0;
  std::uint64_t seed = 0;
  std::vector<Vec3> sites;
  std::size_t central_index = 0;
};

/// Keeps each non-central position with probability f; the central position
/// (origin) is always kept. `positions` must come from build_lattice with the
/// same structure and extent.
OccupiedLattice occupy(const CubicStructure& structure, int extent,
                       std::span<const Vec3> positions, double abundance,
                       std::uint64_t seed);

OccupiedLattice occupy(const CubicStructure& structure, int extent,
                       double abundance, std::uint64_t seed,
                       std::size_t site_budget = kDefaultSiteBudget);

/// A lattice position relative to the central site.
struct TemplateSite {
  Vec3 position;
  double distance = 0.0;
  std::uint64_t key = 0;
};

/// Lattice positions around the origin sorted by (distance, key), origin
/// excluded. Built once per structure and reused for every ensemble member.
class SiteTemplate {
 public:
  /// Positions with distance <= radius.
  static SiteTemplate sphere(const CubicStructure& structure, double radius,
                             std::size_t site_budget = kDefaultSiteBudget);
  /// All positions of the (2*extent+1)^3 cell box.
  static SiteTemplate box(const CubicStructure& structure, int extent,
                          std::size_t site_budget = kDefaultSiteBudget);

  std::span<const TemplateSite> sites() const noexcept { return sites_; }
  std::size_t size() const noexcept { return sites_.size(); }
  /// Number of leading sites with distance <= radius.
  std::size_t count_within(double radius) const noexcept;

 private:
  std::vector<TemplateSite> sites_;
};

struct NearestNeighborDistance {
  double value = 0.0;        // Angstrom
  double uncorrected = 0.0;  // (f * basis / a^3)^(-1/3)
  bool clamped = false;
};

/// Statistical nearest-neighbour distance (f * n_basis / a^3)^(-1/3), times
/// 0.55 with the Poisson correction, never below the structure's minimum
/// site distance.
NearestNeighborDistance nn_distance(double abundance,
                                    const CubicStructure& structure,
                                    bool poisson_correction = false);

inline constexpr double kPoissonNnFactor = 0.55;

struct Orientation {
  double alpha = 0.0;  // azimuth, [0, 2 pi)
  double beta = 0.0;   // polar angle, [0, pi]
  double weight = 1.0;

  Vec3 direction() const noexcept;
};

struct OrientationSet {
  std::vector<Orientation> orientations;
  std::size_t requested = 0;
  std::size_t chosen = 0;
};

/// True for sizes the ZCW construction supports: 1 and Fibonacci numbers.
bool is_zcw_size(std::size_t n) noexcept;
std::size_t nearest_zcw_size(std::size_t n) noexcept;

/// Zaremba-Conroy-Wolfsberg full-sphere set of the admissible size nearest
/// to n, equal weights summing to one.
OrientationSet zcw_orientations(std::size_t n);

}  // namespace spindiff
