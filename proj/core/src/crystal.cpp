#include "spindiff/crystal.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "spindiff/errors.hpp"
#include "spindiff/units.hpp"

namespace spindiff {
namespace {

constexpr std::array<Vec3, 1> kSimpleCubicBasis{{{0.0, 0.0, 0.0}}};
constexpr std::array<Vec3, 2> kBccBasis{{{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}}};
constexpr std::array<Vec3, 4> kFccBasis{{
    {0.0, 0.0, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}}};
constexpr std::array<Vec3, 8> kDiamondBasis{{{0.0, 0.0, 0.0},
                                              {0.0, 0.5, 0.5},
                                              {0.5, 0.0, 0.5},
                                              {0.5, 0.5, 0.0},
                                              {0.25, 0.25, 0.25},
                                              {0.25, 0.75, 0.75},
                                              {0.75, 0.25, 0.75},
                                              {0.75, 0.75, 0.25}}};

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_extent(int extent) {
  require(extent >= 0, ErrorKind::Domain, "lattice extent must be >= 0");
  require(extent < 16384, ErrorKind::ResourceLimit,
          "lattice extent " + std::to_string(extent) + " exceeds the key range");
}

template <class Visit>
void for_each_position(const CubicStructure& s, int extent, Visit&& visit) {
  const double a = s.lattice_constant();
  const auto basis = s.basis();
  for (int ix = -extent; ix <= extent; ++ix)
    for (int iy = -extent; iy <= extent; ++iy)
      for (int iz = -extent; iz <= extent; ++iz)
        for (std::size_t b = 0; b < basis.size(); ++b) {
          const Vec3 p{(ix + basis[b].x) * a, (iy + basis[b].y) * a,
                       (iz + basis[b].z) * a};
          visit(p, site_key(ix, iy, iz, static_cast<int>(b)));
        }
}


}  // namespace

std::string_view to_string(LatticeKind kind) noexcept {
  switch (kind) {
    case LatticeKind::SimpleCubic: return "simple_cubic";
    case LatticeKind::BodyCentered: return "bcc";
    case LatticeKind::FaceCentered: return "fcc";
    case LatticeKind::Diamond: return "diamond";
  }
  return "unknown";
}

std::optional<LatticeKind> parse_lattice_kind(std::string_view name) noexcept {
  if (name == "simple_cubic" || name == "sc") return LatticeKind::SimpleCubic;
  if (name == "bcc") return LatticeKind::BodyCentered;
  if (name == "fcc") return LatticeKind::FaceCentered;
  if (name == "diamond" || name == "diamond_cubic") return LatticeKind::Diamond;
  return std::nullopt;
}

CubicStructure::CubicStructure(LatticeKind kind, double lattice_constant)
    : kind_(kind), a_(lattice_constant) {
  require(lattice_constant > 0.0 && std::isfinite(lattice_constant),
          ErrorKind::Domain, "lattice constant must be positive");
}

std::span<const Vec3> CubicStructure::basis() const noexcept {
  switch (kind_) {
    case LatticeKind::SimpleCubic: return kSimpleCubicBasis;
    case LatticeKind::BodyCentered: return kBccBasis;
    case LatticeKind::FaceCentered: return kFccBasis;
    case LatticeKind::Diamond: return kDiamondBasis;
  }
  return kSimpleCubicBasis;
}

double CubicStructure::min_site_distance() const noexcept {
  switch (kind_) {
    case LatticeKind::SimpleCubic: return a_;
    case LatticeKind::BodyCentered: return a_ * std::sqrt(3.0) / 2.0;
    case LatticeKind::FaceCentered: return a_ / std::sqrt(2.0);
    case LatticeKind::Diamond: return a_ * std::sqrt(3.0) / 4.0;
  }
  return a_;
}

double CubicStructure::site_density() const noexcept {
  return static_cast<double>(basis_size()) / (a_ * a_ * a_);
}

std::size_t lattice_position_count(const CubicStructure& structure,
                                   int extent) noexcept {
  const auto side = static_cast<std::size_t>(2 * std::max(extent, 0) + 1);
  return side * side * side * structure.basis_size();
}

std::vector<Vec3> build_lattice(const CubicStructure& structure, int extent,
                                std::size_t site_budget) {
  check_extent(extent);
  const std::size_t count = lattice_position_count(structure, extent);
  require(count <= site_budget, ErrorKind::ResourceLimit,
          "lattice of extent " + std::to_string(extent) + " has " +
              std::to_string(count) + " positions, budget is " +
              std::to_string(site_budget));
  std::vector<Vec3> positions;
  positions.reserve(count);
  for_each_position(structure, extent,
                    [&](const Vec3& p, std::uint64_t) { positions.push_back(p); });
  return positions;
}

std::uint64_t site_key(int ix, int iy, int iz, int basis_index) noexcept {
  const auto u = [](int v) {
    return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v + 32768) & 0xFFFFu);
  };
  return (u(ix) << 35) | (u(iy) << 19) | (u(iz) << 3) |
         static_cast<std::uint64_t>(basis_index & 7);
}

std::uint64_t member_seed(std::uint64_t base_seed, std::size_t member,
                          double abundance) noexcept {
  const auto fbits = std::bit_cast<std::uint64_t>(abundance);
  return mix64(base_seed ^ mix64(static_cast<std::uint64_t>(member) * kGolden + 1) ^
               mix64(fbits + 2 * kGolden));
}

Occupation::Occupation(double abundance, std::uint64_t seed)
    : abundance_(abundance), seed_(seed), threshold_(0), always_(false) {
  require(abundance > 0.0 && abundance <= 1.0, ErrorKind::Domain,
          "abundance must lie in (0, 1]");
  if (abundance >= 1.0) {
    always_ = true;
  } else {
    threshold_ = static_cast<std::uint64_t>(std::ldexp(abundance, 64));
  }
}

bool Occupation::occupied(std::uint64_t key) const noexcept {
  if (always_) return true;
  return mix64(seed_ ^ mix64(key + kGolden)) < threshold_;
}

OccupiedLattice occupy(const CubicStructure& structure, int extent,
                       std::span<const Vec3> positions, double abundance,
                       std::uint64_t seed) {
  check_extent(extent);
  require(positions.size() == lattice_position_count(structure, extent),
          ErrorKind::Domain, "position list does not match structure/extent");
  const Occupation rule(abundance, seed);
  OccupiedLattice lattice{structure, extent, abundance, seed, {}, 0};
  lattice.sites.reserve(static_cast<std::size_t>(
      static_cast<double>(positions.size()) * abundance * 1.05 + 16));
  std::size_t index = 0;
  for_each_position(structure, extent, [&](const Vec3&, std::uint64_t key) {
    const Vec3& p = positions[index++];
    const bool central = key == site_key(0, 0, 0, 0);
    if (central) {
      lattice.central_index = lattice.sites.size();
      lattice.sites.push_back(p);
    } else if (rule.occupied(key)) {
      lattice.sites.push_back(p);
    }
  });
  return lattice;
}

OccupiedLattice occupy(const CubicStructure& structure, int extent,
                       double abundance, std::uint64_t seed,
                       std::size_t site_budget) {
  const auto positions = build_lattice(structure, extent, site_budget);
  return occupy(structure, extent, positions, abundance, seed);
}

SiteTemplate SiteTemplate::sphere(const CubicStructure& structure, double radius,
                                  std::size_t site_budget) {
  require(radius >= 0.0 && std::isfinite(radius), ErrorKind::Domain,
          "template radius must be finite and >= 0");
  const int extent =
      static_cast<int>(std::ceil(radius / structure.lattice_constant())) + 1;
  check_extent(extent);
  require(lattice_position_count(structure, extent) <= site_budget,
          ErrorKind::ResourceLimit, "neighbour template exceeds the site budget");
  SiteTemplate t;
  const double r2max = radius * radius * (1.0 + 1e-12);
  for_each_position(structure, extent, [&](const Vec3& p, std::uint64_t key) {
    const double r2 = norm2(p);
    if (r2 > 0.0 && r2 <= r2max) t.sites_.push_back({p, std::sqrt(r2), key});
  });
  std::sort(t.sites_.begin(), t.sites_.end(), [](const auto& l, const auto& r) {
    return l.distance < r.distance || (l.distance == r.distance && l.key < r.key);
  });
  return t;
}

SiteTemplate SiteTemplate::box(const CubicStructure& structure, int extent,
                               std::size_t site_budget) {
  check_extent(extent);
  require(lattice_position_count(structure, extent) <= site_budget,
          ErrorKind::ResourceLimit, "box template exceeds the site budget");
  SiteTemplate t;
  t.sites_.reserve(lattice_position_count(structure, extent));
  for_each_position(structure, extent, [&](const Vec3& p, std::uint64_t key) {
    const double r2 = norm2(p);
    if (r2 > 0.0) t.sites_.push_back({p, std::sqrt(r2), key});
  });
  std::sort(t.sites_.begin(), t.sites_.end(), [](const auto& l, const auto& r) {
    return l.distance < r.distance || (l.distance == r.distance && l.key < r.key);
  });
  return t;
}

std::size_t SiteTemplate::count_within(double radius) const noexcept {
  const double limit = radius * (1.0 + 1e-12);
  const auto it = std::upper_bound(
      sites_.begin(), sites_.end(), limit,
      [](double r, const TemplateSite& s) { return r < s.distance; });
  return static_cast<std::size_t>(it - sites_.begin());
}

NearestNeighborDistance nn_distance(double abundance,
                                    const CubicStructure& structure,
                                    bool poisson_correction) {
  require(abundance > 0.0 && abundance <= 1.0, ErrorKind::Domain,
          "abundance must lie in (0, 1]");
  NearestNeighborDistance out;
  out.uncorrected = std::cbrt(1.0 / (abundance * structure.site_density()));
  out.value = poisson_correction ? kPoissonNnFactor * out.uncorrected
                                 : out.uncorrected;
  const double floor = structure.min_site_distance();
  if (out.value < floor) {
    out.value = floor;
    out.clamped = true;
  }
  return out;
}

Vec3 Orientation::direction() const noexcept {
  const double sb = std::sin(beta);
  return {sb * std::cos(alpha), sb * std::sin(alpha), std::cos(beta)};
}

namespace {

// Fibonacci numbers F_1 = 1, F_2 = 1, F_3 = 2, ... up to the first > limit.
std::vector<std::size_t> fibonacci_upto(std::size_t limit) {
  std::vector<std::size_t> f{1, 1};
  while (f.back() <= limit) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
  return f;
}

}  // namespace

bool is_zcw_size(std::size_t n) noexcept {
  if (n == 0) return false;
  const auto fib = fibonacci_upto(n);
  return std::find(fib.begin(), fib.end(), n) != fib.end();
}

std::size_t nearest_zcw_size(std::size_t n) noexcept {
  if (n <= 1) return 1;
  const auto fib = fibonacci_upto(n);
  std::size_t best = 1;
  for (const std::size_t v : fib) {
    const auto dist = [n](std::size_t x) { return x > n ? x - n : n - x; };
    if (dist(v) < dist(best) || (dist(v) == dist(best) && v > best)) best = v;
  }
  return best;
}

OrientationSet zcw_orientations(std::size_t n) {
  OrientationSet set;
  set.requested = n;
  set.chosen = nearest_zcw_size(n);
  const std::size_t count = set.chosen;
  set.orientations.reserve(count);
  if (count == 1) {
    set.orientations.push_back({0.0, 0.0, 1.0});
    return set;
  }
  // count = F_k; the generator is F_{k-2}.
  const auto fib = fibonacci_upto(count);
  const auto pos = std::find(fib.begin(), fib.end(), count) - fib.begin();
  const std::size_t generator = fib[static_cast<std::size_t>(pos) - 2];
  const double weight = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(count);
    const double v = static_cast<double>((j * generator) % count) /
                     static_cast<double>(count);
    const double beta = std::acos(std::clamp(2.0 * u - 1.0, -1.0, 1.0));
    const double alpha = units::two_pi * v;
    set.orientations.push_back({alpha, beta, weight});
  }
  return set;
}

}  // namespace spindiff
