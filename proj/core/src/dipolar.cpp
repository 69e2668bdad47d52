#include "spindiff/dipolar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "spindiff/errors.hpp"
#include "spindiff/parallel.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

SpinSpecies SpinSpecies::silicon29() { return {units::gamma_si29}; }
SpinSpecies SpinSpecies::reference() { return {units::gamma_reference}; }

double coupling_prefactor(const SpinSpecies& i, const SpinSpecies& j) {
  require(i.gamma != 0.0 && j.gamma != 0.0, ErrorKind::Domain,
          "gyromagnetic ratio must be non-zero");
  const double r3 = units::angstrom * units::angstrom * units::angstrom;
  return units::mu0_over_4pi * units::hbar * i.gamma * j.gamma / r3 /
         units::two_pi;
}

double coupling(const Vec3& displacement, const Vec3& field_dir,
                const SpinSpecies& i, const SpinSpecies& j) {
  const double r2 = norm2(displacement);
  require(r2 > 0.0, ErrorKind::Domain, "coupling of coincident spins");
  const double f2 = norm2(field_dir);
  require(f2 > 0.0, ErrorKind::Domain, "field direction has zero length");
  const double r = std::sqrt(r2);
  const double c = dot(displacement, field_dir) / (r * std::sqrt(f2));
  return coupling_prefactor(i, j) / (r2 * r) * angular_factor(c);
}

std::string_view to_string(WeightKind kind) noexcept {
  return kind == WeightKind::DSquared ? "d2" : "d2r2";
}

std::optional<WeightKind> parse_weight_kind(std::string_view name) noexcept {
  if (name == "d2") return WeightKind::DSquared;
  if (name == "d2r2") return WeightKind::DSquaredRSquared;
  return std::nullopt;
}

namespace {

// Geometric weight without the species prefactor, which cancels in every
// normalised quantity of this module.
inline double weight(WeightKind kind, double r, double cos_theta) {
  const double g = angular_factor(cos_theta) / (r * r * r);
  return kind == WeightKind::DSquared ? g * g : g * g * r * r;
}

Vec3 unit_or_z(const std::optional<Vec3>& dir) {
  Vec3 u = dir.value_or(Vec3{0.0, 0.0, 1.0});
  const double n = norm(u);
  require(n > 0.0, ErrorKind::Domain, "field direction has zero length");
  return u * (1.0 / n);
}

}  // namespace

std::vector<ProfilePoint> cumulative_profile(const OccupiedLattice& lattice,
                                             WeightKind kind,
                                             const Vec3& field_dir) {
  require(lattice.sites.size() >= 2, ErrorKind::EmptyProfile,
          "cumulative profile needs at least two occupied sites");
  const Vec3 u = unit_or_z(field_dir);
  const Vec3 center = lattice.sites[lattice.central_index];
  struct Entry {
    double r;
    double w;
  };
  std::vector<Entry> entries;
  entries.reserve(lattice.sites.size() - 1);
  for (std::size_t i = 0; i < lattice.sites.size(); ++i) {
    if (i == lattice.central_index) continue;
    const Vec3 d = lattice.sites[i] - center;
    const double r = norm(d);
    entries.push_back({r, weight(kind, r, dot(d, u) / r)});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.r < b.r; });
  double total = 0.0;
  for (const auto& e : entries) total += e.w;
  require(total > 0.0, ErrorKind::EmptyProfile, "total coupling weight is zero");
  std::vector<ProfilePoint> profile;
  profile.reserve(entries.size() + 1);
  profile.push_back({0.0, 0.0});
  double running = 0.0;
  for (const auto& e : entries) {
    running += e.w;
    profile.push_back({e.r, running / total});
  }
  profile.back().fraction = 1.0;
  return profile;
}

CouplingCutoff cutoff_radius(const CutoffRequest& request) {
  const auto box = SiteTemplate::box(request.structure, request.extent);
  return cutoff_radius(request, box);
}

CouplingCutoff cutoff_radius(const CutoffRequest& request,
                             const SiteTemplate& box) {
  require(request.threshold > 0.0 && request.threshold <= 1.0, ErrorKind::Domain,
          "cut-off threshold must lie in (0, 1]");
  require(request.ensemble_size >= 1, ErrorKind::Domain,
          "cut-off ensemble needs at least one lattice");
  require(request.abundance > 0.0 && request.abundance <= 1.0, ErrorKind::Domain,
          "abundance must lie in (0, 1]");
  const Vec3 u = unit_or_z(request.field_dir);
  const auto sites = box.sites();

  // Shell boundaries: indices where the distance changes.
  std::vector<std::size_t> shell_end;
  std::vector<double> shell_radius;
  const double tol = 1e-9 * request.structure.lattice_constant();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i + 1 == sites.size() || sites[i + 1].distance - sites[i].distance > tol) {
      shell_end.push_back(i + 1);
      shell_radius.push_back(sites[i].distance);
    }
  }

  std::vector<double> weights(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    weights[i] = weight(request.weight_kind, sites[i].distance,
                        dot(sites[i].position, u) / sites[i].distance);
  }

  const std::size_t members = request.ensemble_size;
  std::vector<std::vector<double>> member_profiles(members);
  std::vector<char> member_ok(members, 0);
  parallel_for(members, request.threads, [&](std::size_t m) {
    const Occupation rule(request.abundance,
                          member_seed(request.seed, m, request.abundance));
    std::vector<double> cum(shell_end.size());
    double running = 0.0;
    std::size_t shell = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (rule.occupied(sites[i].key)) running += weights[i];
      if (i + 1 == shell_end[shell]) cum[shell++] = running;
    }
    if (running <= 0.0) return;
    for (double& c : cum) c /= running;
    cum.back() = 1.0;
    member_profiles[m] = std::move(cum);
    member_ok[m] = 1;
  });

  std::vector<double> mean(shell_end.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t m = 0; m < members; ++m) {
    if (!member_ok[m]) continue;
    ++used;
    for (std::size_t s = 0; s < mean.size(); ++s) mean[s] += member_profiles[m][s];
  }
  require(used > 0, ErrorKind::EmptyProfile,
          "no ensemble member has a spin besides the central one");
  for (double& v : mean) v /= static_cast<double>(used);

  const double inscribed =
      request.extent * request.structure.lattice_constant() * (1.0 + 1e-12);
  for (std::size_t s = 0; s < mean.size(); ++s) {
    if (shell_radius[s] > inscribed) break;
    if (mean[s] >= request.threshold) {
      return {request.weight_kind, request.threshold, shell_radius[s], mean[s], used};
    }
  }
  fail(ErrorKind::BoxTooSmall,
       "threshold " + std::to_string(request.threshold) + " for " +
           std::string(to_string(request.weight_kind)) + " at abundance " +
           std::to_string(request.abundance) +
           " is not reached inside the inscribed sphere of radius " +
           std::to_string(request.extent * request.structure.lattice_constant()) +
           " A");
}

std::span<const double> default_abundance_grid() noexcept {
  static constexpr std::array<double, 10> grid{0.005, 0.01, 0.02, 0.047, 0.10,
                                               0.20,  0.30, 0.50, 0.75,  1.00};
  return grid;
}

void CutoffTable::add(CutoffTableRow row) { rows_.push_back(row); }

const CutoffTableRow& CutoffTable::lookup(double abundance, WeightKind kind) const {
  require(abundance > 0.0, ErrorKind::Domain, "abundance must be positive");
  const CutoffTableRow* best = nullptr;
  double best_dist = 0.0;
  for (const auto& row : rows_) {
    if (row.cutoff.weight_kind != kind) continue;
    const double dist = std::abs(std::log(row.abundance / abundance));
    if (!best || dist < best_dist) {
      best = &row;
      best_dist = dist;
    }
  }
  require(best != nullptr, ErrorKind::Domain,
          "cut-off table has no entry for weight " + std::string(to_string(kind)));
  return *best;
}

CutoffTable build_cutoff_table(const CubicStructure& structure,
                               std::span<const double> abundances,
                               const CutoffRequest& base) {
  const auto box = SiteTemplate::box(structure, base.extent);
  CutoffTable table;
  for (const double f : abundances) {
    for (const WeightKind kind : {WeightKind::DSquared, WeightKind::DSquaredRSquared}) {
      CutoffRequest req = base;
      req.structure = structure;
      req.abundance = f;
      req.weight_kind = kind;
      table.add({structure.kind(), f, cutoff_radius(req, box)});
    }
  }
  return table;
}

}  // namespace spindiff

namespace spindiff {

CsvTable cutoff_csv(const CutoffTable& table) {
  CsvTable t;
  t.columns = {"structure", "abundance_percent", "weight_kind", "threshold",
               "radius_angstrom", "contained_fraction"};
  for (const auto& row : table.rows()) {
    t.rows.push_back({std::string(to_string(row.structure)),
                      format_number(row.abundance * 100.0),
                      std::string(to_string(row.cutoff.weight_kind)),
                      format_number(row.cutoff.threshold),
                      format_number(row.cutoff.radius),
                      format_number(row.cutoff.contained_fraction)});
  }
  return t;
}

}  // namespace spindiff
