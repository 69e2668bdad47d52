#include "spindiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "spindiff/errors.hpp"
#include "spindiff/parallel.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

std::string_view to_string(DiffusionMethod m) noexcept {
  return m == DiffusionMethod::NearestNeighbor ? "nearest_neighbor" : "lattice_sum";
}

double flip_flop_rate(double d_hz, const SpectralDensity& p0) {
  require(p0.p0 > 0.0, ErrorKind::Domain, "p0 must be positive");
  return 0.5 * units::pi * d_hz * d_hz * p0.p0;
}

DiffusionCoefficient d_nearest_neighbor(double fwhm_hz, double r_nn_angstrom) {
  require(fwhm_hz >= 0.0 && r_nn_angstrom > 0.0, ErrorKind::Domain,
          "nearest-neighbour estimate needs fwhm >= 0 and r_nn > 0");
  DiffusionCoefficient d;
  d.value = fwhm_hz / 30.0 * r_nn_angstrom * r_nn_angstrom * units::angstrom2_to_nm2;
  d.method = DiffusionMethod::NearestNeighbor;
  d.cutoff = r_nn_angstrom;
  return d;
}

namespace {

double resolve_cutoff(const LatticeSumRequest& request) {
  if (request.cutoff) return *request.cutoff;
  CutoffRequest cr;
  cr.structure = request.structure;
  cr.abundance = request.abundance;
  cr.weight_kind = WeightKind::DSquaredRSquared;
  cr.ensemble_size = request.cutoff_ensemble;
  cr.threshold = request.threshold;
  cr.extent = request.cutoff_extent;
  cr.seed = request.seed;
  cr.threads = request.threads;
  return cutoff_radius(cr).radius;
}

}  // namespace

LatticeSumWeight lattice_sum_weight(const LatticeSumRequest& request) {
  require(request.ensemble_size >= 1, ErrorKind::Domain, "ensemble size must be >= 1");
  require(request.abundance > 0.0 && request.abundance <= 1.0, ErrorKind::Domain,
          "abundance must lie in (0, 1]");
  const double radius = resolve_cutoff(request);
  require(radius > 0.0, ErrorKind::Domain, "cut-off must be positive");
  const double tol = 1e-9 * request.structure.lattice_constant();
  const auto sphere = SiteTemplate::sphere(request.structure, radius + tol);
  const auto orient = zcw_orientations(request.n_orientations);
  const double c = std::abs(coupling_prefactor(request.species, request.species));
  const std::size_t nl = request.ensemble_size;

  std::vector<double> per_lattice(nl, 0.0);
  std::vector<char> isolated(nl, 0);
  parallel_for(nl, request.threads, [&](std::size_t m) {
    const Occupation rule(request.abundance,
                          member_seed(request.seed, m, request.abundance));
    std::vector<Vec3> dir;
    std::vector<double> amp2;  // (pi/4) (C/r^3)^2 r^2
    for (const auto& s : sphere.sites()) {
      if (!rule.occupied(s.key)) continue;
      dir.push_back(s.position * (1.0 / s.distance));
      const double a = c / (s.distance * s.distance * s.distance);
      amp2.push_back(0.25 * units::pi * a * a * s.distance * s.distance);
    }
    if (dir.empty()) {
      isolated[m] = 1;
      return;
    }
    double acc = 0.0;
    for (const auto& o : orient.orientations) {
      const Vec3 u = o.direction();
      double s = 0.0;
      for (std::size_t k = 0; k < dir.size(); ++k) {
        const double g = angular_factor(dot(dir[k], u));
        s += amp2[k] * g * g;
      }
      acc += o.weight * s;
    }
    per_lattice[m] = acc;
  });

  LatticeSumWeight w;
  w.cutoff = radius;
  w.n_orientations = orient.orientations.size();
  w.n_lattices = nl;
  w.n_isolated = static_cast<std::size_t>(std::count(isolated.begin(), isolated.end(), 1));
  w.mean = std::accumulate(per_lattice.begin(), per_lattice.end(), 0.0) / nl;
  double ss = 0.0;
  for (const double v : per_lattice) ss += (v - w.mean) * (v - w.mean);
  w.std_lattice = nl > 1 ? std::sqrt(ss / (nl - 1)) : 0.0;
  return w;
}

DiffusionCoefficient d_lattice_sum(const LatticeSumWeight& weight,
                                   const LatticeSumRequest& request,
                                   const SpectralDensity& p0) {
  require(p0.p0 > 0.0, ErrorKind::Domain, "p0 must be positive");
  DiffusionCoefficient d;
  d.value = weight.mean * p0.p0 * units::angstrom2_to_nm2;
  d.method = DiffusionMethod::LatticeSum;
  d.structure = request.structure.kind();
  d.abundance = request.abundance;
  d.p0 = p0;
  d.cutoff = weight.cutoff;
  d.seed = request.seed;
  d.n_lattices = weight.n_lattices;
  d.n_orientations = weight.n_orientations;
  d.isolated = weight.n_isolated == weight.n_lattices;
  return d;
}

DiffusionCoefficient d_lattice_sum(const LatticeSumRequest& request,
                                   const SpectralDensity& p0) {
  return d_lattice_sum(lattice_sum_weight(request), request, p0);
}

std::vector<SweepRow> abundance_sweep(const CubicStructure& structure,
                                      std::span<const double> abundances,
                                      const SweepConfig& config) {
  require(!abundances.empty(), ErrorKind::Domain, "abundance list is empty");
  const auto grid = default_abundance_grid();
  std::optional<SiteTemplate> box;
  std::map<std::pair<double, int>, double> cache;

  auto grid_cutoff = [&](double f, WeightKind kind) {
    double best = grid.front();
    for (const double g : grid) {
      if (std::abs(std::log(g / f)) < std::abs(std::log(best / f))) best = g;
    }
    const auto key = std::pair{best, static_cast<int>(kind)};
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    if (!box) box = SiteTemplate::box(structure, config.extent);
    CutoffRequest cr;
    cr.structure = structure;
    cr.abundance = best;
    cr.weight_kind = kind;
    cr.ensemble_size = config.ensemble_size;
    cr.threshold = config.threshold;
    cr.extent = config.extent;
    cr.seed = config.seed;
    cr.threads = config.threads;
    const double r = cutoff_radius(cr, *box).radius;
    cache.emplace(key, r);
    return r;
  };

  std::vector<SweepRow> rows;
  for (const double f : abundances) {
    SweepRow row;
    row.abundance = f;
    try {
      require(f > 0.0 && f <= 1.0, ErrorKind::Domain, "abundance must lie in (0, 1]");
      row.cutoff_d2 = grid_cutoff(f, WeightKind::DSquared);
      row.cutoff_d2r2 = grid_cutoff(f, WeightKind::DSquaredRSquared);

      LinewidthRequest lr;
      lr.structure = structure;
      lr.species = config.species;
      lr.abundance = f;
      lr.ensemble_size = config.ensemble_size;
      lr.n_orientations = config.n_orientations;
      lr.seed = config.seed;
      lr.cutoff = row.cutoff_d2;
      lr.options = config.linewidth;
      lr.threads = config.threads;
      row.line = powder_linewidths(lr);

      row.r_nn = nn_distance(f, structure, config.poisson_correction);
      auto nn = d_nearest_neighbor(row.line->fwhm_zq, row.r_nn.value);
      nn.structure = structure.kind();
      nn.abundance = f;
      nn.p0 = p_zero(*row.line);
      nn.seed = config.seed;
      nn.n_lattices = row.line->n_lattices;
      nn.n_orientations = row.line->n_orientations;
      row.nearest_neighbor = nn;
      if (config.experimental_fwhm) {
        auto ex = d_nearest_neighbor(*config.experimental_fwhm, row.r_nn.value);
        ex.structure = structure.kind();
        ex.abundance = f;
        ex.p0 = p_zero(*config.experimental_fwhm);
        row.nearest_neighbor_experimental = ex;
      }

      LatticeSumRequest sr;
      sr.structure = structure;
      sr.species = config.species;
      sr.abundance = f;
      sr.ensemble_size = config.ensemble_size;
      sr.n_orientations = config.n_orientations;
      sr.seed = config.seed;
      sr.cutoff = row.cutoff_d2r2;
      sr.threads = config.threads;
      row.weight = lattice_sum_weight(sr);
      const SpectralDensity p0 = config.p0_override.value_or(p_zero(*row.line));
      row.lattice_sum = d_lattice_sum(*row.weight, sr, p0);
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable sweep_table(const CubicStructure& structure, std::span<const SweepRow> rows) {
  CsvTable t;
  t.columns = {"structure", "abundance_percent", "method", "D_nm2_per_s", "fwhm_zq_hz",
               "fwhm_sq_hz", "p0_s", "cutoff_angstrom", "seed", "error"};
  const std::string name(to_string(structure.kind()));
  for (const auto& r : rows) {
    const std::string pct = format_number(r.abundance * 100.0);
    if (!r.error.empty()) {
      t.rows.push_back({name, pct, "", "", "", "", "", "", "", r.error});
      continue;
    }
    const std::string zq = format_number(r.line->fwhm_zq);
    const std::string sq = format_number(r.line->fwhm_sq);
    auto emit = [&](const DiffusionCoefficient& d, std::string method) {
      t.rows.push_back({name, pct, std::move(method), format_number(d.value), zq, sq,
                        format_number(d.p0.p0), format_number(d.cutoff),
                        std::to_string(r.line->seed), ""});
    };
    emit(*r.nearest_neighbor, "nearest_neighbor");
    if (r.nearest_neighbor_experimental) {
      emit(*r.nearest_neighbor_experimental, "nearest_neighbor_experimental");
    }
    emit(*r.lattice_sum, "lattice_sum");
  }
  return t;
}

}  // namespace spindiff
