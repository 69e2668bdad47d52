#include <doctest.h>

#include <cmath>

#include "spindiff/diffusion.hpp"
#include "spindiff/errors.hpp"
#include "spindiff/oracle.hpp"
#include "spindiff/units.hpp"

using namespace spindiff;

namespace {
LatticeSumRequest small_request(double f) {
  LatticeSumRequest r;
  r.abundance = f;
  r.ensemble_size = 10;
  r.n_orientations = 21;
  r.cutoff_extent = 15;
  r.cutoff_ensemble = 20;
  return r;
}
}  // namespace

TEST_CASE("flip-flop rate") {
  const SpectralDensity p{4.92e-3, LineShapeSource::GaussianFromFwhm};
  CHECK(flip_flop_rate(0.0, p) == 0.0);
  CHECK(flip_flop_rate(29.7, p) == doctest::Approx(6.81).epsilon(2e-3));
  CHECK(flip_flop_rate(2 * 29.7, p) == doctest::Approx(4 * flip_flop_rate(29.7, p)));
}

TEST_CASE("nearest-neighbour diffusion coefficient") {
  const auto d = d_nearest_neighbor(191.0, 7.52);
  CHECK(d.value == doctest::Approx(3.6).epsilon(0.01));
  CHECK(d.method == DiffusionMethod::NearestNeighbor);
  CHECK(d_nearest_neighbor(0.0, 7.52).value == 0.0);
  CHECK(d_nearest_neighbor(1.0, 10.0).value == doctest::Approx(1.0 / 30.0 * 100.0 * 1e-2));
}

TEST_CASE("a single neighbour gives half the flip-flop rate times r squared") {
  OccupiedLattice lat{CubicStructure(LatticeKind::SimpleCubic, 3.0), 1, 1.0, 0, {{0, 0, 0}, {1.0, 2.0, 3.0}}, 0};
  const Vec3 field{0, 0, 1};
  const auto si = SpinSpecies::silicon29();
  const double sum = unrestricted_lattice_sum(lat, LatticeQuantity::LatticeSumD, field, si);
  const double d = coupling({1.0, 2.0, 3.0}, field, si, si);
  const SpectralDensity p{5e-3, LineShapeSource::GaussianFromFwhm};
  const double r2 = 14.0;
  CHECK(sum * p.p0 == doctest::Approx(0.5 * flip_flop_rate(d, p) * r2));
  CHECK(sum == doctest::Approx(units::pi / 4.0 * d * d * r2));
}

TEST_CASE("lattice sum scaling laws") {
  auto req = small_request(0.2);
  const auto w = lattice_sum_weight(req);
  CHECK(w.mean > 0.0);
  CHECK(w.n_lattices + w.n_isolated == 10);
  CHECK(w.n_orientations == 21);

  const SpectralDensity p{5e-3, LineShapeSource::GaussianFromFwhm};
  const SpectralDensity p2{1e-2, LineShapeSource::GaussianFromFwhm};
  const auto d = d_lattice_sum(w, req, p);
  CHECK(d.value == doctest::Approx(w.mean * p.p0 * units::angstrom2_to_nm2));
  CHECK(d_lattice_sum(w, req, p2).value == doctest::Approx(2 * d.value));
  CHECK(d.method == DiffusionMethod::LatticeSum);

  // Couplings scale with gamma^2, so the d^2 r^2 weight scales with gamma^4.
  req.cutoff = w.cutoff;
  auto doubled = req;
  doubled.species.gamma *= 2;
  CHECK(lattice_sum_weight(doubled).mean == doctest::Approx(16 * lattice_sum_weight(req).mean));

  auto t = req;
  t.threads = 3;
  CHECK(lattice_sum_weight(t).mean == lattice_sum_weight(req).mean);
}

TEST_CASE("abundance sweep") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  SweepConfig cfg;
  cfg.ensemble_size = 10;
  cfg.n_orientations = 21;
  cfg.extent = 15;
  cfg.experimental_fwhm = 120.0;
  const double fs[] = {0.047, 0.2, 1.0};
  const auto rows = abundance_sweep(dia, fs, cfg);
  REQUIRE(rows.size() == 3);
  double prev = 0.0;
  for (const auto& r : rows) {
    REQUIRE(r.error.empty());
    CHECK(r.lattice_sum->value > prev);
    prev = r.lattice_sum->value;
    CHECK(r.nearest_neighbor->value > 0.0);
    CHECK(r.nearest_neighbor_experimental->value ==
          doctest::Approx(d_nearest_neighbor(120.0, r.r_nn.value).value));
    CHECK(r.cutoff_d2r2 >= r.cutoff_d2);
  }
  CHECK(rows[2].r_nn.value == doctest::Approx(nn_distance(1.0, dia).value));
  CHECK(rows[0].lattice_sum->value > rows[0].nearest_neighbor->value);

  const auto t = sweep_table(dia, rows);
  CHECK(t.rows.size() == 9);
  CHECK(t.columns.front() == "structure");
}

TEST_CASE("failing abundances are recorded without stopping the sweep") {
  const CubicStructure sc(LatticeKind::SimpleCubic, 5.431);
  SweepConfig cfg;
  cfg.ensemble_size = 2;
  cfg.n_orientations = 1;
  cfg.extent = 4;
  const double fs[] = {0.005, 0.5};
  const auto rows = abundance_sweep(sc, fs, cfg);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].error.empty());
  CHECK(rows[1].error.empty());
  const auto t = sweep_table(sc, rows);
  CHECK(t.rows[0].back() != "");
}
