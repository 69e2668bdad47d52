#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spindiff/crystal.hpp"
#include "spindiff/dipolar.hpp"
#include "spindiff/errors.hpp"
#include "spindiff/oracle.hpp"
#include "spindiff/particle.hpp"

using namespace spindiff;

TEST_CASE("calibration of the zz Hamiltonian") {
  const auto c = calibrate_moments(200, 1, HamiltonianTerms::ZZ);
  CHECK(c.coefficients.sq == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c.coefficients.zq == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(c.coefficients.zq_flipflop) < 1e-10);
  CHECK(std::abs(c.coefficients.zq_pair) < 1e-10);
  CHECK(c.max_relative_residual < 1e-10);
  CHECK(c.coefficient_spread < 1e-8);
  CHECK(c.n_systems == 200);
}

TEST_CASE("calibration of the full secular Hamiltonian") {
  const auto c = calibrate_moments(200, 1, HamiltonianTerms::FullSecular);
  CHECK(c.coefficients.sq == doctest::Approx(1.25).epsilon(1e-10));
  CHECK(c.coefficients.zq == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c.coefficients.zq_flipflop == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(c.coefficients.zq_pair == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(c.max_relative_residual < 1e-10);
}

TEST_CASE("diagonalisation agrees with commutator moments") {
  for (const auto terms : {HamiltonianTerms::ZZ, HamiltonianTerms::FullSecular}) {
    for (const auto& s : random_systems(10, 4, 8.0, 2.35, 7)) {
      const auto e = exact_transition_moments(s, terms);
      const auto c = commutator_moments(s, terms);
      CHECK(e.m2_sq == doctest::Approx(c.m2_sq).epsilon(1e-10));
      CHECK(e.m2_zq == doctest::Approx(c.m2_zq).epsilon(1e-10));
    }
  }
}

TEST_CASE("moments ignore the order of background spins") {
  auto s = random_systems(1, 4, 8.0, 2.35, 3).front();
  const auto a = exact_transition_moments(s, HamiltonianTerms::FullSecular);
  std::swap(s.positions[2], s.positions[3]);
  const auto b = exact_transition_moments(s, HamiltonianTerms::FullSecular);
  CHECK(a.m2_sq == doctest::Approx(b.m2_sq).epsilon(1e-12));
  CHECK(a.m2_zq == doctest::Approx(b.m2_zq).epsilon(1e-12));
}

TEST_CASE("two-spin zz system by hand") {
  SmallSpinSystem s;
  s.positions = {{0, 0, 0}, {0, 0, 3}};
  const double d = coupling({0, 0, 3}, s.field_dir, s.species, s.species);
  const auto m = exact_transition_moments(s, HamiltonianTerms::ZZ);
  CHECK(m.m2_sq == doctest::Approx(d * d));
  CHECK(m.m2_zq == doctest::Approx(0.0));
  const auto f = moment_features(s);
  CHECK(f.sq == doctest::Approx(d * d));
  CHECK(f.zq_pair == doctest::Approx(d * d));
}

TEST_CASE("system size limits") {
  SmallSpinSystem s;
  s.positions = {{0, 0, 0}};
  CHECK_THROWS_AS((void)exact_transition_moments(s), Error);
  s.positions = {{0, 0, 0}, {0, 0, 3}, {0, 3, 0}, {3, 0, 0}, {3, 3, 3}};
  CHECK_THROWS_AS((void)exact_transition_moments(s), Error);
  s.positions = {{0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS((void)exact_transition_moments(s), Error);
}

TEST_CASE("random systems respect the minimum distance") {
  for (const auto& s : random_systems(20, 4, 8.0, 2.35, 11)) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) CHECK(norm(s.positions[i] - s.positions[j]) >= 2.35);
    }
  }
}

TEST_CASE("unrestricted lattice sums") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  const Vec3 z{0, 0, 1};
  const auto origin = occupy(CubicStructure(LatticeKind::SimpleCubic, 5.431), 0, 1.0, 1);
  CHECK(unrestricted_lattice_sum(origin, LatticeQuantity::DSquared, z) == doctest::Approx(0.0));

  const auto l4 = occupy(dia, 4, 1.0, 1);
  CHECK(unrestricted_lattice_sum(l4, LatticeQuantity::DSquared, z) ==
        doctest::Approx(26157.744158291523).epsilon(1e-12));
  CHECK(unrestricted_lattice_sum(l4, LatticeQuantity::DSquaredRSquared, z) ==
        doctest::Approx(778181.15793497057).epsilon(1e-12));
  CHECK(unrestricted_lattice_sum(l4, LatticeQuantity::LatticeSumD, z) ==
        doctest::Approx(M_PI / 4 * 778181.15793497057).epsilon(1e-12));

  const auto big = occupy(dia, 9, 0.01, 1);
  CHECK_THROWS_AS((void)unrestricted_lattice_sum(big, LatticeQuantity::DSquared, z), Error);
}

TEST_CASE("the coupling cut-off keeps most of the lattice sum") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  CutoffRequest cr;
  cr.structure = dia;
  cr.abundance = 0.3;
  cr.weight_kind = WeightKind::DSquaredRSquared;
  cr.ensemble_size = 20;
  cr.extent = 8;
  const double rc = cutoff_radius(cr).radius;
  double full = 0.0, kept = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto lat = occupy(dia, 8, 0.3, seed);
    for (const Vec3 u : {Vec3{0, 0, 1}, Vec3{1, 1, 1} * (1 / std::sqrt(3.0))}) {
      full += unrestricted_lattice_sum(lat, LatticeQuantity::DSquaredRSquared, u);
      kept += restricted_lattice_sum(lat, LatticeQuantity::DSquaredRSquared, u, rc);
    }
  }
  CHECK(kept / full >= 0.9);
  CHECK(kept <= full);
}

TEST_CASE("closed forms") {
  ParticleGeometry g;
  const double t[] = {0.0, 3600.0, 7200.0};
  const auto u = closed_form_trace(ClosedFormCase::UniformT1Decay, {g, 2.0, 2.0, 0.5}, t);
  CHECK(u.values[0] == doctest::Approx(0.5));
  CHECK(u.values[2] == doctest::Approx(0.5 * std::exp(-1.0)));

  const auto two = closed_form_trace(ClosedFormCase::TwoCompartmentDecay, {g, 1.0, 0.5, 1.0}, t);
  const double phi = 1.0 - std::pow(0.7, 3);
  CHECK(two.values[1] == doctest::Approx((1 - phi) * std::exp(-1.0) + phi * std::exp(-2.0)).epsilon(1e-3));

  const double inf = std::numeric_limits<double>::infinity();
  const auto b = closed_form_trace(ClosedFormCase::ClampedShellBuildup, {g, inf, inf, 1.0}, t, 3.6);
  CHECK(b.values[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.values[0] == doctest::Approx(phi).epsilon(1e-2));
}
