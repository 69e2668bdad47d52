#include <doctest.h>

#include <cmath>

#include "spindiff/dipolar.hpp"
#include "spindiff/errors.hpp"

using namespace spindiff;

namespace {
const SpinSpecies si = SpinSpecies::silicon29();
const Vec3 z{0, 0, 1};

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Domain;
}
}  // namespace

TEST_CASE("secular coupling") {
  const double magic = std::acos(1.0 / std::sqrt(3.0));
  const Vec3 r_magic{5.0 * std::sin(magic), 0.0, 5.0 * std::cos(magic)};
  CHECK(std::abs(coupling(r_magic, z, si, si)) < 1e-12);

  const double d0 = coupling({0, 0, 5.43}, z, si, si);
  CHECK(d0 == doctest::Approx(29.7).epsilon(0.003));
  CHECK(coupling({5.43, 0, 0}, z, si, si) == doctest::Approx(-0.5 * d0));
  CHECK(coupling({0, 0, 5.43}, {0, 0, 7}, si, si) == doctest::Approx(d0));
  CHECK(coupling({0, 0, 2 * 5.43}, z, si, si) == doctest::Approx(d0 / 8));

  CHECK(coupling_prefactor(si, si) == doctest::Approx(4748.5).epsilon(1e-4));
  const SpinSpecies neg{-1e6}, pos{1e6};
  CHECK(coupling({0, 0, 1}, z, neg, pos) < 0.0);
  CHECK(coupling({0, 0, 1}, z, pos, pos) > 0.0);

  CHECK(kind_of([&] { (void)coupling({0, 0, 0}, z, si, si); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { (void)coupling_prefactor(SpinSpecies{0.0}, si); }) == ErrorKind::Domain);
}

TEST_CASE("weight kind names") {
  CHECK(parse_weight_kind("d2") == WeightKind::DSquared);
  CHECK(parse_weight_kind("d2r2") == WeightKind::DSquaredRSquared);
  CHECK_FALSE(parse_weight_kind("d3").has_value());
}

TEST_CASE("cumulative profiles") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  const auto lat = occupy(dia, 6, 0.3, 3);
  for (const auto kind : {WeightKind::DSquared, WeightKind::DSquaredRSquared}) {
    const auto prof = cumulative_profile(lat, kind, z);
    REQUIRE(prof.size() >= 2);
    CHECK(prof.front().fraction == 0.0);
    CHECK(prof.back().fraction == 1.0);
    for (std::size_t i = 1; i < prof.size(); ++i) {
      CHECK(prof[i].distance >= prof[i - 1].distance);
      CHECK(prof[i].fraction >= prof[i - 1].fraction);
    }
  }
  const auto lonely = occupy(dia, 1, 1e-9, 1);
  REQUIRE(lonely.sites.size() == 1);
  CHECK(kind_of([&] { (void)cumulative_profile(lonely, WeightKind::DSquared, z); }) ==
        ErrorKind::EmptyProfile);
}

TEST_CASE("diamond at 30 percent: share of the coupling within two lattice constants") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  double d2 = 0.0, d2r2 = 0.0;
  const int n = 10;
  for (int m = 0; m < n; ++m) {
    const auto lat = occupy(dia, 15, 0.3, member_seed(1, m, 0.3));
    for (const auto kind : {WeightKind::DSquared, WeightKind::DSquaredRSquared}) {
      double at = 0.0;
      for (const auto& p : cumulative_profile(lat, kind, z)) {
        if (p.distance <= 2 * 5.431) at = p.fraction;
      }
      (kind == WeightKind::DSquared ? d2 : d2r2) += at / n;
    }
  }
  CHECK(d2 == doctest::Approx(0.95).epsilon(0.05));
  CHECK(d2r2 == doctest::Approx(0.60).epsilon(0.12));
}

TEST_CASE("cut-off radii") {
  CutoffRequest req;
  req.ensemble_size = 20;
  req.extent = 15;

  SUBCASE("dense baths localise the coupling within two lattice constants") {
    req.abundance = 0.3;
    const auto c = cutoff_radius(req);
    CHECK(c.radius < 2 * 5.431);
    CHECK(c.contained_fraction >= c.threshold);
    CHECK(c.lattices_used == 20);
  }
  SUBCASE("the diffusion weight reaches beyond 50 Angstrom at natural abundance") {
    req.abundance = 0.047;
    req.weight_kind = WeightKind::DSquaredRSquared;
    req.extent = 30;
    CHECK(cutoff_radius(req).radius > 50.0);
  }
  SUBCASE("an open-ended threshold cannot be met") {
    req.abundance = 0.3;
    req.threshold = 1.0;
    CHECK(kind_of([&] { (void)cutoff_radius(req); }) == ErrorKind::BoxTooSmall);
  }
  SUBCASE("orientation override is honoured") {
    req.abundance = 0.3;
    const auto a = cutoff_radius(req);
    req.field_dir = Vec3{1, 1, 1};
    const auto b = cutoff_radius(req);
    CHECK(a.radius > 0.0);
    CHECK(b.radius > 0.0);
  }
  SUBCASE("thread count does not change the result") {
    req.abundance = 0.1;
    const auto a = cutoff_radius(req);
    req.threads = 4;
    const auto b = cutoff_radius(req);
    CHECK(a.radius == b.radius);
    CHECK(a.contained_fraction == b.contained_fraction);
  }
}

TEST_CASE("cut-off table over the abundance grid") {
  const CubicStructure dia(LatticeKind::Diamond, 5.431);
  const double grid[] = {0.1, 0.2, 0.3, 0.5, 0.75, 1.0};
  CutoffRequest base;
  base.ensemble_size = 10;
  base.extent = 15;
  const auto table = build_cutoff_table(dia, grid, base);
  CHECK(table.rows().size() == 12);
  double prev_d2 = 1e9, prev_d2r2 = 1e9;
  for (const double f : grid) {
    const double d2 = table.lookup(f, WeightKind::DSquared).cutoff.radius;
    const double d2r2 = table.lookup(f, WeightKind::DSquaredRSquared).cutoff.radius;
    CHECK(d2r2 >= d2);
    CHECK(d2 <= prev_d2 + 1e-12);
    // Flat in f once the bath is dense; allow sampling noise there.
    CHECK(d2r2 <= prev_d2r2 * 1.03);
    prev_d2 = d2;
    prev_d2r2 = d2r2;
  }
  CHECK(table.lookup(1.0, WeightKind::DSquaredRSquared).cutoff.radius <
        table.lookup(0.1, WeightKind::DSquaredRSquared).cutoff.radius);
  CHECK(table.lookup(0.21, WeightKind::DSquared).abundance == 0.2);
  CHECK(table.lookup(0.9, WeightKind::DSquared).abundance == 1.0);

  const auto csv = cutoff_csv(table);
  CHECK(csv.columns == std::vector<std::string>{"structure", "abundance_percent", "weight_kind",
                                                "threshold", "radius_angstrom", "contained_fraction"});
  CHECK(csv.rows.size() == 12);

  const auto g = default_abundance_grid();
  REQUIRE(g.size() == 10);
  CHECK(g.front() == 0.005);
  CHECK(g.back() == 1.0);
}
