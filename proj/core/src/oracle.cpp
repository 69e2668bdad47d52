#include "spindiff/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "spindiff/errors.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

std::string_view to_string(HamiltonianTerms t) noexcept {
  return t == HamiltonianTerms::ZZ ? "zz" : "full_secular";
}

namespace {

using Matrix = Eigen::MatrixXd;

void validate(const SmallSpinSystem& s) {
  require(s.positions.size() >= 2 && s.positions.size() <= 4, ErrorKind::Domain,
          "the exact oracle handles two to four spins");
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    for (std::size_t j = i + 1; j < s.positions.size(); ++j) {
      require(norm2(s.positions[i] - s.positions[j]) > 0.0, ErrorKind::Domain,
              "coincident spins in the oracle system");
    }
  }
}

// Basis state bit k set means spin k is down (m = -1/2).
double m_of(std::size_t state, std::size_t k) {
  return (state >> k) & 1U ? -0.5 : 0.5;
}

Matrix hamiltonian(const SmallSpinSystem& s, HamiltonianTerms terms) {
  const std::size_t n = s.positions.size();
  const std::size_t dim = std::size_t{1} << n;
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = coupling(s.positions[i] - s.positions[j], s.field_dir, s.species, s.species);
      for (std::size_t a = 0; a < dim; ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        h(ai, ai) += 2.0 * d * m_of(a, i) * m_of(a, j);
        if (terms == HamiltonianTerms::FullSecular && m_of(a, i) != m_of(a, j)) {
          const std::size_t b = a ^ ((std::size_t{1} << i) | (std::size_t{1} << j));
          h(static_cast<Eigen::Index>(b), ai) += -0.5 * d;
        }
      }
    }
  }
  return h;
}

// I_0^+ (sq) or I_0^+ I_1^- (zq) in the product basis.
Matrix transition_operator(std::size_t n, bool zero_quantum) {
  const std::size_t dim = std::size_t{1} << n;
  Matrix o = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    if (!((b >> 0) & 1U)) continue;  // spin 0 must be down
    if (zero_quantum && ((b >> 1) & 1U)) continue;  // spin 1 must be up
    std::size_t a = b ^ 1U;
    if (zero_quantum) a ^= 2U;
    o(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
  }
  return o;
}

double central_m2(const std::vector<Transition>& ts) {
  double w = 0.0, m1 = 0.0;
  for (const auto& t : ts) {
    w += t.weight;
    m1 += t.weight * t.frequency;
  }
  require(w > 0.0, ErrorKind::Numerical, "transition operator has zero norm");
  m1 /= w;
  double m2 = 0.0;
  for (const auto& t : ts) m2 += t.weight * (t.frequency - m1) * (t.frequency - m1);
  return m2 / w;
}

std::vector<Transition> transitions(const Eigen::VectorXd& e, const Matrix& v, const Matrix& o) {
  const Matrix ob = v.transpose() * o * v;
  std::vector<Transition> out;
  for (Eigen::Index a = 0; a < ob.rows(); ++a) {
    for (Eigen::Index b = 0; b < ob.cols(); ++b) {
      const double w = ob(a, b) * ob(a, b);
      if (w > 1e-14) out.push_back({e(a) - e(b), w});
    }
  }
  return out;
}

double commutator_m2(const Matrix& h, const Matrix& o) {
  const Matrix c = h * o - o * h;
  const double norm = (o.transpose() * o).trace();
  const double m1 = (o.transpose() * c).trace() / norm;
  const double m2 = (c.transpose() * c).trace() / norm;
  return m2 - m1 * m1;
}

}  // namespace

TransitionMoments exact_transition_moments(const SmallSpinSystem& system, HamiltonianTerms terms) {
  validate(system);
  const std::size_t n = system.positions.size();
  const Matrix h = hamiltonian(system, terms);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  require(solver.info() == Eigen::Success, ErrorKind::Numerical,
          "dense eigensolver failed");
  TransitionMoments m;
  m.sq = transitions(solver.eigenvalues(), solver.eigenvectors(), transition_operator(n, false));
  m.zq = transitions(solver.eigenvalues(), solver.eigenvectors(), transition_operator(n, true));
  m.m2_sq = central_m2(m.sq);
  m.m2_zq = central_m2(m.zq);
  return m;
}

TransitionMoments commutator_moments(const SmallSpinSystem& system, HamiltonianTerms terms) {
  validate(system);
  const std::size_t n = system.positions.size();
  const Matrix h = hamiltonian(system, terms);
  TransitionMoments m;
  m.m2_sq = commutator_m2(h, transition_operator(n, false));
  m.m2_zq = commutator_m2(h, transition_operator(n, true));
  return m;
}

MomentFeatures moment_features(const SmallSpinSystem& s) {
  validate(s);
  auto d = [&](std::size_t i, std::size_t j) {
    return coupling(s.positions[i] - s.positions[j], s.field_dir, s.species, s.species);
  };
  MomentFeatures f;
  for (std::size_t k = 1; k < s.positions.size(); ++k) f.sq += d(0, k) * d(0, k);
  for (std::size_t k = 2; k < s.positions.size(); ++k) {
    const double a = d(0, k), b = d(1, k);
    f.zq_diff += (a - b) * (a - b);
    f.zq_flipflop += a * a + b * b;
  }
  f.zq_pair = d(0, 1) * d(0, 1);
  return f;
}

std::vector<SmallSpinSystem> random_systems(std::size_t n, std::size_t spins, double box,
                                            double min_distance, std::uint64_t seed) {
  require(spins >= 2 && spins <= 4, ErrorKind::Domain, "systems must have two to four spins");
  require(box > 0.0 && min_distance >= 0.0 && min_distance < box, ErrorKind::Domain,
          "need 0 <= min_distance < box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, box);
  std::vector<SmallSpinSystem> out;
  out.reserve(n);
  const double min2 = min_distance * min_distance;
  while (out.size() < n) {
    SmallSpinSystem s;
    std::size_t attempts = 0;
    while (s.positions.size() < spins) {
      require(++attempts < 100000, ErrorKind::ResourceLimit,
              "cannot place spins with the requested minimum distance");
      const Vec3 p{u(rng), u(rng), u(rng)};
      const bool ok = std::all_of(s.positions.begin(), s.positions.end(),
                                  [&](const Vec3& q) { return norm2(p - q) >= min2 && norm2(p - q) > 0.0; });
      if (ok) s.positions.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

MomentCoefficients fit_coefficients(std::span<const MomentFeatures> f,
                                    std::span<const TransitionMoments> exact) {
  // Relative residuals: every row is divided by the exact moment.
  double sq_num = 0.0, sq_den = 0.0;
  Matrix a(static_cast<Eigen::Index>(f.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f[i].sq / exact[i].m2_sq;
    sq_num += x;
    sq_den += x * x;
    const auto r = static_cast<Eigen::Index>(i);
    const double s = 1.0 / exact[i].m2_zq;
    a(r, 0) = f[i].zq_diff * s;
    a(r, 1) = f[i].zq_flipflop * s;
    a(r, 2) = f[i].zq_pair * s;
    b(r) = 1.0;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return {sq_num / sq_den, c(0), c(1), c(2)};
}

}  // namespace

CalibrationResult calibrate_moments(std::size_t n_systems, std::uint64_t seed,
                                    HamiltonianTerms terms) {
  require(n_systems >= 8, ErrorKind::Domain, "calibration needs at least 8 systems");
  const std::size_t n3 = n_systems / 2;
  auto systems = random_systems(n3, 3, 8.0, 2.35, seed);
  auto four = random_systems(n_systems - n3, 4, 8.0, 2.35, seed + 1);
  systems.insert(systems.end(), four.begin(), four.end());

  std::vector<MomentFeatures> feats;
  std::vector<TransitionMoments> exact;
  for (const auto& s : systems) {
    auto m = exact_transition_moments(s, terms);
    // Degenerate geometries (zero ZQ width) carry no information.
    if (m.m2_zq <= 1e-9 || m.m2_sq <= 1e-9) continue;
    feats.push_back(moment_features(s));
    exact.push_back(std::move(m));
  }
  require(feats.size() >= 8, ErrorKind::Numerical, "too few non-degenerate calibration systems");

  CalibrationResult r;
  r.terms = terms;
  r.seed = seed;
  r.n_systems = feats.size();
  r.coefficients = fit_coefficients(feats, exact);
  const auto& c = r.coefficients;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double sq = c.sq * feats[i].sq;
    const double zq = c.zq * feats[i].zq_diff + c.zq_flipflop * feats[i].zq_flipflop +
                      c.zq_pair * feats[i].zq_pair;
    r.max_relative_residual =
        std::max({r.max_relative_residual, std::abs(sq - exact[i].m2_sq) / exact[i].m2_sq,
                  std::abs(zq - exact[i].m2_zq) / exact[i].m2_zq});
  }

  std::vector<MomentFeatures> fa, fb;
  std::vector<TransitionMoments> ea, eb;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    (i % 2 ? fb : fa).push_back(feats[i]);
    (i % 2 ? eb : ea).push_back(exact[i]);
  }
  const auto ca = fit_coefficients(fa, ea);
  const auto cb = fit_coefficients(fb, eb);
  // Relative to max(1, |c|) so that vanishing coefficients compare absolutely.
  auto rel = [](double x, double y, double ref) {
    return std::abs(x - y) / std::max(1.0, std::abs(ref));
  };
  r.coefficient_spread = std::max({rel(ca.sq, cb.sq, c.sq), rel(ca.zq, cb.zq, c.zq),
                                   rel(ca.zq_flipflop, cb.zq_flipflop, c.zq_flipflop),
                                   rel(ca.zq_pair, cb.zq_pair, c.zq_pair)});
  return r;
}

namespace {

double site_term(const Vec3& r, LatticeQuantity q, const Vec3& field_dir,
                 const SpinSpecies& species) {
  const double d = coupling(r, field_dir, species, species);
  switch (q) {
    case LatticeQuantity::DSquared:
      return d * d;
    case LatticeQuantity::DSquaredRSquared:
      return d * d * norm2(r);
    case LatticeQuantity::LatticeSumD:
      return units::pi / 4.0 * d * d * norm2(r);
  }
  return 0.0;
}

double lattice_sum(const OccupiedLattice& lattice, LatticeQuantity q, const Vec3& field_dir,
                   double radius, const SpinSpecies& species) {
  require(lattice.central_index < lattice.sites.size(), ErrorKind::Domain,
          "lattice has no central spin");
  const Vec3 c = lattice.sites[lattice.central_index];
  const double r2max = radius * radius;
  double sum = 0.0;
  for (std::size_t i = 0; i < lattice.sites.size(); ++i) {
    if (i == lattice.central_index) continue;
    const Vec3 r = lattice.sites[i] - c;
    if (norm2(r) > r2max) continue;
    sum += site_term(r, q, field_dir, species);
  }
  return sum;
}

}  // namespace

double unrestricted_lattice_sum(const OccupiedLattice& lattice, LatticeQuantity quantity,
                                const Vec3& field_dir, const SpinSpecies& species) {
  require(lattice.extent <= 8, ErrorKind::ResourceLimit,
          "unrestricted lattice sums are limited to extent 8");
  return lattice_sum(lattice, quantity, field_dir, std::numeric_limits<double>::infinity(),
                     species);
}

double restricted_lattice_sum(const OccupiedLattice& lattice, LatticeQuantity quantity,
                              const Vec3& field_dir, double radius, const SpinSpecies& species) {
  require(radius >= 0.0, ErrorKind::Domain, "radius must be non-negative");
  return lattice_sum(lattice, quantity, field_dir, radius, species);
}

Trace closed_form_trace(ClosedFormCase c, const ClosedFormParams& p,
                        std::span<const double> times_s, double d_nm2_per_s) {
  p.geometry.validate();
  Trace tr;
  tr.times_s.assign(times_s.begin(), times_s.end());
  tr.geometry = p.geometry;
  tr.d_nm2_per_s = d_nm2_per_s;
  tr.t1_in_h = p.t1_in_h;
  tr.t1_out_h = p.t1_out_h;
  tr.kind = c == ClosedFormCase::ClampedShellBuildup ? TraceKind::BuildUp : TraceKind::Decay;

  const auto vol = p.geometry.element_volumes();
  const std::size_t shell = p.geometry.first_shell_element();
  double v_core = 0.0, v_total = 0.0;
  for (std::size_t i = 0; i < vol.size(); ++i) {
    v_total += vol[i];
    if (i < shell) v_core += vol[i];
  }
  const double phi_core = v_core / v_total;
  const double hours = units::seconds_per_hour;

  for (const double t : times_s) {
    double v = 0.0;
    switch (c) {
      case ClosedFormCase::UniformT1Decay:
        require(p.t1_in_h == p.t1_out_h, ErrorKind::Domain,
                "uniform decay needs equal T1 inside and outside");
        v = p.initial * std::exp(-t / (p.t1_in_h * hours));
        break;
      case ClosedFormCase::TwoCompartmentDecay:
        v = p.initial * (phi_core * std::exp(-t / (p.t1_in_h * hours)) +
                         (1.0 - phi_core) * std::exp(-t / (p.t1_out_h * hours)));
        break;
      case ClosedFormCase::ClampedShellBuildup: {
        require(d_nm2_per_s > 0.0, ErrorKind::Domain, "clamped build-up needs D > 0");
        const double rc = static_cast<double>(shell) * p.geometry.element_width();
        const double k = d_nm2_per_s * units::pi * units::pi * t / (rc * rc);
        double series = 0.0;
        constexpr std::size_t kMaxTerms = 2'000'000;
        std::size_t n = 1;
        for (; n <= kMaxTerms; ++n) {
          const double nn = static_cast<double>(n);
          const double term = std::exp(-k * nn * nn) / (nn * nn);
          series += term;
          if (term < 1e-17) break;
        }
        if (n > kMaxTerms) series += 1.0 / static_cast<double>(kMaxTerms);
        const double core = 1.0 - 6.0 / (units::pi * units::pi) * series;
        v = p.initial * (phi_core * core + (1.0 - phi_core));
        break;
      }
    }
    tr.values.push_back(v);
  }
  return tr;
}

}  // namespace spindiff
