#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spindiff/dipolar.hpp"
#include "spindiff/linewidth.hpp"
#include "spindiff/particle.hpp"

namespace spindiff {

/// Up to four like spins. Spin 0 is the observed (central) spin and spin 1
/// its flip-flop partner.
struct SmallSpinSystem {
  std::vector<Vec3> positions;  // Angstrom
  SpinSpecies species = SpinSpecies::silicon29();
  Vec3 field_dir{0.0, 0.0, 1.0};
};

enum class HamiltonianTerms {
  /// 2 d I_i^z I_j^z only.
  ZZ,
  /// 2 d I_i^z I_j^z - (d/2)(I_i^+ I_j^- + I_i^- I_j^+).
  FullSecular,
};

std::string_view to_string(HamiltonianTerms t) noexcept;

struct Transition {
  double frequency = 0.0;  // Hz
  double weight = 0.0;     // |<a|O|b>|^2
};

struct TransitionMoments {
  std::vector<Transition> sq;  // O = I_0^+
  std::vector<Transition> zq;  // O = I_0^+ I_1^-
  double m2_sq = 0.0;          // Hz^2, about the weighted mean
  double m2_zq = 0.0;
};

/// Dense diagonalisation of the secular dipolar Hamiltonian (in Hz) and
/// enumeration of every eigenstate pair connected by O. Throws Domain for
/// more than four spins, fewer than two, or coincident positions.
TransitionMoments exact_transition_moments(const SmallSpinSystem& system,
                                           HamiltonianTerms terms = HamiltonianTerms::ZZ);

/// Same moments from tr([H,O]^+ [H,O]) / tr(O^+ O) without diagonalising.
TransitionMoments commutator_moments(const SmallSpinSystem& system,
                                     HamiltonianTerms terms = HamiltonianTerms::ZZ);

/// Features of the moment forms in linewidth.hpp for spin 0 (SQ) and the
/// pair (0, 1) (ZQ), with the remaining spins as background.
struct MomentFeatures {
  double sq = 0.0;          // sum_k d_0k^2
  double zq_diff = 0.0;     // sum_k (d_0k - d_1k)^2, k >= 2
  double zq_flipflop = 0.0; // sum_k (d_0k^2 + d_1k^2), k >= 2
  double zq_pair = 0.0;     // d_01^2
};

MomentFeatures moment_features(const SmallSpinSystem& system);

/// `n` random systems of `spins` spins inside a cube of side `box` Angstrom,
/// pairwise distances at least `min_distance`.
std::vector<SmallSpinSystem> random_systems(std::size_t n, std::size_t spins, double box,
                                            double min_distance, std::uint64_t seed);

struct CalibrationResult {
  MomentCoefficients coefficients;
  HamiltonianTerms terms = HamiltonianTerms::ZZ;
  std::size_t n_systems = 0;
  /// Largest |formula - exact| / exact over all systems and both moments.
  double max_relative_residual = 0.0;
  /// Largest relative change of any coefficient between fits on the two
  /// halves of the system set.
  double coefficient_spread = 0.0;
  std::uint64_t seed = 0;
};

/// Least-squares fit of the coefficients to exact moments of random
/// three- and four-spin systems.
CalibrationResult calibrate_moments(std::size_t n_systems, std::uint64_t seed,
                                    HamiltonianTerms terms = HamiltonianTerms::ZZ);

enum class LatticeQuantity { DSquared, DSquaredRSquared, LatticeSumD };

/// Sum over every occupied non-central site of d^2 (Hz^2), d^2 r^2
/// (Hz^2 A^2) or (pi/4) d^2 r^2 (Hz^2 A^2) for one field direction.
/// Throws ResourceLimit for extent > 8.
double unrestricted_lattice_sum(const OccupiedLattice& lattice, LatticeQuantity quantity,
                                const Vec3& field_dir,
                                const SpinSpecies& species = SpinSpecies::silicon29());

/// Same sum restricted to sites within `radius` of the central spin.
double restricted_lattice_sum(const OccupiedLattice& lattice, LatticeQuantity quantity,
                              const Vec3& field_dir, double radius,
                              const SpinSpecies& species = SpinSpecies::silicon29());

enum class ClosedFormCase { UniformT1Decay, TwoCompartmentDecay, ClampedShellBuildup };

struct ClosedFormParams {
  ParticleGeometry geometry{};
  double t1_in_h = 1.0;
  double t1_out_h = 1.0;
  double initial = 1.0;  // decay start or clamp value
};

/// Analytic volume-averaged traces: exp(-t/T); the decoupled D = 0
/// two-compartment biexponential; and the infinite-T1 clamped build-up
/// (series solution of the spherical diffusion equation, needs D).
Trace closed_form_trace(ClosedFormCase c, const ClosedFormParams& params,
                        std::span<const double> times_s, double d_nm2_per_s = 0.0);

}  // namespace spindiff
