#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spindiff/crystal.hpp"
#include "spindiff/linewidth.hpp"
#include "spindiff/oracle.hpp"
#include "spindiff/particle.hpp"

namespace spindiff::cli {

enum class Profile { Desk, Paper };
enum class DSource { NearestNeighbor, LatticeSum, Explicit };

std::string_view to_string(Profile p) noexcept;
std::optional<Profile> parse_profile(std::string_view s) noexcept;
std::string_view to_string(DSource s) noexcept;

struct RunConfig {
  Profile profile = Profile::Desk;

  std::vector<LatticeKind> structures{LatticeKind::Diamond};
  double lattice_constant = 5.431;  // Angstrom
  double gamma = -53.190e6;         // rad s^-1 T^-1
  std::vector<double> abundances;   // fractions
  std::size_t lattices = 100;
  std::size_t orientations = 144;
  int extent = 15;
  std::size_t cutoff_lattices = 100;
  std::uint64_t seed = 1;
  double threshold = 0.95;

  LinewidthOptions linewidth{};
  std::optional<std::string> calibration_path;
  bool poisson_correction = false;
  std::optional<double> experimental_fwhm;

  ParticleGeometry geometry{};
  DSource d_source = DSource::Explicit;
  double d_nm2_per_s = 3.6;
  double particle_abundance = 0.047;
  TraceKind trace_kind = TraceKind::Decay;
  double t1_in_h = 3.0;
  double t1_out_h = 0.3;
  std::optional<double> level;
  double time_start_s = 0.0;
  double time_stop_s = 21600.0;
  std::size_t time_count = 73;
  SolverOptions solver{};
  GridSpec grid{};
  std::optional<std::string> trace_path;

  std::vector<std::string> scaling_inputs;

  std::size_t calibration_systems = 200;
  HamiltonianTerms calibration_terms = HamiltonianTerms::ZZ;

  // Not part of the hash: they do not change any output value.
  std::string out_dir = "out";
  unsigned threads = 1;
};

RunConfig profile_defaults(Profile p);

/// Parses YAML text over the defaults of `profile` (or of the file's own
/// `profile:` key when `profile` is unset). Unknown keys and bad values throw
/// Config errors naming the line.
RunConfig load_config(std::string_view yaml_text, std::optional<Profile> profile = {});
RunConfig load_config_file(const std::string& path, std::optional<Profile> profile = {});

/// Canonical JSON of every field that affects results.
nlohmann::json canonical_json(const RunConfig& config);
/// FNV-1a 64 of the canonical JSON dump, 16 hex digits.
std::string config_hash(const RunConfig& config);

std::vector<double> time_grid(const RunConfig& config);

}  // namespace spindiff::cli
