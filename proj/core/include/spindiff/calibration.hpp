#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "spindiff/linewidth.hpp"
#include "spindiff/oracle.hpp"

namespace spindiff {

/// Versioned moment-coefficient record, stored as `key = value` lines.
struct CalibrationRecord {
  int format_version = 1;
  std::string toolkit_version = SPINDIFF_VERSION;
  HamiltonianTerms terms = HamiltonianTerms::ZZ;
  MomentCoefficients coefficients{};
  std::uint64_t seed = 0;
  std::size_t n_systems = 0;
  double max_relative_residual = 0.0;
};

/// Compiled-in record; identical to data/calibration.txt.
CalibrationRecord default_calibration();

CalibrationRecord make_record(const CalibrationResult& result);

std::string format_calibration(const CalibrationRecord& record);
/// Throws Config on malformed or unknown keys, naming the line.
CalibrationRecord parse_calibration(std::string_view text);

CalibrationRecord read_calibration_file(const std::filesystem::path& path);

}  // namespace spindiff
