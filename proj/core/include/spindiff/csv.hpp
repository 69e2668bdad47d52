#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spindiff {

/// A header plus string cells. Lines starting with '#' are provenance
/// comments and are kept separately.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  /// Index of a column; throws Io when missing.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

/// Shortest round-trip decimal representation.
std::string format_number(double v);

void write_csv(std::ostream& out, const CsvTable& table);
/// Throws Io on ragged rows or an empty stream.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace spindiff
