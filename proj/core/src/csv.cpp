#include "spindiff/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "spindiff/errors.hpp"

namespace spindiff {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::ResourceLimit: return "resource-limit";
    case ErrorKind::EmptyProfile: return "empty-profile";
    case ErrorKind::BoxTooSmall: return "box-too-small";
    case ErrorKind::DegenerateAbundance: return "degenerate-abundance";
    case ErrorKind::Normalization: return "normalization";
    case ErrorKind::InconsistentAsymptote: return "inconsistent-asymptote";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  fail(ErrorKind::Io, "CSV column '" + std::string(name) + "' not found");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const auto& cell = rows.at(row).at(column(name));
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  require(res.ec == std::errc{} && res.ptr == cell.data() + cell.size(), ErrorKind::Io,
          "CSV row " + std::to_string(row + 1) + ", column '" + std::string(name) +
              "': not a number: '" + cell + "'");
  return v;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      // No quoting: separators inside free text become semicolons.
      for (const char ch : cells[i]) out << (ch == ',' ? ';' : ch == '\n' ? ' ' : ch);
    }
    out << '\n';
  };
  line(table.columns);
  for (const auto& r : table.rows) line(r);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    auto cells = split(line);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    require(cells.size() == t.columns.size(), ErrorKind::Io,
            "CSV line " + std::to_string(lineno) + ": expected " +
                std::to_string(t.columns.size()) + " fields, got " +
                std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  require(!t.columns.empty(), ErrorKind::Io, "CSV input has no header");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace spindiff
