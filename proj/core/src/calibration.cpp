#include "spindiff/calibration.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "spindiff/csv.hpp"
#include "spindiff/errors.hpp"

namespace spindiff {

CalibrationRecord default_calibration() {
  CalibrationRecord r;
  r.terms = HamiltonianTerms::ZZ;
  r.coefficients = {1.0, 1.0, 1.25622434261371e-18, -6.100444625548217e-19};
  r.seed = 1;
  r.n_systems = 200;
  r.max_relative_residual = 3.3513895510586335e-15;
  return r;
}

CalibrationRecord make_record(const CalibrationResult& result) {
  CalibrationRecord r;
  r.terms = result.terms;
  r.coefficients = result.coefficients;
  r.seed = result.seed;
  r.n_systems = result.n_systems;
  r.max_relative_residual = result.max_relative_residual;
  return r;
}

std::string format_calibration(const CalibrationRecord& r) {
  std::ostringstream os;
  os << "format_version = " << r.format_version << '\n'
     << "toolkit_version = " << r.toolkit_version << '\n'
     << "terms = " << to_string(r.terms) << '\n'
     << "c_sq = " << format_number(r.coefficients.sq) << '\n'
     << "c_zq = " << format_number(r.coefficients.zq) << '\n'
     << "c_zq_flipflop = " << format_number(r.coefficients.zq_flipflop) << '\n'
     << "c_zq_pair = " << format_number(r.coefficients.zq_pair) << '\n'
     << "seed = " << r.seed << '\n'
     << "n_systems = " << r.n_systems << '\n'
     << "max_relative_residual = " << format_number(r.max_relative_residual) << '\n';
  return os.str();
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_value(std::string_view v, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc{} && ptr == v.data() + v.size(), ErrorKind::Config,
          "calibration line " + std::to_string(line) + ": bad number '" + std::string(v) + "'");
  return out;
}

}  // namespace

CalibrationRecord parse_calibration(std::string_view text) {
  CalibrationRecord r;
  r.toolkit_version.clear();
  std::size_t line_no = 0;
  std::size_t seen = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorKind::Config,
            "calibration line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    ++seen;
    if (key == "format_version") {
      r.format_version = parse_value<int>(val, line_no);
      require(r.format_version == 1, ErrorKind::Config,
              "calibration line " + std::to_string(line_no) + ": unsupported format version");
    } else if (key == "toolkit_version") {
      r.toolkit_version = std::string(val);
    } else if (key == "terms") {
      if (val == "zz") {
        r.terms = HamiltonianTerms::ZZ;
      } else if (val == "full_secular") {
        r.terms = HamiltonianTerms::FullSecular;
      } else {
        fail(ErrorKind::Config, "calibration line " + std::to_string(line_no) +
                                    ": unknown terms '" + std::string(val) + "'");
      }
    } else if (key == "c_sq") {
      r.coefficients.sq = parse_value<double>(val, line_no);
    } else if (key == "c_zq") {
      r.coefficients.zq = parse_value<double>(val, line_no);
    } else if (key == "c_zq_flipflop") {
      r.coefficients.zq_flipflop = parse_value<double>(val, line_no);
    } else if (key == "c_zq_pair") {
      r.coefficients.zq_pair = parse_value<double>(val, line_no);
    } else if (key == "seed") {
      r.seed = parse_value<std::uint64_t>(val, line_no);
    } else if (key == "n_systems") {
      r.n_systems = parse_value<std::size_t>(val, line_no);
    } else if (key == "max_relative_residual") {
      r.max_relative_residual = parse_value<double>(val, line_no);
    } else {
      fail(ErrorKind::Config, "calibration line " + std::to_string(line_no) + ": unknown key '" +
                                  std::string(key) + "'");
    }
  }
  require(seen > 0, ErrorKind::Config, "calibration record is empty");
  return r;
}

CalibrationRecord read_calibration_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_calibration(os.str());
}

}  // namespace spindiff
