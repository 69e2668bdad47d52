#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "spindiff/errors.hpp"

namespace spindiff::cli {

std::string_view to_string(Profile p) noexcept { return p == Profile::Desk ? "desk" : "paper"; }

std::optional<Profile> parse_profile(std::string_view s) noexcept {
  if (s == "desk") return Profile::Desk;
  if (s == "paper") return Profile::Paper;
  return std::nullopt;
}

std::string_view to_string(DSource s) noexcept {
  switch (s) {
    case DSource::NearestNeighbor: return "nearest_neighbor";
    case DSource::LatticeSum: return "lattice_sum";
    case DSource::Explicit: return "explicit";
  }
  return "explicit";
}

RunConfig profile_defaults(Profile p) {
  RunConfig c;
  c.profile = p;
  const auto grid = default_abundance_grid();
  c.abundances.assign(grid.begin(), grid.end());
  if (p == Profile::Paper) {
    c.lattices = 100;
    c.orientations = 1597;
    c.extent = 30;
  } else {
    c.lattices = 100;
    c.orientations = 144;
    c.extent = 15;
  }
  c.cutoff_lattices = 100;
  return c;
}

namespace {

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.line >= 0 ? "config line " + std::to_string(m.line + 1) : "config";
}

[[noreturn]] void bad(const YAML::Node& n, const std::string& what) {
  fail(ErrorKind::Config, where(n) + ": " + what);
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                const std::string& section) {
  if (!map.IsMap()) bad(map, "'" + section + "' must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      bad(kv.first, "unknown key '" + key + "'" + (section.empty() ? "" : " in '" + section + "'"));
    }
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    bad(n, "invalid value for '" + key + "'");
  }
}

double positive(const YAML::Node& n, const std::string& key) {
  const double v = get<double>(n, key);
  if (!(v > 0.0)) bad(n, "'" + key + "' must be positive");
  return v;
}

std::size_t count(const YAML::Node& n, const std::string& key) {
  const long long v = get<long long>(n, key);
  if (v < 1) bad(n, "'" + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

double fraction(const YAML::Node& n, const std::string& key) {
  const double v = get<double>(n, key);
  if (!(v > 0.0 && v <= 1.0)) bad(n, "'" + key + "' must lie in (0, 1]");
  return v;
}

AxisSpec axis(const YAML::Node& n, const std::string& key, AxisSpec a) {
  check_keys(n, {"min_h", "max_h", "count"}, key);
  if (n["min_h"]) a.min_h = positive(n["min_h"], "min_h");
  if (n["max_h"]) a.max_h = positive(n["max_h"], "max_h");
  if (n["count"]) a.count = count(n["count"], "count");
  if (a.max_h < a.min_h) bad(n, "'" + key + "' has max_h < min_h");
  return a;
}

void apply_ensemble(const YAML::Node& n, RunConfig& c) {
  check_keys(n, {"lattices", "orientations", "extent", "cutoff_lattices"}, "ensemble");
  if (n["lattices"]) c.lattices = count(n["lattices"], "lattices");
  if (n["orientations"]) c.orientations = count(n["orientations"], "orientations");
  if (n["extent"]) {
    const int e = get<int>(n["extent"], "extent");
    if (e < 1) bad(n["extent"], "'extent' must be at least 1");
    c.extent = e;
  }
  if (n["cutoff_lattices"]) c.cutoff_lattices = count(n["cutoff_lattices"], "cutoff_lattices");
}

void apply_linewidth(const YAML::Node& n, RunConfig& c) {
  check_keys(n, {"averaging", "target_weighting", "background_factor", "exact_sq_average",
                 "calibration"},
             "linewidth");
  if (n["averaging"]) {
    const auto a = parse_averaging(get<std::string>(n["averaging"], "averaging"));
    if (!a) bad(n["averaging"], "unknown averaging (grand_mean_m2, sample_width, pair_width)");
    c.linewidth.averaging = *a;
  }
  if (n["target_weighting"]) {
    const auto w = parse_target_weighting(get<std::string>(n["target_weighting"], "target_weighting"));
    if (!w) bad(n["target_weighting"], "unknown target_weighting (uniform, flip_flop_rate)");
    c.linewidth.target_weighting = *w;
  }
  if (n["background_factor"]) {
    const double b = positive(n["background_factor"], "background_factor");
    if (b < 1.0) bad(n["background_factor"], "'background_factor' must be at least 1");
    c.linewidth.background_factor = b;
  }
  if (n["exact_sq_average"]) c.linewidth.exact_sq_average = get<bool>(n["exact_sq_average"], "exact_sq_average");
  if (n["calibration"]) c.calibration_path = get<std::string>(n["calibration"], "calibration");
}

void apply_diffusion(const YAML::Node& n, RunConfig& c) {
  check_keys(n, {"poisson_correction", "experimental_fwhm_hz"}, "diffusion");
  if (n["poisson_correction"]) c.poisson_correction = get<bool>(n["poisson_correction"], "poisson_correction");
  if (n["experimental_fwhm_hz"]) c.experimental_fwhm = positive(n["experimental_fwhm_hz"], "experimental_fwhm_hz");
}

void apply_particle(const YAML::Node& n, RunConfig& c) {
  check_keys(n, {"radius_nm", "shell_nm", "elements", "d_source", "d_nm2_per_s", "abundance",
                 "kind", "t1_in_h", "t1_out_h", "level", "times", "scheme", "dt_s", "grid",
                 "trace"},
             "particle");
  if (n["radius_nm"]) c.geometry.radius_nm = positive(n["radius_nm"], "radius_nm");
  if (n["shell_nm"]) c.geometry.shell_nm = positive(n["shell_nm"], "shell_nm");
  if (n["elements"]) c.geometry.n_elements = count(n["elements"], "elements");
  if (n["d_source"]) {
    const auto s = get<std::string>(n["d_source"], "d_source");
    if (s == "nearest_neighbor") c.d_source = DSource::NearestNeighbor;
    else if (s == "lattice_sum") c.d_source = DSource::LatticeSum;
    else if (s == "explicit") c.d_source = DSource::Explicit;
    else bad(n["d_source"], "unknown d_source (nearest_neighbor, lattice_sum, explicit)");
  }
  if (n["d_nm2_per_s"]) c.d_nm2_per_s = positive(n["d_nm2_per_s"], "d_nm2_per_s");
  if (n["abundance"]) c.particle_abundance = fraction(n["abundance"], "abundance");
  if (n["kind"]) {
    const auto k = get<std::string>(n["kind"], "kind");
    if (k == "decay") c.trace_kind = TraceKind::Decay;
    else if (k == "buildup") c.trace_kind = TraceKind::BuildUp;
    else bad(n["kind"], "unknown kind (decay, buildup)");
  }
  if (n["t1_in_h"]) c.t1_in_h = positive(n["t1_in_h"], "t1_in_h");
  if (n["t1_out_h"]) c.t1_out_h = positive(n["t1_out_h"], "t1_out_h");
  if (n["level"]) c.level = get<double>(n["level"], "level");
  if (n["times"]) {
    const auto& t = n["times"];
    check_keys(t, {"start_s", "stop_s", "count"}, "times");
    if (t["start_s"]) c.time_start_s = get<double>(t["start_s"], "start_s");
    if (t["stop_s"]) c.time_stop_s = get<double>(t["stop_s"], "stop_s");
    if (t["count"]) c.time_count = count(t["count"], "count");
    if (c.time_start_s < 0.0 || c.time_stop_s <= c.time_start_s) {
      bad(t, "'times' needs 0 <= start_s < stop_s");
    }
  }
  if (n["scheme"]) {
    const auto s = get<std::string>(n["scheme"], "scheme");
    if (s == "spectral") c.solver.scheme = TimeScheme::Spectral;
    else if (s == "backward_euler") c.solver.scheme = TimeScheme::BackwardEuler;
    else bad(n["scheme"], "unknown scheme (spectral, backward_euler)");
  }
  if (n["dt_s"]) c.solver.dt_s = positive(n["dt_s"], "dt_s");
  if (n["grid"]) {
    const auto& g = n["grid"];
    check_keys(g, {"t1_in", "t1_out", "refine"}, "grid");
    if (g["t1_in"]) c.grid.t1_in = axis(g["t1_in"], "t1_in", c.grid.t1_in);
    if (g["t1_out"]) c.grid.t1_out = axis(g["t1_out"], "t1_out", c.grid.t1_out);
    if (g["refine"]) c.grid.refine = get<bool>(g["refine"], "refine");
  }
  if (n["trace"]) c.trace_path = get<std::string>(n["trace"], "trace");
  if (!(c.geometry.shell_nm < c.geometry.radius_nm)) bad(n, "shell_nm must be below radius_nm");
  if (c.geometry.n_elements < 10) bad(n, "'elements' must be at least 10");
}

}  // namespace

RunConfig load_config(std::string_view yaml_text, std::optional<Profile> profile) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    fail(ErrorKind::Config, "config line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) return profile_defaults(profile.value_or(Profile::Desk));
  check_keys(root,
             {"profile", "structures", "lattice_constant", "gamma", "abundances", "ensemble",
              "seed", "threshold", "linewidth", "diffusion", "particle", "scaling", "calibration",
              "output"},
             "");
  Profile p = Profile::Desk;
  if (root["profile"]) {
    const auto parsed = parse_profile(get<std::string>(root["profile"], "profile"));
    if (!parsed) bad(root["profile"], "unknown profile (desk, paper)");
    p = *parsed;
  }
  if (profile) p = *profile;
  RunConfig c = profile_defaults(p);

  if (const auto s = root["structures"]) {
    c.structures.clear();
    const auto add = [&](const YAML::Node& n) {
      const auto k = parse_lattice_kind(get<std::string>(n, "structures"));
      if (!k) bad(n, "unknown structure (simple_cubic, bcc, fcc, diamond)");
      c.structures.push_back(*k);
    };
    if (s.IsSequence()) {
      for (const auto& n : s) add(n);
    } else {
      add(s);
    }
    if (c.structures.empty()) bad(s, "'structures' is empty");
  }
  if (root["lattice_constant"]) c.lattice_constant = positive(root["lattice_constant"], "lattice_constant");
  if (root["gamma"]) {
    c.gamma = get<double>(root["gamma"], "gamma");
    if (c.gamma == 0.0) bad(root["gamma"], "'gamma' must be non-zero");
  }
  if (const auto a = root["abundances"]) {
    if (!a.IsSequence() || a.size() == 0) bad(a, "'abundances' must be a non-empty list");
    c.abundances.clear();
    for (const auto& n : a) c.abundances.push_back(fraction(n, "abundances"));
  }
  if (root["ensemble"]) apply_ensemble(root["ensemble"], c);
  if (root["seed"]) c.seed = get<std::uint64_t>(root["seed"], "seed");
  if (root["threshold"]) {
    c.threshold = fraction(root["threshold"], "threshold");
  }
  if (root["linewidth"]) apply_linewidth(root["linewidth"], c);
  if (root["diffusion"]) apply_diffusion(root["diffusion"], c);
  if (root["particle"]) apply_particle(root["particle"], c);
  if (const auto s = root["scaling"]) {
    check_keys(s, {"inputs"}, "scaling");
    if (s["inputs"]) {
      for (const auto& n : s["inputs"]) c.scaling_inputs.push_back(get<std::string>(n, "inputs"));
    }
  }
  if (const auto s = root["calibration"]) {
    check_keys(s, {"systems", "terms"}, "calibration");
    if (s["systems"]) c.calibration_systems = count(s["systems"], "systems");
    if (s["terms"]) {
      const auto t = get<std::string>(s["terms"], "terms");
      if (t == "zz") c.calibration_terms = HamiltonianTerms::ZZ;
      else if (t == "full_secular") c.calibration_terms = HamiltonianTerms::FullSecular;
      else bad(s["terms"], "unknown terms (zz, full_secular)");
    }
  }
  if (const auto o = root["output"]) {
    check_keys(o, {"dir"}, "output");
    if (o["dir"]) c.out_dir = get<std::string>(o["dir"], "dir");
  }
  return c;
}

RunConfig load_config_file(const std::string& path, std::optional<Profile> profile) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return load_config(os.str(), profile);
}

nlohmann::json canonical_json(const RunConfig& c) {
  nlohmann::json j;
  j["profile"] = std::string(to_string(c.profile));
  std::vector<std::string> structures;
  for (const auto k : c.structures) structures.emplace_back(to_string(k));
  j["structures"] = structures;
  j["lattice_constant"] = c.lattice_constant;
  j["gamma"] = c.gamma;
  j["abundances"] = c.abundances;
  j["ensemble"] = {{"lattices", c.lattices},
                   {"orientations", c.orientations},
                   {"extent", c.extent},
                   {"cutoff_lattices", c.cutoff_lattices}};
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  j["linewidth"] = {{"averaging", std::string(to_string(c.linewidth.averaging))},
                    {"target_weighting", std::string(to_string(c.linewidth.target_weighting))},
                    {"background_factor", c.linewidth.background_factor},
                    {"exact_sq_average", c.linewidth.exact_sq_average},
                    {"calibration", c.calibration_path.value_or("")}};
  j["diffusion"] = {{"poisson_correction", c.poisson_correction},
                    {"experimental_fwhm_hz", c.experimental_fwhm ? nlohmann::json(*c.experimental_fwhm)
                                                                 : nlohmann::json(nullptr)}};
  auto axis_json = [](const AxisSpec& a) {
    return nlohmann::json{{"min_h", a.min_h}, {"max_h", a.max_h}, {"count", a.count}};
  };
  j["particle"] = {
      {"radius_nm", c.geometry.radius_nm},
      {"shell_nm", c.geometry.shell_nm},
      {"elements", c.geometry.n_elements},
      {"d_source", std::string(to_string(c.d_source))},
      {"d_nm2_per_s", c.d_nm2_per_s},
      {"abundance", c.particle_abundance},
      {"kind", std::string(to_string(c.trace_kind))},
      {"t1_in_h", c.t1_in_h},
      {"t1_out_h", c.t1_out_h},
      {"level", c.level ? nlohmann::json(*c.level) : nlohmann::json(nullptr)},
      {"times", {{"start_s", c.time_start_s}, {"stop_s", c.time_stop_s}, {"count", c.time_count}}},
      {"scheme", c.solver.scheme == TimeScheme::Spectral ? "spectral" : "backward_euler"},
      {"dt_s", c.solver.dt_s ? nlohmann::json(*c.solver.dt_s) : nlohmann::json(nullptr)},
      {"grid", {{"t1_in", axis_json(c.grid.t1_in)}, {"t1_out", axis_json(c.grid.t1_out)},
                {"refine", c.grid.refine}}},
      {"trace", c.trace_path.value_or("")}};
  j["scaling"] = {{"inputs", c.scaling_inputs}};
  j["calibration"] = {{"systems", c.calibration_systems},
                      {"terms", std::string(to_string(c.calibration_terms))}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  const std::string text = canonical_json(c).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> time_grid(const RunConfig& c) {
  std::vector<double> t(c.time_count);
  if (c.time_count == 1) {
    t[0] = c.time_stop_s;
    return t;
  }
  for (std::size_t i = 0; i < c.time_count; ++i) {
    t[i] = c.time_start_s + (c.time_stop_s - c.time_start_s) * static_cast<double>(i) /
                                static_cast<double>(c.time_count - 1);
  }
  return t;
}

}  // namespace spindiff::cli
