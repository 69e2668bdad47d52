#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "spindiff/calibration.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/diffusion.hpp"
#include "spindiff/dipolar.hpp"
#include "spindiff/errors.hpp"
#include "spindiff/scaling.hpp"
#include "spindiff/units.hpp"

namespace spindiff::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return 1;
    case ErrorKind::Io: return 3;
    default: return 2;
  }
}

namespace {

std::ostream& log(const Context& ctx) { return ctx.log ? *ctx.log : std::cerr; }

std::vector<std::string> provenance(const Context& ctx, std::string_view command) {
  const auto& c = ctx.config;
  return {"spindiff " SPINDIFF_VERSION,
          "command " + std::string(command),
          "config_hash " + config_hash(c),
          "profile " + std::string(to_string(c.profile)),
          "seed " + std::to_string(c.seed)};
}

class Outputs {
 public:
  Outputs(const Context& ctx, std::vector<std::string> names) : ctx_(ctx) {
    const fs::path dir(ctx.config.out_dir);
    for (auto& n : names) {
      const auto p = dir / n;
      if (fs::exists(p) && !ctx.force) {
        fail(ErrorKind::Io, p.string() + " exists; pass --force to overwrite");
      }
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  }

  void write(const std::string& name, CsvTable table, std::string_view command) const {
    auto head = provenance(ctx_, command);
    head.insert(head.end(), table.comments.begin(), table.comments.end());
    table.comments = std::move(head);
    const auto p = fs::path(ctx_.config.out_dir) / name;
    std::ofstream out(p);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + p.string());
    write_csv(out, table);
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + p.string());
    log(ctx_) << "wrote " << p.string() << '\n';
  }

  void write_text(const std::string& name, const std::string& text) const {
    const auto p = fs::path(ctx_.config.out_dir) / name;
    std::ofstream out(p);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + p.string());
    out << text;
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + p.string());
    log(ctx_) << "wrote " << p.string() << '\n';
  }

 private:
  const Context& ctx_;
};

CubicStructure structure_of(const RunConfig& c, LatticeKind k) {
  return CubicStructure(k, c.lattice_constant);
}

MomentCoefficients coefficients(const RunConfig& c) {
  return c.calibration_path ? read_calibration_file(*c.calibration_path).coefficients
                            : default_calibration().coefficients;
}

SweepConfig sweep_config(const RunConfig& c) {
  SweepConfig s;
  s.species = SpinSpecies{c.gamma};
  s.ensemble_size = c.lattices;
  s.n_orientations = c.orientations;
  s.extent = c.extent;
  s.seed = c.seed;
  s.threshold = c.threshold;
  s.linewidth = c.linewidth;
  s.linewidth.coefficients = coefficients(c);
  s.poisson_correction = c.poisson_correction;
  s.experimental_fwhm = c.experimental_fwhm;
  s.threads = c.threads;
  return s;
}

}  // namespace

void run_cutoffs(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"cutoffs.csv"});
  CutoffTable table;
  std::vector<std::string> notes;
  for (const auto kind : c.structures) {
    const auto s = structure_of(c, kind);
    const auto box = SiteTemplate::box(s, c.extent);
    for (const double f : c.abundances) {
      for (const auto w : {WeightKind::DSquared, WeightKind::DSquaredRSquared}) {
        CutoffRequest req;
        req.structure = s;
        req.abundance = f;
        req.weight_kind = w;
        req.ensemble_size = c.cutoff_lattices;
        req.threshold = c.threshold;
        req.extent = c.extent;
        req.seed = c.seed;
        req.threads = c.threads;
        try {
          table.add({kind, f, cutoff_radius(req, box)});
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::BoxTooSmall) throw;
          notes.push_back("skipped " + std::string(to_string(kind)) + " f=" + format_number(f) +
                          " " + std::string(to_string(w)) + ": " + e.what());
          log(ctx) << "warning: " << notes.back() << '\n';
        }
      }
    }
  }
  auto csv = cutoff_csv(table);
  csv.comments = notes;
  out.write("cutoffs.csv", std::move(csv), "cutoffs");
}

void run_linewidth(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"linewidth.csv"});
  std::vector<LineWidthResult> rows;
  std::vector<std::string> notes;
  for (const auto kind : c.structures) {
    for (const double f : c.abundances) {
      LinewidthRequest req;
      req.structure = structure_of(c, kind);
      req.species = SpinSpecies{c.gamma};
      req.abundance = f;
      req.ensemble_size = c.lattices;
      req.n_orientations = c.orientations;
      req.seed = c.seed;
      req.cutoff_extent = c.extent;
      req.cutoff_ensemble = c.cutoff_lattices;
      req.threshold = c.threshold;
      req.options = c.linewidth;
      req.options.coefficients = coefficients(c);
      req.threads = c.threads;
      try {
        rows.push_back(powder_linewidths(req));
        log(ctx) << to_string(kind) << " f=" << f * 100 << "% zq " << rows.back().fwhm_zq
                 << " Hz sq " << rows.back().fwhm_sq << " Hz\n";
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateAbundance && e.kind() != ErrorKind::BoxTooSmall) throw;
        notes.push_back("skipped " + std::string(to_string(kind)) + " f=" + format_number(f) +
                        ": " + e.what());
        log(ctx) << "warning: " << notes.back() << '\n';
      }
    }
  }
  auto csv = linewidth_csv(rows);
  csv.comments = notes;
  out.write("linewidth.csv", std::move(csv), "linewidth");
}

void run_diffusion(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"diffusion.csv"});
  CsvTable all;
  const auto cfg = sweep_config(c);
  for (const auto kind : c.structures) {
    const auto s = structure_of(c, kind);
    const auto rows = abundance_sweep(s, c.abundances, cfg);
    auto t = sweep_table(s, rows);
    if (all.columns.empty()) all.columns = t.columns;
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    for (const auto& r : rows) {
      if (!r.error.empty()) {
        log(ctx) << "warning: " << to_string(kind) << " f=" << r.abundance << ": " << r.error << '\n';
      } else {
        log(ctx) << to_string(kind) << " f=" << r.abundance * 100 << "% D_nn "
                 << r.nearest_neighbor->value << " D_lat " << r.lattice_sum->value << " nm^2/s\n";
      }
    }
  }
  out.write("diffusion.csv", std::move(all), "diffusion");
}

void run_scaling(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"scaling.csv"});
  std::map<LatticeKind, std::pair<std::vector<ScalingPoint>, std::vector<ScalingPoint>>> points;
  auto inputs = ctx.inputs.empty() ? c.scaling_inputs : ctx.inputs;
  if (!inputs.empty()) {
    for (const auto& path : inputs) {
      const auto t = read_csv_file(path);
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][t.column("method")] != "lattice_sum") continue;
        const auto kind = parse_lattice_kind(t.rows[r][t.column("structure")]);
        require(kind.has_value(), ErrorKind::Io, path + ": unknown structure in row " + std::to_string(r + 1));
        const double f = t.number(r, "abundance_percent");
        const double d = t.number(r, "D_nm2_per_s");
        const double p0 = t.number(r, "p0_s");
        auto& [zq, dp] = points[*kind];
        zq.push_back({f, t.number(r, "fwhm_zq_hz")});
        dp.push_back({f, 4.0 * units::pi * units::pi * d / p0});
      }
    }
  } else {
    const auto cfg = sweep_config(c);
    for (const auto kind : c.structures) {
      for (const auto& r : abundance_sweep(structure_of(c, kind), c.abundances, cfg)) {
        if (!r.error.empty()) {
          log(ctx) << "warning: " << to_string(kind) << " f=" << r.abundance << ": " << r.error << '\n';
          continue;
        }
        auto& [zq, dp] = points[kind];
        zq.push_back({r.abundance * 100.0, r.line->fwhm_zq});
        dp.push_back({r.abundance * 100.0, d_over_p0(*r.weight)});
      }
    }
  }
  std::vector<StructureFits> fits;
  for (const auto& [kind, pts] : points) {
    StructureFits s;
    s.structure = kind;
    s.zq = fit_power_law(pts.first, ScalingQuantity::ZQWidth, c.gamma, c.lattice_constant);
    s.d = fit_power_law(pts.second, ScalingQuantity::DOverP0, c.gamma, c.lattice_constant);
    s.zq.structure = s.d.structure = kind;
    log(ctx) << to_string(kind) << " u_zq " << s.zq.u << " m_zq " << s.zq.m << " u_d " << s.d.u
             << " m_d " << s.d.m << '\n';
    fits.push_back(std::move(s));
  }
  require(!fits.empty(), ErrorKind::Numerical, "no scaling points");
  out.write("scaling.csv", scaling_csv(fits), "scaling");
}

namespace {

double particle_d(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.d_source == DSource::Explicit) return c.d_nm2_per_s;
  const double f = c.particle_abundance;
  const auto rows =
      abundance_sweep(structure_of(c, c.structures.front()), std::span<const double>(&f, 1), sweep_config(c));
  require(rows.front().error.empty(), ErrorKind::Numerical, "D sweep failed: " + rows.front().error);
  const double d = c.d_source == DSource::LatticeSum ? rows.front().lattice_sum->value
                                                     : rows.front().nearest_neighbor->value;
  log(ctx) << "D (" << to_string(c.d_source) << ") = " << d << " nm^2/s\n";
  return d;
}

}  // namespace

void run_particle_sim(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"particle_trace.csv", "particle_profile.csv"});
  const double d = particle_d(ctx);
  const auto times = time_grid(c);
  const double level = c.level.value_or(1.0);
  const auto sim = c.trace_kind == TraceKind::Decay
                       ? simulate_decay(c.geometry, d, c.t1_in_h, c.t1_out_h, level, times, c.solver)
                       : simulate_buildup(c.geometry, d, c.t1_in_h, c.t1_out_h, level, times, c.solver);
  auto trace = trace_csv(sim.trace);
  trace.comments = {"kind " + std::string(to_string(c.trace_kind)), "D_nm2_per_s " + format_number(d),
                    "t1_in_h " + format_number(c.t1_in_h), "t1_out_h " + format_number(c.t1_out_h)};
  out.write("particle_trace.csv", std::move(trace), "particle sim");
  CsvTable profile;
  profile.columns = {"r_nm", "polarization"};
  const double h = c.geometry.element_width();
  for (std::size_t i = 0; i < sim.final_profile.values.size(); ++i) {
    profile.rows.push_back({format_number((static_cast<double>(i) + 0.5) * h),
                            format_number(sim.final_profile.values[i])});
  }
  profile.comments = {"time_s " + format_number(sim.final_profile.time_s)};
  out.write("particle_profile.csv", std::move(profile), "particle sim");
}

void run_particle_fit(const Context& ctx) {
  const auto& c = ctx.config;
  std::string path = !ctx.inputs.empty() ? ctx.inputs.front() : c.trace_path.value_or("");
  require(!path.empty(), ErrorKind::Config, "particle fit needs a trace CSV (argument or particle.trace)");
  Outputs out(ctx, {"particle_fit.csv", "residue_surface.csv", "residue_refined.csv"});
  const auto exp = read_trace_csv(read_csv_file(path), c.trace_kind);
  const double d = particle_d(ctx);
  FitModel model;
  model.kind = c.trace_kind;
  model.level = c.level;
  const auto fit = fit_t1(exp, c.geometry, d, c.grid, model, c.threads);
  if (fit.insensitive) {
    log(ctx) << "warning: residue varies by less than 1 % across the grid; T1 values are poorly determined\n";
  }
  std::string mono_amp, mono_tau, note;
  try {
    const auto m = fit_mono_exponential(exp);
    mono_amp = format_number(m.amplitude);
    mono_tau = format_number(m.tau_s);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonConvergence) throw;
    note = std::string("mono-exponential fit: ") + e.what();
    log(ctx) << "warning: " << note << '\n';
  }
  CsvTable t;
  t.columns = {"t1_in_h", "t1_out_h", "residue", "insensitive", "sensitivity_ratio",
               "log_step_in", "log_step_out", "D_nm2_per_s", "mono_amplitude", "mono_tau_s"};
  t.rows.push_back({format_number(fit.t1_in_h), format_number(fit.t1_out_h), format_number(fit.residue),
                    fit.insensitive ? "1" : "0", format_number(fit.sensitivity_ratio),
                    format_number(fit.log_step_in), format_number(fit.log_step_out), format_number(d),
                    mono_amp, mono_tau});
  if (!note.empty()) t.comments.push_back(note);
  t.comments.push_back("trace " + path);
  log(ctx) << "best t1_in " << fit.t1_in_h << " h, t1_out " << fit.t1_out_h << " h, residue "
           << fit.residue << '\n';
  out.write("particle_fit.csv", std::move(t), "particle fit");
  out.write("residue_surface.csv", residue_csv(fit.residue_surface), "particle fit");
  out.write("residue_refined.csv", residue_csv(fit.refined_surface), "particle fit");
}

void run_calibrate(const Context& ctx) {
  const auto& c = ctx.config;
  Outputs out(ctx, {"calibration.txt"});
  const auto r = calibrate_moments(c.calibration_systems, c.seed, c.calibration_terms);
  log(ctx) << "c_sq " << r.coefficients.sq << " c_zq " << r.coefficients.zq << " c_zq_flipflop "
           << r.coefficients.zq_flipflop << " c_zq_pair " << r.coefficients.zq_pair
           << " max residual " << r.max_relative_residual << " spread " << r.coefficient_spread
           << '\n';
  require(r.max_relative_residual <= 1e-10 && r.coefficient_spread <= 1e-8, ErrorKind::Numerical,
          "moment forms do not reproduce the exact second moments (residual " +
              format_number(r.max_relative_residual) + ", spread " +
              format_number(r.coefficient_spread) + ")");
  std::string text;
  for (const auto& line : provenance(ctx, "calibrate")) text += "# " + line + '\n';
  text += format_calibration(make_record(r));
  out.write_text("calibration.txt", text);
}

}  // namespace spindiff::cli
