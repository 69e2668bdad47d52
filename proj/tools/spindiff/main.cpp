#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "spindiff/errors.hpp"
#include "spindiff/parallel.hpp"

using namespace spindiff;
using namespace spindiff::cli;

int main(int argc, char** argv) {
  CLI::App app{"Spin-diffusion coefficients and core-shell relaxation fits"};
  app.set_version_flag("--version", SPINDIFF_VERSION);
  app.require_subcommand(1);

  std::string config_path, profile_name, out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool force = false;
  std::vector<std::string> inputs;
  app.add_option("--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--profile", profile_name, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--seed", seed, "base seed");
  app.add_option("--threads", threads, "worker threads (0: hardware)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_flag("--force", force, "overwrite existing outputs");

  auto* cutoffs = app.add_subcommand("cutoffs", "cut-off radius table");
  auto* linewidth = app.add_subcommand("linewidth", "powder SQ/ZQ line widths");
  auto* diffusion = app.add_subcommand("diffusion", "abundance sweep of D");
  auto* scaling = app.add_subcommand("scaling", "power-law fits of ZQ width and D/p0");
  scaling->add_option("inputs", inputs, "diffusion CSVs (default: run the sweep)");
  auto* particle = app.add_subcommand("particle", "core-shell particle model");
  particle->require_subcommand(1);
  auto* sim = particle->add_subcommand("sim", "simulate a build-up or decay trace");
  auto* fit = particle->add_subcommand("fit", "grid-search T1 fit of a trace CSV");
  fit->add_option("trace", inputs, "trace CSV (time_s, signal[, normalization])");
  auto* calibrate = app.add_subcommand("calibrate", "fit moment coefficients to exact diagonalisation");
  for (auto* s : {cutoffs, linewidth, diffusion, scaling, particle, calibrate}) s->fallthrough();
  sim->fallthrough();
  fit->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::optional<Profile> profile;
    if (!profile_name.empty()) profile = parse_profile(profile_name);
    Context ctx;
    ctx.config = config_path.empty() ? profile_defaults(profile.value_or(Profile::Desk))
                                     : load_config_file(config_path, profile);
    if (seed) ctx.config.seed = *seed;
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    ctx.config.threads = threads == 0 ? default_threads() : threads;
    ctx.force = force;
    ctx.inputs = inputs;

    if (*cutoffs) run_cutoffs(ctx);
    else if (*linewidth) run_linewidth(ctx);
    else if (*diffusion) run_diffusion(ctx);
    else if (*scaling) run_scaling(ctx);
    else if (*sim) run_particle_sim(ctx);
    else if (*fit) run_particle_fit(ctx);
    else if (*calibrate) run_calibrate(ctx);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
