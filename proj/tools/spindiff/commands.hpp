#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "spindiff/errors.hpp"

namespace spindiff::cli {

struct Context {
  RunConfig config;
  bool force = false;
  std::vector<std::string> inputs;
  std::ostream* log = nullptr;
};

void run_cutoffs(const Context& ctx);
void run_linewidth(const Context& ctx);
void run_diffusion(const Context& ctx);
void run_scaling(const Context& ctx);
void run_particle_sim(const Context& ctx);
void run_particle_fit(const Context& ctx);
void run_calibrate(const Context& ctx);

/// 0 ok, 1 config, 2 numerical, 3 I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace spindiff::cli
