#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tspec/cli.hpp"

int main(int argc, char** argv) {
  using namespace tspec;
  CLI::App app{"Spectral and scattering analysis of block Toeplitz and Laurent operators"};
  RunConfig cfg;
  std::string symbol, perturbation, delta, gap, seed, kind, out = "out";
  int grid = 0, half_length = 0;

  app.add_option("--symbol", symbol, "symbol document (JSON)")->required();
  app.add_option("--perturbation", perturbation, "perturbation document (JSON)");
  app.add_option("--task", cfg.task, "task name")->required()->check(CLI::IsMember(task_names()));
  auto* l_opt = app.add_option("--L", half_length, "window half-length (Laurent) or length (Toeplitz), <= 8192");
  auto* k_opt = app.add_option("--K", grid, "band grid size, a power of two <= 8192");
  app.add_option("--s", cfg.s, "resolvent weight exponent");
  app.add_option("--sigma", cfg.sigma, "propagation weight exponent");
  app.add_option("--delta", delta, "energy interval LO:HI");
  app.add_option("--gap", gap, "gap interval LO:HI");
  app.add_option("--tmax", cfg.t_max, "propagation horizon");
  app.add_option("--Tmax", cfg.wave_t_max, "wave operator horizon");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "hexadecimal seed");
  app.add_option("--kind", kind, "operator family")->check(CLI::IsMember({"toeplitz", "laurent"}));
  app.add_option("--energies", cfg.energies, "LAP energies (default: band quartiles)");
  app.add_flag("--dump-states", cfg.dump_states, "write eigenvectors and wave operator states as vector records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    cfg.symbol = symbol;
    if (!perturbation.empty()) cfg.perturbation = perturbation;
    if (l_opt->count()) cfg.half_length = half_length;
    if (k_opt->count()) cfg.grid = grid;
    if (!delta.empty()) cfg.delta = parse_interval(delta);
    if (!gap.empty()) cfg.gap = parse_interval(gap);
    if (!seed.empty()) cfg.seed = parse_seed(seed);
    if (!kind.empty()) cfg.kind = kind == "toeplitz" ? WindowKind::one_sided : WindowKind::two_sided;
    cfg.out = out;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_config;
  }
  return run(cfg, std::cout);
}
