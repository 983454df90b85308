// Command-line front end: decompose, trajectories, scan, physical.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "singlet/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> atoms;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd.add_option("--preset", f.preset, "named preset supplying defaults (explicit keys win)");
  cmd.add_option("--out", f.out, std::string("output directory (default: $") + singlet::kOutputDirEnv + " or ./singlet_out)");
}

singlet::Overrides to_overrides(const Flags& f) {
  singlet::Overrides o;
  if (!f.config.empty()) o.config_path = f.config;
  if (!f.preset.empty()) o.preset = f.preset;
  if (!f.out.empty()) o.out = f.out;
  o.seed = f.seed;
  o.threads = f.threads;
  o.atoms = f.atoms;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singlet preparation simulations for spin-1 ensembles in a lossy cavity"};
  app.set_version_flag("--version", std::string(singlet::version_tag()));
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print preset names and exit");
  app.require_subcommand(0, 1);

  Flags flags;
  auto* decompose = app.add_subcommand("decompose", "Dicke decomposition of |0,N,0>");
  add_common(*decompose, flags);
  decompose->add_option("-N,--atoms", flags.atoms, "atom number (even)");

  auto* trajectories = app.add_subcommand("trajectories", "Monte-Carlo wave-function ensembles");
  add_common(*trajectories, flags);
  trajectories->add_option("--seed", flags.seed, "64-bit ensemble seed");
  trajectories->add_option("--threads", flags.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* scan = app.add_subcommand("scan", "pair-basis sweep scans over (q0, xi)");
  add_common(*scan, flags);
  scan->add_option("--threads", flags.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* physical = app.add_subcommand("physical", "effective parameters and timescales from physical inputs");
  add_common(*physical, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : singlet::exit_config;
  }

  if (list_presets) {
    for (const auto& name : singlet::preset_names()) std::cout << name << '\n';
    return 0;
  }

  singlet::Command command = singlet::Command::decompose;
  if (trajectories->parsed()) command = singlet::Command::trajectories;
  else if (scan->parsed()) command = singlet::Command::scan;
  else if (physical->parsed()) command = singlet::Command::physical;
  else if (!decompose->parsed()) {
    std::cerr << app.help();
    return singlet::exit_config;
  }
  return singlet::run_command(command, to_overrides(flags), std::cout, std::cerr);
}
