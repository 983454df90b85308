#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "singlet/model.hpp"
#include "singlet/reduced_sweep.hpp"
#include "singlet/trajectory.hpp"

namespace singlet {

enum class Command { decompose, trajectories, scan, physical };
std::string_view to_string(Command c);

/// Exit codes of the command-line runner.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_partial = 4 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SINGLET_OUT_DIR";

/// Flag-level settings that win over config-file values.
struct Overrides {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<int> atoms;
};

enum class InitialKind { all_in_zero, singlet, dicke };

struct InitialStateSpec {
  InitialKind kind = InitialKind::all_in_zero;
  int k = 0;  ///< Dicke state |2k, 0> when kind == dicke
};

struct TrajectoryExperiment {
  ModelVariant variant = ModelVariant::spinor;
  int atoms = 0;
  EffectiveDickeParams dicke;      ///< kappa units, used by dicke / tavis_cummings
  int n_max = 0;                   ///< 0 selects the default truncation
  double interaction_sign = 1.0;   ///< sign of Lambda; spinor runs are in |Lambda| units
  std::vector<double> decay_ratios{0.0};  ///< Gamma / |Lambda|, one ensemble per value
  double linear_shift = 0.0;       ///< omega0' / |Lambda|
  SweepSchedule schedule;
  InitialStateSpec initial;
  TrajectoryConfig run;
};

struct PhysicalExperiment {
  std::optional<MicroscopicParams> microscopic;
  std::optional<EffectiveDickeParams> effective;
  /// Multiplies every input frequency: 2 pi when inputs are ordinary frequencies (Hz).
  double angular_scale = 1.0;
  double sweep_duration = 200.0;  ///< Lambda t_max to convert
};

struct ExperimentConfig {
  Command command = Command::decompose;
  std::string preset;
  int atoms = 0;  ///< decompose
  TrajectoryExperiment trajectories;
  ScanSpec scan;
  PhysicalExperiment physical;
  std::filesystem::path output_dir;
  std::string snapshot;  ///< merged JSON document actually used
};

std::vector<std::string> preset_names();
/// JSON text of a preset; throws ConfigError for unknown names.
std::string preset_json(std::string_view name);

/// Merges preset, config file and overrides, then validates. Throws ConfigError
/// listing every offending field.
ExperimentConfig load_experiment(Command command, const Overrides& overrides);
/// Same, from JSON text instead of a file.
ExperimentConfig parse_experiment(Command command, std::string_view json_text, const Overrides& overrides);

struct OutputFile {
  std::filesystem::path path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunOutcome {
  int exit_code = exit_ok;
  std::vector<OutputFile> outputs;
  std::filesystem::path manifest;
};

/// Runs one command, writing data files and manifest.json into config.output_dir.
/// Human-readable progress goes to `log`.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

/// load + run with exceptions mapped to exit codes; messages go to `err`.
int run_command(Command command, const Overrides& overrides, std::ostream& log, std::ostream& err);

std::string_view version_tag();

}  // namespace singlet
