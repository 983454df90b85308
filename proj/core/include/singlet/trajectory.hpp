#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "singlet/model.hpp"

namespace singlet {

struct TrajectoryConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  double sample_interval = 0.1;
  std::uint64_t seed = 0;
  std::size_t n_traj = 1;
  /// Bisection tolerance on the jump time; 0 selects dt * 1e-3.
  double jump_time_tolerance = 0.0;
  /// Worker threads for ensembles; 0 = hardware concurrency.
  int threads = 1;
  /// Propagate inside one conserved-charge sector when the model declares a charge.
  bool use_charge_sectors = true;
  /// Largest tolerated relative norm increase per step (and drift per step for
  /// models without jump channels).
  double norm_step_tolerance = 1e-6;

  void validate() const;
  double jump_tolerance() const { return jump_time_tolerance > 0.0 ? jump_time_tolerance : dt * 1e-3; }
  std::size_t sample_count() const;       ///< number of sample intervals in t_max
  std::size_t steps_per_sample() const;
};

struct JumpEvent {
  double time = 0.0;
  int channel = 0;
};

struct TrajectorySample {
  double time = 0.0;
  double s2 = 0.0;               ///< <S^2> on the normalized state
  double singlet_overlap = 0.0;
  std::size_t jumps = 0;
  double norm = 1.0;             ///< squared norm of the unnormalized no-jump state
  std::vector<std::size_t> channel_jumps;
  std::vector<double> observables;  ///< same order as EffectiveModel::observables
};

enum class RecordStatus { ok, truncation_violation, unstable };

struct TrajectoryRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jumps;
  std::vector<TrajectorySample> samples;
  ComplexVector final_state;  ///< normalized, model basis
  RecordStatus status = RecordStatus::ok;
  std::string diagnostic;

  bool valid() const { return status == RecordStatus::ok; }
  const TrajectorySample& final_sample() const { return samples.back(); }
};

/// Arithmetic means over the valid records at each sample time.
struct EnsembleAverage {
  std::vector<double> time;
  std::vector<double> s2;
  std::vector<double> s2_stderr;
  std::vector<double> singlet_overlap;
  std::vector<double> jumps;
  std::vector<std::vector<double>> observables;         ///< [observable][sample]
  std::vector<std::vector<double>> observables_stderr;
  std::size_t contributing = 0;
};

struct EnsembleResult {
  std::vector<TrajectoryRecord> records;
  EnsembleAverage average;
};

/// State of a deterministic no-jump evolution at one sample time.
struct NoJumpSnapshot {
  double time = 0.0;
  ComplexVector state;  ///< unnormalized, model basis
};

/// Monte-Carlo wave-function propagator for one model.
///
/// Between jumps the state obeys i d/dt psi = H_eff(t) psi with
/// H_eff = H(t) - i sum_c rate_c c^dag c. The real diagonal of H(t) is
/// integrated exactly (integrating-factor RK4); the rest uses classic RK4 with
/// a fixed step that lands on every sample time. A jump fires when the squared
/// norm falls to a uniform draw r; its time is bisected to the configured
/// tolerance and the channel is drawn with weight rate_c |c psi|^2.
///
/// When the model declares a conserved charge the state is propagated inside
/// the charge sector it occupies. The engine is immutable after construction and
/// safe to share between threads.
class TrajectoryEngine {
 public:
  TrajectoryEngine(const EffectiveModel& model, TrajectoryConfig config);
  ~TrajectoryEngine();
  TrajectoryEngine(TrajectoryEngine&&) noexcept;
  TrajectoryEngine& operator=(TrajectoryEngine&&) noexcept;

  const TrajectoryConfig& config() const;
  TrajectoryRecord run(const ComplexVector& psi0, std::size_t index) const;
  std::vector<NoJumpSnapshot> propagate_no_jump(const ComplexVector& psi0) const;
  /// Number of charge sectors compiled (1 when sectors are disabled).
  std::size_t sector_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TrajectoryRecord run_trajectory(const EffectiveModel& model, const ComplexVector& psi0,
                                const TrajectoryConfig& config, std::size_t index);

/// Trajectory i uses Philox stream (config.seed, i); results do not depend on
/// the thread count.
EnsembleResult run_ensemble(const EffectiveModel& model, const ComplexVector& psi0,
                            const TrajectoryConfig& config);

EnsembleAverage average_records(const std::vector<TrajectoryRecord>& records);

}  // namespace singlet
