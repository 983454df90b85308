#pragma once

#include <optional>
#include <string>
#include <vector>

#include "singlet/model.hpp"

namespace singlet {

/// Real symmetric tridiagonal matrix; off[k] couples k and k + 1.
struct TridiagonalOperator {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;

  Eigen::Index size() const { return diag.size(); }
  Eigen::MatrixXd dense() const;
};

/// Sx^2 + Sy^2 and N0 on the pair states |k, N-2k, k>, k = 0..N/2.
struct ReducedOperators {
  int atoms = 0;
  TridiagonalOperator transverse;
  Eigen::VectorXd n0;
};

/// Closed-form pair-basis operators. Rejects odd N.
ReducedOperators reduced_operators(int n_atoms);

struct PairBasisState {
  int atoms = 0;
  ComplexVector amplitudes;  ///< unnormalized; the norm is the survival amplitude

  double squared_norm() const { return amplitudes.squaredNorm(); }
  static PairBasisState all_in_zero(int n_atoms);
};

/// |<S=0|psi>|^2 / <psi|psi> on the pair basis.
double pair_singlet_overlap(const ComplexVector& amplitudes);

struct NoJumpConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  /// Sample spacing; 0 records only the start and the end.
  double sample_interval = 0.0;
  /// Largest accepted relative difference between the two survival estimates.
  double consistency_tolerance = 1e-3;

  void validate() const;
};

struct NoJumpSample {
  double time = 0.0;
  double survival_norm = 1.0;
  double survival_product = 1.0;
  double singlet_overlap = 0.0;
  double s2 = 0.0;
};

struct NoJumpResult {
  PairBasisState final_state;
  double survival_norm = 1.0;     ///< |psi(t_max)|^2
  double survival_product = 1.0;  ///< prod_i (1 - (2 gamma / N) <Sx^2+Sy^2>_i dt)
  double singlet_overlap = 0.0;
  double s2 = 0.0;
  std::vector<NoJumpSample> samples;

  double relative_difference() const;
};

/// No-jump evolution under H/|Lambda| = s (Sx^2+Sy^2)/N - s q(t) N0 - i gamma (Sx^2+Sy^2)/N,
/// s = sign(Lambda), gamma = Gamma/|Lambda|, time in 1/|Lambda|.
///
/// The -q N0 term is integrated exactly in an interaction picture; the rest is
/// RK4 with O(N) tridiagonal products. Throws NumericalError when the norm grows
/// or the two survival estimates disagree beyond the configured tolerance.
NoJumpResult propagate_no_jump(const SpinorModelParams& params, const SweepSchedule& schedule,
                               const NoJumpConfig& config,
                               const std::optional<PairBasisState>& initial = std::nullopt);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

struct ScanSpec {
  int atoms = 0;
  double decay_ratio = 0.0;  ///< Gamma / Lambda
  double interaction_sign = 1.0;
  ScheduleKind kind = ScheduleKind::exponential;
  std::vector<double> q0_grid = log_grid(0.5, 20.0, 12);
  std::vector<double> xi_grid = log_grid(0.01, 0.3, 12);
  double t_max = 200.0;
  double dt = 1e-3;
  double consistency_tolerance = 1e-3;
  int threads = 1;

  void validate() const;
};

struct ScanPoint {
  double q0 = 0.0;
  double xi = 0.0;
  bool ok = false;
  std::string error;
  double survival = 0.0;          ///< p_s from the squared norm
  double survival_product = 0.0;
  double singlet_overlap = 0.0;
  double efficiency = 0.0;        ///< p = p_s * overlap
  double s2 = 0.0;
};

struct ScanResult {
  ScanSpec spec;
  std::vector<ScanPoint> points;  ///< xi-major, q0-minor

  std::size_t failures() const;
  /// Successful point with the largest efficiency, if any.
  std::optional<ScanPoint> best() const;
};

/// Runs every (q0, xi) grid point; failures are recorded per point.
ScanResult scan_sweep(const ScanSpec& spec);

}  // namespace singlet
