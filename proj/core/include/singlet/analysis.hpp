#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "singlet/collective_spin.hpp"
#include "singlet/master_equation.hpp"
#include "singlet/model.hpp"
#include "singlet/trajectory.hpp"

namespace singlet {

/// S with S(S+1) = S2. Rejects S2 < 0 (round-off down to -1e-9 is clamped).
double spin_length(double s2);

struct EntanglementReport {
  int atoms = 0;
  double sx2 = 0.0;
  double sy2 = 0.0;
  double sz2 = 0.0;
  double s2 = 0.0;
  double margin = 0.0;  ///< N - <S^2>; positive certifies entanglement
  /// Placeholder bound floor(<S^2> / 2) on atoms that are not entangled. The
  /// exact form of the cited bound is not reproduced here; treat as indicative.
  int unentangled_bound_placeholder = 0;

  bool entangled() const { return margin > 0.0; }
};

/// Witness from a spin-space density matrix in the basis order of `basis`.
EntanglementReport entanglement_witness(const SpinEnsembleBasis& basis, const ComplexMatrix& rho_spin);
EntanglementReport entanglement_witness(const SpinStateVector& state);
/// Traces out the cavity (or lifts pair amplitudes) first.
EntanglementReport entanglement_witness(const EffectiveModel& model, const ComplexVector& psi);
EntanglementReport entanglement_witness(const EffectiveModel& model, const DensityMatrix& rho);

/// Spin-space density matrix of a model state, in the full symmetric basis.
ComplexMatrix spin_density(const EffectiveModel& model, const ComplexMatrix& rho);
ComplexMatrix spin_density(const EffectiveModel& model, const ComplexVector& psi);

struct HeraldReport {
  int atoms = 0;
  double efficiency = 0.0;        ///< detection efficiency eta
  double fidelity = 0.0;
  std::vector<double> weights;    ///< (1 - eta)^{2k} |d_k|^2, k = 0..N/2, unnormalized
};

HeraldReport heralded_fidelity(const std::vector<DickeComponent>& decomposition, double eta);
HeraldReport heralded_fidelity(int n_atoms, double eta);

/// Counts per bin; bin i is centred on centers[i].
struct Histogram {
  std::vector<double> centers;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  /// Centre of the fullest bin (lowest centre on ties); NaN when empty.
  double mode() const;
};

/// Unit-width bins centred on the integers 0..max_center.
Histogram integer_histogram(const std::vector<double>& values, int max_center);

/// Bins <S^2> values by their nearest integer spin length; bin centres are S(S+1).
Histogram s2_histogram(const std::vector<double>& s2_values, int max_spin);

struct PartitionStats {
  std::size_t count = 0;
  double mean_s2 = 0.0;
  double mean_overlap = 0.0;
  double min_overlap = 0.0;
  double max_overlap = 0.0;
  Histogram s2_bins;           ///< final <S^2> binned by spin length
  Histogram spin_length_bins;  ///< final spin length, unit bins
};

struct JumpSplit {
  std::size_t total = 0;
  std::size_t flagged = 0;  ///< records not in either partition (invalid status)
  PartitionStats without_jumps;
  PartitionStats with_jumps;

  double no_jump_fraction() const;  ///< among valid records
};

/// Partitions valid records by whether any jump occurred, using final samples.
JumpSplit split_by_jumps(const std::vector<TrajectoryRecord>& records, int atoms);

struct RegimeReport {
  double ratio = 0.0;  ///< lambda_- sqrt(3/N) / kappa
  bool pass = false;
  std::string message;
};

/// Warns when lambda_- sqrt(3/N) / kappa < 5.
RegimeReport regime_check(const EffectiveDickeParams& params);

struct EfficiencyReport {
  double single_shot = 0.0;  ///< p = p_s * overlap
  double cumulative = 0.0;   ///< 1 - (1 - p)^repetitions
  int repetitions = 1;
};

EfficiencyReport protocol_efficiency(double survival, double overlap, int repetitions = 1);

}  // namespace singlet
