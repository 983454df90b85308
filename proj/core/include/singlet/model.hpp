#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "singlet/collective_spin.hpp"
#include "singlet/sparse_operator.hpp"
#include "singlet/sweep_schedule.hpp"

namespace singlet {

/// Cavity-QED inputs (angular frequencies, any consistent unit).
struct MicroscopicParams {
  double g = 0.0;                 ///< single-atom cavity coupling
  double rabi_minus = 0.0;        ///< sigma- laser Rabi frequency
  double rabi_plus = 0.0;         ///< sigma+ laser Rabi frequency
  double detuning = 0.0;          ///< detuning from atomic resonance, nonzero
  double cavity_frequency = 0.0;
  double laser_minus = 0.0;       ///< bare frequency of the sigma- laser
  double laser_plus = 0.0;        ///< bare frequency of the sigma+ laser
  double zeeman_splitting = 0.0;  ///< linear Zeeman splitting of F = 1
  double kappa = 0.0;             ///< cavity field decay rate
  int atoms = 0;

  void validate() const;
};

struct EffectiveDickeParams {
  double omega = 0.0;         ///< effective cavity detuning
  double omega0 = 0.0;        ///< effective spin splitting
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double kappa = 0.0;
  int atoms = 0;

  void validate() const;
};

struct SpinorModelParams {
  double interaction = 0.0;   ///< Lambda
  double decay = 0.0;         ///< Gamma, collective decay rate (>= 0)
  double linear_shift = 0.0;  ///< omega0', residual Sz term
  int atoms = 0;

  void validate() const;
};

EffectiveDickeParams effective_dicke_params(const MicroscopicParams& micro);

/// Adiabatic elimination of the cavity. Appends a warning when the dispersive
/// condition |omega| >= 10 max(|omega0|, lambda_-) fails or lambda_+ != 0.
/// Rejects omega == 0.
SpinorModelParams spinor_params(const EffectiveDickeParams& dicke,
                                std::vector<std::string>* warnings = nullptr);

/// Truncated Fock space of the cavity mode.
class CavitySpace {
 public:
  explicit CavitySpace(int n_max, double monitor_threshold = 1e-6);
  static int default_truncation(int atoms);

  int n_max() const { return n_max_; }
  int dimension() const { return n_max_ + 1; }
  double monitor_threshold() const { return monitor_threshold_; }
  const SparseOperator& annihilation() const { return annihilation_; }
  SparseOperator number() const;

 private:
  int n_max_;
  double monitor_threshold_;
  SparseOperator annihilation_;
};

enum class ModelVariant { dicke, tavis_cummings, spinor, reduced };
std::string_view to_string(ModelVariant v);
ModelVariant model_variant_from_string(std::string_view name);

/// Layout of the model Hilbert space. Composite index = spin_index * (n_max + 1) + n.
enum class SpaceKind { spin, spin_cavity, pair };

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::spin;
  int atoms = 0;
  int n_max = 0;
  std::size_t dimension() const;
};

/// Hermitian operator multiplied by a real time-dependent coefficient.
struct DrivenTerm {
  SparseOperator op;
  std::function<double(double)> coefficient;
  std::function<double(double)> coefficient_integral;  ///< integral of coefficient from 0 to t
};

/// Master-equation channel rate * D[op]. The trajectory jump operator is sqrt(2 rate) op
/// and the no-jump drift is -i rate op^dagger op.
struct JumpChannel {
  SparseOperator op;
  double rate = 0.0;
};

struct NamedObservable {
  std::string name;
  SparseOperator op;
};

/// Integer label conserved by the Hamiltonian; each channel shifts it by a fixed amount.
struct ConservedCharge {
  std::string name;
  std::vector<int> values;           ///< one per basis state
  std::vector<int> channel_shifts;   ///< one per jump channel
};

/// Parameters the model was built from, for config round-trips.
struct ModelDescriptor {
  ModelVariant variant = ModelVariant::spinor;
  int atoms = 0;
  std::optional<EffectiveDickeParams> dicke;
  std::optional<SpinorModelParams> spinor;
  std::optional<SweepSchedule> schedule;
  int n_max = 0;
};

/// Dimensionless model ready for propagation. Dicke-type models are in units of
/// kappa, spinor-type models in units of |Lambda|.
struct EffectiveModel {
  ModelDescriptor descriptor;
  SpaceDescriptor space;
  SparseOperator static_hamiltonian;
  std::vector<DrivenTerm> driven_terms;
  std::vector<JumpChannel> channels;
  /// Extra anti-Hermitian drift -i K not tied to a monitored channel (reduced variant).
  std::optional<SparseOperator> extra_decay;

  SparseOperator spin_length_squared;
  /// Singlet amplitudes in the spin (or pair) basis; absent for odd N.
  std::optional<ComplexVector> singlet;
  std::vector<NamedObservable> observables;
  std::optional<ConservedCharge> charge;
  /// Weight 1 on states whose population is monitored (top Fock levels).
  std::optional<Eigen::VectorXd> truncation_weights;
  double truncation_threshold = 1e-6;

  std::size_t dimension() const { return space.dimension(); }
  SparseOperator hamiltonian(double t) const;
  /// Sum of rate c^dag c over channels plus the extra decay.
  SparseOperator decay_operator() const;
  /// H(t) - i * decay_operator().
  SparseOperator effective_hamiltonian(double t) const;

  /// <psi|A|psi> / <psi|psi>, real part.
  double expectation(const SparseOperator& op, const ComplexVector& psi) const;
  /// Population of the singlet (spin part), normalized by <psi|psi>. NaN for odd N.
  double singlet_overlap(const ComplexVector& psi) const;
  double truncation_population(const ComplexVector& psi) const;
  const NamedObservable* find_observable(std::string_view name) const;
};

EffectiveModel build_dicke_model(const EffectiveDickeParams& params, const BasisPtr& basis,
                                 const CavitySpace& cavity);

/// H(t) = (Lambda/N)(Sx^2 + Sy^2) - q(t) Lambda N0 [+ omega0' Sz], channel (S-, Gamma/N).
EffectiveModel build_spinor_model(const SpinorModelParams& params, const SweepSchedule& schedule,
                                  const BasisPtr& basis);

/// Spinor model restricted to |k, N-2k, k>. The collective decay enters only as
/// the no-jump drift (Gamma/N)(Sx^2+Sy^2); there are no jump channels.
EffectiveModel build_reduced_model(const SpinorModelParams& params, const SweepSchedule& schedule);

/// Initial state |n = 0> (x) spin for a composite model, or the spin state itself.
ComplexVector model_state(const EffectiveModel& model, const SpinStateVector& spin);

}  // namespace singlet
