#pragma once

#include <vector>

#include "singlet/model.hpp"

namespace singlet {

struct DensityMatrix {
  SpaceDescriptor space;
  ComplexMatrix rho;

  static DensityMatrix pure(const SpaceDescriptor& space, const ComplexVector& psi);
  double trace() const { return rho.trace().real(); }
  /// Throws NumericalError when the trace or the smallest eigenvalue is off by more than `tolerance`.
  void validate(double tolerance = 1e-8) const;
};

struct MasterEquationConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  double sample_interval = 0.1;
  /// Dense integration only; larger models are rejected.
  std::size_t dimension_cap = 2000;
  double trace_tolerance = 1e-8;

  void validate() const;
};

struct DensitySample {
  double time = 0.0;
  double trace = 1.0;
  double s2 = 0.0;
  double singlet_overlap = 0.0;
  std::vector<double> observables;  ///< same order as EffectiveModel::observables
};

struct MasterEquationResult {
  std::vector<DensitySample> samples;
  DensityMatrix final_state;
};

/// Tr(A rho).
Complex trace_product(const SparseOperator& op, const ComplexMatrix& rho);

/// RK4 integration of d rho/dt = -i[H(t), rho] + sum_c rate_c (2 c rho c^dag - {c^dag c, rho}).
/// Validation oracle for the trajectory engine; models with unmonitored decay are rejected.
MasterEquationResult integrate_master_equation(const EffectiveModel& model, const DensityMatrix& rho0,
                                               const MasterEquationConfig& config);

}  // namespace singlet
