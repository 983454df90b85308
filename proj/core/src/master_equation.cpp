#include "singlet/master_equation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "singlet/errors.hpp"

namespace singlet {

DensityMatrix DensityMatrix::pure(const SpaceDescriptor& space, const ComplexVector& psi) {
  if (static_cast<std::size_t>(psi.size()) != space.dimension()) {
    throw std::invalid_argument("state dimension does not match the space");
  }
  const ComplexVector unit = psi / psi.norm();
  return {space, unit * unit.adjoint()};
}

void DensityMatrix::validate(double tolerance) const {
  if (rho.rows() != rho.cols() || static_cast<std::size_t>(rho.rows()) != space.dimension()) {
    throw std::invalid_argument("density matrix dimension does not match the space");
  }
  if (std::abs(trace() - 1.0) > tolerance) {
    std::ostringstream msg;
    msg << "density matrix trace " << trace() << " differs from 1";
    throw NumericalError(msg.str());
  }
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  const double lowest = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (lowest < -tolerance) {
    std::ostringstream msg;
    msg << "density matrix has eigenvalue " << lowest;
    throw NumericalError(msg.str());
  }
}

void MasterEquationConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("master equation dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("master equation t_max must be > 0");
  if (!(sample_interval >= dt)) throw std::invalid_argument("sample_interval must be >= dt");
  const double ratio = t_max / sample_interval;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("t_max must be an integer multiple of sample_interval");
  }
}

Complex trace_product(const SparseOperator& op, const ComplexMatrix& rho) {
  Complex sum = 0.0;
  const auto& m = op.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) sum += it.value() * rho(it.col(), r);
  }
  return sum;
}

namespace {

double singlet_population(const EffectiveModel& model, const ComplexMatrix& rho) {
  if (!model.singlet) return std::numeric_limits<double>::quiet_NaN();
  const ComplexVector& s = *model.singlet;
  const Eigen::Index cav = model.space.kind == SpaceKind::spin_cavity ? model.space.n_max + 1 : 1;
  double total = 0.0;
  for (Eigen::Index n = 0; n < cav; ++n) {
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s[i] == Complex(0.0)) continue;
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (s[j] == Complex(0.0)) continue;
        acc += std::conj(s[i]) * rho(i * cav + n, j * cav + n) * s[j];
      }
    }
    total += acc.real();
  }
  return total / rho.trace().real();
}

DensitySample observe(const EffectiveModel& model, double t, const ComplexMatrix& rho) {
  DensitySample out;
  out.time = t;
  out.trace = rho.trace().real();
  out.s2 = trace_product(model.spin_length_squared, rho).real() / out.trace;
  out.singlet_overlap = singlet_population(model, rho);
  for (const auto& o : model.observables) out.observables.push_back(trace_product(o.op, rho).real() / out.trace);
  return out;
}

}  // namespace

MasterEquationResult integrate_master_equation(const EffectiveModel& model, const DensityMatrix& rho0,
                                               const MasterEquationConfig& config) {
  config.validate();
  const std::size_t dim = model.dimension();
  if (dim > config.dimension_cap) {
    std::ostringstream msg;
    msg << "master equation limited to dimension " << config.dimension_cap << " (model has " << dim << ")";
    throw std::invalid_argument(msg.str());
  }
  if (model.extra_decay) throw std::invalid_argument("master equation needs every decay tied to a jump channel");
  if (static_cast<std::size_t>(rho0.rho.rows()) != dim) {
    throw std::invalid_argument("initial density matrix does not match the model");
  }
  rho0.validate(config.trace_tolerance);

  const SparseOperator::Matrix decay = model.decay_operator().matrix();
  std::vector<SparseOperator::Matrix> jumps;
  std::vector<double> weights;
  for (const auto& ch : model.channels) {
    jumps.push_back(ch.op.matrix());
    weights.push_back(2.0 * ch.rate);
  }
  const Complex minus_i(0.0, -1.0);

  auto rhs = [&](double t, const ComplexMatrix& rho) {
    SparseOperator::Matrix h = model.hamiltonian(t).matrix();
    h += minus_i * decay;
    const ComplexMatrix a = minus_i * (h * rho);
    ComplexMatrix out = a + a.adjoint();
    for (std::size_t c = 0; c < jumps.size(); ++c) {
      const ComplexMatrix x = jumps[c] * rho;
      out.noalias() += weights[c] * (jumps[c] * x.adjoint());
    }
    return out;
  };

  const std::size_t n_samples = static_cast<std::size_t>(std::llround(config.t_max / config.sample_interval));
  const std::size_t per_sample =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.sample_interval / config.dt - 1e-9)));
  const double h = config.sample_interval / double(per_sample);

  MasterEquationResult result;
  ComplexMatrix rho = rho0.rho;
  result.samples.push_back(observe(model, 0.0, rho));
  for (std::size_t si = 1; si <= n_samples; ++si) {
    for (std::size_t j = 0; j < per_sample; ++j) {
      const double t = double((si - 1) * per_sample + j) * h;
      const ComplexMatrix k1 = rhs(t, rho);
      const ComplexMatrix k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1);
      const ComplexMatrix k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2);
      const ComplexMatrix k4 = rhs(t + h, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double t = double(si) * config.sample_interval;
    const double trace = rho.trace().real();
    if (!std::isfinite(trace) || std::abs(trace - 1.0) > config.trace_tolerance) {
      std::ostringstream msg;
      msg << "trace drifted to " << trace << " at t = " << t << " (reduce dt)";
      throw NumericalError(msg.str());
    }
    result.samples.push_back(observe(model, t, rho));
  }
  result.final_state = {model.space, rho};
  return result;
}

}  // namespace singlet
