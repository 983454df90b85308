#include "singlet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace singlet {

namespace {

SparseOperator identity_like(Eigen::Index n) { return SparseOperator::identity(n); }

Eigen::VectorXd top_fock_weights(std::size_t spin_dim, int n_max) {
  const auto cav = static_cast<std::size_t>(n_max + 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spin_dim * cav));
  for (std::size_t s = 0; s < spin_dim; ++s) {
    for (int n = std::max(0, n_max - 1); n <= n_max; ++n) {
      w[static_cast<Eigen::Index>(s * cav + static_cast<std::size_t>(n))] = 1.0;
    }
  }
  return w;
}

std::optional<ComplexVector> singlet_amplitudes(const BasisPtr& basis) {
  if (basis->atoms() % 2 != 0) return std::nullopt;
  return singlet_vector(basis).amplitudes;
}

}  // namespace

void MicroscopicParams::validate() const {
  if (detuning == 0.0) throw std::invalid_argument("detuning must be nonzero");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (atoms < 1) throw std::invalid_argument("atom number must be >= 1");
}

void EffectiveDickeParams::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (atoms < 1) throw std::invalid_argument("atom number must be >= 1");
}

void SpinorModelParams::validate() const {
  if (!(decay >= 0.0)) throw std::invalid_argument("collective decay Gamma must be >= 0");
  if (atoms < 1) throw std::invalid_argument("atom number must be >= 1");
}

EffectiveDickeParams effective_dicke_params(const MicroscopicParams& m) {
  m.validate();
  const double n = m.atoms;
  EffectiveDickeParams d;
  d.omega = m.cavity_frequency - 0.5 * (m.laser_minus + m.laser_plus) + n * m.g * m.g / (3.0 * m.detuning);
  d.omega0 = m.zeeman_splitting - 0.5 * (m.laser_minus - m.laser_plus) +
             (m.rabi_plus * m.rabi_plus - m.rabi_minus * m.rabi_minus) / (24.0 * m.detuning);
  d.lambda_minus = std::sqrt(n) * m.g * m.rabi_minus / (12.0 * m.detuning);
  d.lambda_plus = std::sqrt(n) * m.g * m.rabi_plus / (12.0 * m.detuning);
  d.kappa = m.kappa;
  d.atoms = m.atoms;
  return d;
}

SpinorModelParams spinor_params(const EffectiveDickeParams& d, std::vector<std::string>* warnings) {
  d.validate();
  if (d.omega == 0.0) {
    throw std::invalid_argument("omega = 0: the cavity cannot be adiabatically eliminated");
  }
  const double lambda = d.lambda_minus;
  const double denom = 2.0 * (d.omega * d.omega + d.kappa * d.kappa);
  SpinorModelParams p;
  p.interaction = -d.omega * lambda * lambda / denom;
  p.decay = d.kappa * lambda * lambda / denom;  // = -(kappa/omega) Lambda
  p.linear_shift = d.omega0 + p.interaction / d.atoms;
  p.atoms = d.atoms;
  if (warnings) {
    const double scale = std::max(std::abs(d.omega0), std::abs(lambda));
    if (std::abs(d.omega) < 10.0 * scale) {
      std::ostringstream msg;
      msg << "dispersive condition weak: |omega| = " << std::abs(d.omega)
          << " < 10 max(|omega0|, lambda_-) = " << 10.0 * scale;
      warnings->push_back(msg.str());
    }
    if (d.lambda_plus != 0.0) {
      warnings->push_back("lambda_+ != 0 is ignored by the spinor reduction (assumes Omega_+ = 0)");
    }
  }
  return p;
}

CavitySpace::CavitySpace(int n_max, double monitor_threshold)
    : n_max_(n_max), monitor_threshold_(monitor_threshold) {
  if (n_max < 1) throw std::invalid_argument("cavity truncation n_max must be >= 1");
  std::vector<Eigen::Triplet<Complex>> t;
  for (int n = 1; n <= n_max; ++n) t.emplace_back(n - 1, n, std::sqrt(double(n)));
  SparseOperator::Matrix a(n_max + 1, n_max + 1);
  a.setFromTriplets(t.begin(), t.end());
  annihilation_ = SparseOperator(std::move(a), "a");
}

int CavitySpace::default_truncation(int atoms) { return std::max(2 * atoms, 20); }

SparseOperator CavitySpace::number() const {
  return (annihilation_.adjoint() * annihilation_).relabel("a^dag a", true);
}

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::dicke: return "dicke";
    case ModelVariant::tavis_cummings: return "tavis_cummings";
    case ModelVariant::spinor: return "spinor";
    case ModelVariant::reduced: return "reduced";
  }
  return "?";
}

ModelVariant model_variant_from_string(std::string_view name) {
  if (name == "dicke") return ModelVariant::dicke;
  if (name == "tavis_cummings") return ModelVariant::tavis_cummings;
  if (name == "spinor") return ModelVariant::spinor;
  if (name == "reduced") return ModelVariant::reduced;
  throw std::invalid_argument("unknown model variant '" + std::string(name) + "'");
}

std::size_t SpaceDescriptor::dimension() const {
  switch (kind) {
    case SpaceKind::spin: return SpinEnsembleBasis::dimension_for(atoms);
    case SpaceKind::spin_cavity:
      return SpinEnsembleBasis::dimension_for(atoms) * static_cast<std::size_t>(n_max + 1);
    case SpaceKind::pair: return static_cast<std::size_t>(atoms / 2 + 1);
  }
  return 0;
}

SparseOperator EffectiveModel::hamiltonian(double t) const {
  SparseOperator::Matrix h = static_hamiltonian.matrix();
  for (const auto& term : driven_terms) h += term.coefficient(t) * term.op.matrix();
  return SparseOperator(std::move(h), "H(t)", true);
}

SparseOperator EffectiveModel::decay_operator() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  SparseOperator::Matrix k(n, n);
  for (const auto& ch : channels) k += ch.rate * SparseOperator::Matrix(ch.op.matrix().adjoint() * ch.op.matrix());
  if (extra_decay) k += extra_decay->matrix();
  return SparseOperator(std::move(k), "K", true);
}

SparseOperator EffectiveModel::effective_hamiltonian(double t) const {
  SparseOperator::Matrix h = hamiltonian(t).matrix() + Complex(0.0, -1.0) * decay_operator().matrix();
  return SparseOperator(std::move(h), "H_eff(t)", false);
}

double EffectiveModel::expectation(const SparseOperator& op, const ComplexVector& psi) const {
  const double n2 = psi.squaredNorm();
  return psi.dot(op.matrix() * psi).real() / n2;
}

double EffectiveModel::singlet_overlap(const ComplexVector& psi) const {
  if (!singlet) return std::numeric_limits<double>::quiet_NaN();
  const double n2 = psi.squaredNorm();
  if (space.kind != SpaceKind::spin_cavity) {
    return std::norm(singlet->dot(psi)) / n2;
  }
  const Eigen::Index cav = space.n_max + 1;
  double total = 0.0;
  for (Eigen::Index n = 0; n < cav; ++n) {
    Complex amp = 0.0;
    for (Eigen::Index s = 0; s < singlet->size(); ++s) amp += std::conj((*singlet)[s]) * psi[s * cav + n];
    total += std::norm(amp);
  }
  return total / n2;
}

double EffectiveModel::truncation_population(const ComplexVector& psi) const {
  if (!truncation_weights) return 0.0;
  return truncation_weights->dot(psi.cwiseAbs2()) / psi.squaredNorm();
}

const NamedObservable* EffectiveModel::find_observable(std::string_view name) const {
  for (const auto& o : observables) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

EffectiveModel build_dicke_model(const EffectiveDickeParams& params, const BasisPtr& basis,
                                 const CavitySpace& cavity) {
  params.validate();
  if (basis->atoms() != params.atoms) throw std::invalid_argument("Dicke model: basis N does not match params");
  const CollectiveOperators spin(*basis);
  const auto spin_dim = static_cast<Eigen::Index>(basis->dimension());
  const SparseOperator id_spin = identity_like(spin_dim);
  const SparseOperator id_cav = identity_like(cavity.dimension());
  const SparseOperator& a = cavity.annihilation();
  const SparseOperator a_dag = a.adjoint();

  const double k = params.kappa;
  const double coupling_norm = std::sqrt(2.0 * params.atoms);
  const double lm = params.lambda_minus / k / coupling_norm;
  const double lp = params.lambda_plus / k / coupling_norm;

  const auto& sp = spin.get(CollectiveOp::Splus);
  const auto& sm = spin.get(CollectiveOp::Sminus);
  const auto& sz = spin.get(CollectiveOp::Sz);
  const SparseOperator n_ph = cavity.number();

  SparseOperator::Matrix h = (params.omega / k) * kron(id_spin, n_ph).matrix() +
                             (params.omega0 / k) * kron(sz, id_cav).matrix();
  if (lm != 0.0) h += lm * (kron(sp, a).matrix() + kron(sm, a_dag).matrix());
  if (lp != 0.0) h += lp * (kron(sm, a).matrix() + kron(sp, a_dag).matrix());

  EffectiveModel m;
  const bool tc = params.lambda_plus == 0.0;
  m.descriptor.variant = tc ? ModelVariant::tavis_cummings : ModelVariant::dicke;
  m.descriptor.atoms = params.atoms;
  m.descriptor.dicke = params;
  m.descriptor.n_max = cavity.n_max();
  m.space = {SpaceKind::spin_cavity, params.atoms, cavity.n_max()};
  m.static_hamiltonian = SparseOperator(std::move(h), "H_dicke", true);
  m.channels.push_back({kron(id_spin, a, "a"), 1.0});
  m.spin_length_squared = kron(spin.get(CollectiveOp::S2), id_cav, "S2");
  m.singlet = singlet_amplitudes(basis);
  m.observables.push_back({"photon_number", kron(id_spin, n_ph, "a^dag a")});
  m.observables.push_back({"Sz", kron(sz, id_cav, "S_z")});
  m.truncation_weights = top_fock_weights(basis->dimension(), cavity.n_max());
  m.truncation_threshold = cavity.monitor_threshold();

  if (tc) {
    ConservedCharge q;
    q.name = "excitation";
    const auto cav = static_cast<std::size_t>(cavity.dimension());
    q.values.resize(basis->dimension() * cav);
    for (std::size_t s = 0; s < basis->dimension(); ++s) {
      for (std::size_t n = 0; n < cav; ++n) {
        q.values[s * cav + n] = static_cast<int>(n) + basis->state(s).magnetization();
      }
    }
    q.channel_shifts = {-1};
    m.charge = std::move(q);
    m.observables.push_back({"excitation", (kron(id_spin, n_ph) + kron(sz, id_cav)).relabel("a^dag a + S_z", true)});
  }
  return m;
}

EffectiveModel build_spinor_model(const SpinorModelParams& params, const SweepSchedule& schedule,
                                  const BasisPtr& basis) {
  params.validate();
  schedule.validate();
  if (basis->atoms() != params.atoms) throw std::invalid_argument("spinor model: basis N does not match params");
  if (params.interaction == 0.0) throw std::invalid_argument("spinor model requires Lambda != 0 (unit of energy)");
  const CollectiveOperators spin(*basis);
  const double unit = std::abs(params.interaction);
  const double sign = params.interaction > 0.0 ? 1.0 : -1.0;
  const double n = params.atoms;

  const auto& sx = spin.get(CollectiveOp::Sx);
  const auto& sy = spin.get(CollectiveOp::Sy);
  SparseOperator::Matrix transverse = (sx.matrix() * sx.matrix() + sy.matrix() * sy.matrix()).pruned(1.0, 1e-13);
  SparseOperator::Matrix h = (sign / n) * transverse;
  if (params.linear_shift != 0.0) h += (params.linear_shift / unit) * spin.get(CollectiveOp::Sz).matrix();

  EffectiveModel m;
  m.descriptor.variant = ModelVariant::spinor;
  m.descriptor.atoms = params.atoms;
  m.descriptor.spinor = params;
  m.descriptor.schedule = schedule;
  m.space = {SpaceKind::spin, params.atoms, 0};
  m.static_hamiltonian = SparseOperator(std::move(h), "H_spinor", true);
  m.driven_terms.push_back({spin.get(CollectiveOp::N0),
                            [schedule, sign](double t) { return -sign * schedule.q(t); },
                            [schedule, sign](double t) { return -sign * schedule.integral(t); }});
  if (params.decay > 0.0) {
    m.channels.push_back({spin.get(CollectiveOp::Sminus), params.decay / unit / n});
  }
  m.spin_length_squared = spin.get(CollectiveOp::S2);
  m.singlet = singlet_amplitudes(basis);
  m.observables.push_back({"Sz", spin.get(CollectiveOp::Sz)});
  m.observables.push_back({"N0", spin.get(CollectiveOp::N0)});

  ConservedCharge q;
  q.name = "Sz";
  for (const auto& occ : basis->states()) q.values.push_back(occ.magnetization());
  q.channel_shifts.assign(m.channels.size(), -1);
  m.charge = std::move(q);
  return m;
}

EffectiveModel build_reduced_model(const SpinorModelParams& params, const SweepSchedule& schedule) {
  params.validate();
  schedule.validate();
  if (params.atoms % 2 != 0) throw std::invalid_argument("reduced model: even N required");
  if (params.interaction == 0.0) throw std::invalid_argument("reduced model requires Lambda != 0");
  const int n_atoms = params.atoms;
  const double unit = std::abs(params.interaction);
  const double sign = params.interaction > 0.0 ? 1.0 : -1.0;
  const double n = n_atoms;

  // Sz vanishes on the pair states, so S^2 restricted there equals Sx^2 + Sy^2.
  const Eigen::MatrixXd s2 = pair_subspace_s2(n_atoms);
  const SparseOperator::Matrix transverse = s2.cast<Complex>().sparseView(1.0, 1e-14);
  const SparseOperator transverse_op(transverse, "Sx2+Sy2", true);
  Eigen::VectorXd n0(s2.rows());
  for (Eigen::Index k = 0; k < n0.size(); ++k) n0[k] = n - 2.0 * double(k);

  EffectiveModel m;
  m.descriptor.variant = ModelVariant::reduced;
  m.descriptor.atoms = n_atoms;
  m.descriptor.spinor = params;
  m.descriptor.schedule = schedule;
  m.space = {SpaceKind::pair, n_atoms, 0};
  m.static_hamiltonian = SparseOperator(SparseOperator::Matrix((sign / n) * transverse), "H_reduced", true);
  m.driven_terms.push_back({SparseOperator::diagonal(n0, "N_0"),
                            [schedule, sign](double t) { return -sign * schedule.q(t); },
                            [schedule, sign](double t) { return -sign * schedule.integral(t); }});
  if (params.decay > 0.0) {
    m.extra_decay = SparseOperator(SparseOperator::Matrix((params.decay / unit / n) * transverse), "K_reduced", true);
  }
  m.spin_length_squared = transverse_op.relabel("S2", true);
  const auto c = singlet_coefficients(n_atoms);
  ComplexVector sv(static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) sv[static_cast<Eigen::Index>(j)] = c[j];
  m.singlet = std::move(sv);
  m.observables.push_back({"N0", SparseOperator::diagonal(n0, "N_0")});
  return m;
}

ComplexVector model_state(const EffectiveModel& model, const SpinStateVector& spin) {
  spin.validate();
  if (spin.basis->atoms() != model.space.atoms) throw std::invalid_argument("state N does not match model");
  switch (model.space.kind) {
    case SpaceKind::spin: return spin.amplitudes;
    case SpaceKind::spin_cavity: {
      const Eigen::Index cav = model.space.n_max + 1;
      ComplexVector v = ComplexVector::Zero(spin.amplitudes.size() * cav);
      for (Eigen::Index s = 0; s < spin.amplitudes.size(); ++s) v[s * cav] = spin.amplitudes[s];
      return v;
    }
    case SpaceKind::pair: {
      const auto idx = spin.basis->pair_indices();
      ComplexVector v(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) v[static_cast<Eigen::Index>(k)] = spin.amplitudes[static_cast<Eigen::Index>(idx[k])];
      return v;
    }
  }
  throw std::invalid_argument("unknown model space");
}

}  // namespace singlet
