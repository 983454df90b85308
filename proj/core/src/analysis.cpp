#include "singlet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace singlet {

double spin_length(double s2) {
  if (!(s2 >= -1e-9)) throw std::invalid_argument("S^2 must be nonnegative");
  return 0.5 * (std::sqrt(1.0 + 4.0 * std::max(s2, 0.0)) - 1.0);
}

EntanglementReport entanglement_witness(const SpinEnsembleBasis& basis, const ComplexMatrix& rho_spin) {
  if (static_cast<std::size_t>(rho_spin.rows()) != basis.dimension()) {
    throw std::invalid_argument("density matrix does not match the basis");
  }
  const CollectiveOperators ops(basis);
  const double tr = rho_spin.trace().real();
  auto second_moment = [&](CollectiveOp which) {
    const auto& a = ops.get(which).matrix();
    const SparseOperator sq(SparseOperator::Matrix(a * a), "sq", true);
    return trace_product(sq, rho_spin).real() / tr;
  };
  EntanglementReport r;
  r.atoms = basis.atoms();
  r.sx2 = second_moment(CollectiveOp::Sx);
  r.sy2 = second_moment(CollectiveOp::Sy);
  r.sz2 = second_moment(CollectiveOp::Sz);
  r.s2 = trace_product(ops.get(CollectiveOp::S2), rho_spin).real() / tr;
  r.margin = double(r.atoms) - r.s2;
  r.unentangled_bound_placeholder = static_cast<int>(std::floor(std::max(r.s2, 0.0) / 2.0));
  return r;
}

EntanglementReport entanglement_witness(const SpinStateVector& state) {
  state.validate();
  return entanglement_witness(*state.basis, state.amplitudes * state.amplitudes.adjoint());
}

ComplexMatrix spin_density(const EffectiveModel& model, const ComplexMatrix& rho) {
  const auto basis = build_basis(model.space.atoms);
  const auto dim = static_cast<Eigen::Index>(basis->dimension());
  switch (model.space.kind) {
    case SpaceKind::spin:
      return rho;
    case SpaceKind::spin_cavity: {
      const Eigen::Index cav = model.space.n_max + 1;
      ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
          Complex acc = 0.0;
          for (Eigen::Index n = 0; n < cav; ++n) acc += rho(i * cav + n, j * cav + n);
          out(i, j) = acc;
        }
      }
      return out;
    }
    case SpaceKind::pair: {
      const auto idx = basis->pair_indices();
      ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          out(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b])) =
              rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown model space");
}

ComplexMatrix spin_density(const EffectiveModel& model, const ComplexVector& psi) {
  if (model.space.kind == SpaceKind::spin_cavity) {
    // Reshape psi to (spin x cavity); rho_spin = Psi Psi^dag.
    const Eigen::Index cav = model.space.n_max + 1;
    const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        psi.data(), psi.size() / cav, cav);
    return m * m.adjoint();
  }
  return spin_density(model, ComplexMatrix(psi * psi.adjoint()));
}

EntanglementReport entanglement_witness(const EffectiveModel& model, const ComplexVector& psi) {
  return entanglement_witness(*build_basis(model.space.atoms), spin_density(model, psi));
}

EntanglementReport entanglement_witness(const EffectiveModel& model, const DensityMatrix& rho) {
  return entanglement_witness(*build_basis(model.space.atoms), spin_density(model, rho.rho));
}

HeraldReport heralded_fidelity(const std::vector<DickeComponent>& decomposition, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("detection efficiency must lie in [0, 1]");
  if (decomposition.empty()) throw std::invalid_argument("empty decomposition");
  HeraldReport r;
  r.atoms = 2 * (static_cast<int>(decomposition.size()) - 1);
  r.efficiency = eta;
  double total = 0.0;
  for (const auto& c : decomposition) {
    // pow(0, 0) = 1 keeps the k = 0 term at eta = 1.
    const double w = std::pow(1.0 - eta, 2 * c.k) * c.weight;
    r.weights.push_back(w);
    total += w;
  }
  r.fidelity = r.weights.front() / total;
  return r;
}

HeraldReport heralded_fidelity(int n_atoms, double eta) {
  return heralded_fidelity(dicke_decomposition(n_atoms), eta);
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double Histogram::mode() const {
  if (total() == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto it = std::max_element(counts.begin(), counts.end());
  return centers[static_cast<std::size_t>(it - counts.begin())];
}

Histogram integer_histogram(const std::vector<double>& values, int max_center) {
  Histogram h;
  for (int i = 0; i <= max_center; ++i) h.centers.push_back(i);
  h.counts.assign(h.centers.size(), 0);
  for (double v : values) {
    const long bin = std::lround(v);
    if (bin >= 0 && bin <= max_center) ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

Histogram s2_histogram(const std::vector<double>& s2_values, int max_spin) {
  std::vector<double> lengths;
  lengths.reserve(s2_values.size());
  for (double v : s2_values) lengths.push_back(spin_length(v));
  Histogram h = integer_histogram(lengths, max_spin);
  for (auto& c : h.centers) c = c * (c + 1.0);
  return h;
}

namespace {

PartitionStats summarize(const std::vector<const TrajectoryRecord*>& part, int atoms) {
  PartitionStats s;
  s.count = part.size();
  std::vector<double> s2;
  std::vector<double> lengths;
  if (!part.empty()) {
    s.min_overlap = std::numeric_limits<double>::infinity();
    s.max_overlap = -std::numeric_limits<double>::infinity();
  }
  for (const auto* r : part) {
    const auto& f = r->final_sample();
    s.mean_s2 += f.s2;
    s.mean_overlap += f.singlet_overlap;
    s.min_overlap = std::min(s.min_overlap, f.singlet_overlap);
    s.max_overlap = std::max(s.max_overlap, f.singlet_overlap);
    s2.push_back(f.s2);
    lengths.push_back(spin_length(f.s2));
  }
  if (!part.empty()) {
    s.mean_s2 /= double(part.size());
    s.mean_overlap /= double(part.size());
  }
  s.s2_bins = s2_histogram(s2, atoms);
  s.spin_length_bins = integer_histogram(lengths, atoms);
  return s;
}

}  // namespace

double JumpSplit::no_jump_fraction() const {
  const std::size_t valid = without_jumps.count + with_jumps.count;
  return valid == 0 ? std::numeric_limits<double>::quiet_NaN() : double(without_jumps.count) / double(valid);
}

JumpSplit split_by_jumps(const std::vector<TrajectoryRecord>& records, int atoms) {
  if (records.empty()) throw std::invalid_argument("split_by_jumps needs at least one record");
  std::vector<const TrajectoryRecord*> quiet;
  std::vector<const TrajectoryRecord*> loud;
  JumpSplit out;
  out.total = records.size();
  for (const auto& r : records) {
    if (!r.valid() || r.samples.empty()) {
      ++out.flagged;
      continue;
    }
    (r.jumps.empty() ? quiet : loud).push_back(&r);
  }
  out.without_jumps = summarize(quiet, atoms);
  out.with_jumps = summarize(loud, atoms);
  return out;
}

RegimeReport regime_check(const EffectiveDickeParams& params) {
  if (params.atoms < 1) throw std::invalid_argument("regime check needs N >= 1");
  RegimeReport r;
  const double coupling = std::abs(params.lambda_minus) * std::sqrt(3.0 / double(params.atoms));
  r.ratio = params.kappa > 0.0 ? coupling / params.kappa : std::numeric_limits<double>::infinity();
  r.pass = r.ratio >= 5.0;
  std::ostringstream msg;
  msg << "lambda_- sqrt(3/N) / kappa = " << r.ratio;
  if (!r.pass) msg << " < 5: projection is slower than the cavity decay time";
  r.message = msg.str();
  return r;
}

EfficiencyReport protocol_efficiency(double survival, double overlap, int repetitions) {
  if (!(survival >= 0.0 && survival <= 1.0)) throw std::invalid_argument("p_s must lie in [0, 1]");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw std::invalid_argument("overlap must lie in [0, 1]");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  EfficiencyReport r;
  r.repetitions = repetitions;
  r.single_shot = survival * overlap;
  r.cumulative = 1.0 - std::pow(1.0 - r.single_shot, repetitions);
  return r;
}

}  // namespace singlet
