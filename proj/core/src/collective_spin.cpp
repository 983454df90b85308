#include "singlet/collective_spin.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "singlet/errors.hpp"

namespace singlet {

namespace {

const double kSqrt2 = std::sqrt(2.0);

void require_even(int n_atoms, const char* what) {
  if (n_atoms < 2 || n_atoms % 2 != 0) {
    std::ostringstream msg;
    msg << what << ": even N required (got N = " << n_atoms << ")";
    throw std::invalid_argument(msg.str());
  }
}

using Triplets = std::vector<Eigen::Triplet<Complex>>;

template <typename Action>
SparseOperator::Matrix ladder_matrix(const SpinEnsembleBasis& basis, Action action) {
  Triplets triplets;
  triplets.reserve(2 * basis.dimension());
  for (std::size_t col = 0; col < basis.dimension(); ++col) {
    for (const auto& [target, amp] : action(basis.state(col))) {
      triplets.emplace_back(static_cast<Eigen::Index>(basis.index_of(target)),
                            static_cast<Eigen::Index>(col), amp);
    }
  }
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  SparseOperator::Matrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

template <typename Value>
SparseOperator diagonal_operator(const SpinEnsembleBasis& basis, Value value, std::string label) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.dimension()));
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    d[static_cast<Eigen::Index>(i)] = value(basis.state(i));
  }
  return SparseOperator::diagonal(d, std::move(label));
}

}  // namespace

std::vector<LadderTerm> raise(const Occupation& occ) {
  std::vector<LadderTerm> out;
  if (occ.zero > 0) {
    out.emplace_back(Occupation{occ.minus, occ.zero - 1, occ.plus + 1},
                     kSqrt2 * std::sqrt(double(occ.zero) * double(occ.plus + 1)));
  }
  if (occ.minus > 0) {
    out.emplace_back(Occupation{occ.minus - 1, occ.zero + 1, occ.plus},
                     kSqrt2 * std::sqrt(double(occ.minus) * double(occ.zero + 1)));
  }
  return out;
}

std::vector<LadderTerm> lower(const Occupation& occ) {
  std::vector<LadderTerm> out;
  if (occ.zero > 0) {
    out.emplace_back(Occupation{occ.minus + 1, occ.zero - 1, occ.plus},
                     kSqrt2 * std::sqrt(double(occ.zero) * double(occ.minus + 1)));
  }
  if (occ.plus > 0) {
    out.emplace_back(Occupation{occ.minus, occ.zero + 1, occ.plus - 1},
                     kSqrt2 * std::sqrt(double(occ.plus) * double(occ.zero + 1)));
  }
  return out;
}

SpinEnsembleBasis::SpinEnsembleBasis(int n_atoms) : atoms_(n_atoms) {
  if (n_atoms < 1) throw std::invalid_argument("spin ensemble basis requires N >= 1");
  states_.reserve(dimension_for(n_atoms));
  for (int minus = n_atoms; minus >= 0; --minus) {
    for (int zero = n_atoms - minus; zero >= 0; --zero) {
      states_.push_back(Occupation{minus, zero, n_atoms - minus - zero});
    }
  }
}

std::optional<std::size_t> SpinEnsembleBasis::find(const Occupation& occ) const {
  if (occ.minus < 0 || occ.zero < 0 || occ.plus < 0 || occ.atoms() != atoms_) return std::nullopt;
  const auto rest = static_cast<std::size_t>(atoms_ - occ.minus);
  return rest * (rest + 1) / 2 + (rest - static_cast<std::size_t>(occ.zero));
}

std::size_t SpinEnsembleBasis::index_of(const Occupation& occ) const {
  if (auto idx = find(occ)) return *idx;
  std::ostringstream msg;
  msg << "occupation (" << occ.minus << "," << occ.zero << "," << occ.plus
      << ") is not in the N = " << atoms_ << " basis";
  throw std::out_of_range(msg.str());
}

std::vector<std::size_t> SpinEnsembleBasis::pair_indices() const {
  std::vector<std::size_t> out;
  for (int k = 0; 2 * k <= atoms_; ++k) out.push_back(index_of({k, atoms_ - 2 * k, k}));
  return out;
}

BasisPtr build_basis(int n_atoms) { return std::make_shared<const SpinEnsembleBasis>(n_atoms); }

std::string_view to_string(CollectiveOp op) {
  switch (op) {
    case CollectiveOp::Sx: return "S_x";
    case CollectiveOp::Sy: return "S_y";
    case CollectiveOp::Sz: return "S_z";
    case CollectiveOp::Splus: return "S_plus";
    case CollectiveOp::Sminus: return "S_minus";
    case CollectiveOp::S2: return "S2";
    case CollectiveOp::N0: return "N_0";
  }
  return "?";
}

SparseOperator collective_operator(const SpinEnsembleBasis& basis, CollectiveOp which) {
  const std::string label{to_string(which)};
  switch (which) {
    case CollectiveOp::Splus:
      return SparseOperator(ladder_matrix(basis, raise), label);
    case CollectiveOp::Sminus:
      return SparseOperator(ladder_matrix(basis, lower), label);
    case CollectiveOp::Sz:
      return diagonal_operator(basis, [](const Occupation& o) { return double(o.magnetization()); }, label);
    case CollectiveOp::N0:
      return diagonal_operator(basis, [](const Occupation& o) { return double(o.zero); }, label);
    case CollectiveOp::Sx: {
      SparseOperator::Matrix m = 0.5 * (ladder_matrix(basis, raise) + ladder_matrix(basis, lower));
      return SparseOperator(std::move(m), label, true);
    }
    case CollectiveOp::Sy: {
      SparseOperator::Matrix m =
          Complex(0.0, -0.5) * (ladder_matrix(basis, raise) - ladder_matrix(basis, lower));
      return SparseOperator(std::move(m), label, true);
    }
    case CollectiveOp::S2: {
      const auto sx = collective_operator(basis, CollectiveOp::Sx);
      const auto sy = collective_operator(basis, CollectiveOp::Sy);
      const auto sz = collective_operator(basis, CollectiveOp::Sz);
      SparseOperator::Matrix m =
          (sx.matrix() * sx.matrix() + sy.matrix() * sy.matrix() + sz.matrix() * sz.matrix()).pruned(1.0, 1e-13);
      return SparseOperator(std::move(m), label, true);
    }
  }
  throw std::invalid_argument("unknown collective operator");
}

CollectiveOperators::CollectiveOperators(const SpinEnsembleBasis& basis)
    : ops_{collective_operator(basis, CollectiveOp::Sx), collective_operator(basis, CollectiveOp::Sy),
           collective_operator(basis, CollectiveOp::Sz), collective_operator(basis, CollectiveOp::Splus),
           collective_operator(basis, CollectiveOp::Sminus), collective_operator(basis, CollectiveOp::S2),
           collective_operator(basis, CollectiveOp::N0)} {}

const SparseOperator& CollectiveOperators::get(CollectiveOp which) const {
  return ops_.at(static_cast<std::size_t>(which));
}

void SpinStateVector::validate() const {
  if (!basis) throw std::invalid_argument("spin state without basis");
  if (static_cast<std::size_t>(amplitudes.size()) != basis->dimension()) {
    throw std::invalid_argument("spin state dimension does not match its basis");
  }
  if (normalized && std::abs(amplitudes.squaredNorm() - 1.0) > 1e-10) {
    throw std::invalid_argument("spin state flagged normalized but has norm^2 != 1");
  }
}

SpinStateVector all_in_zero(const BasisPtr& basis) {
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(basis->dimension()));
  v[static_cast<Eigen::Index>(basis->index_of({0, basis->atoms(), 0}))] = 1.0;
  return {basis, std::move(v), true};
}

std::vector<double> singlet_coefficients(int n_atoms) {
  require_even(n_atoms, "singlet");
  std::vector<double> c(static_cast<std::size_t>(n_atoms / 2 + 1));
  c[0] = 1.0 / std::sqrt(double(n_atoms) + 1.0);
  for (int j = 1; j <= n_atoms / 2; ++j) {
    const double n = n_atoms;
    c[static_cast<std::size_t>(j)] =
        -std::sqrt((n - 2.0 * j + 2.0) / (n - 2.0 * j + 1.0)) * c[static_cast<std::size_t>(j - 1)];
  }
  return c;
}

SpinStateVector singlet_vector(const BasisPtr& basis) {
  const auto c = singlet_coefficients(basis->atoms());
  ComplexVector pair(static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) pair[static_cast<Eigen::Index>(j)] = c[j];
  auto out = embed_pair_amplitudes(basis, pair);
  out.normalized = true;
  return out;
}

SpinStateVector embed_pair_amplitudes(const BasisPtr& basis, const ComplexVector& pair_amplitudes) {
  const auto idx = basis->pair_indices();
  if (static_cast<std::size_t>(pair_amplitudes.size()) != idx.size()) {
    throw std::invalid_argument("pair amplitudes have the wrong dimension");
  }
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(basis->dimension()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    v[static_cast<Eigen::Index>(idx[k])] = pair_amplitudes[static_cast<Eigen::Index>(k)];
  }
  const bool unit = std::abs(v.squaredNorm() - 1.0) <= 1e-10;
  return {basis, std::move(v), unit};
}

Eigen::MatrixXd pair_subspace_s2(int n_atoms) {
  require_even(n_atoms, "pair subspace");
  const int dim = n_atoms / 2 + 1;
  auto pair_k = [&](const Occupation& o) -> std::optional<int> {
    if (o.minus != o.plus || o.atoms() != n_atoms) return std::nullopt;
    return o.minus;
  };
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const Occupation start{k, n_atoms - 2 * k, k};
    // S+ S-
    for (const auto& [mid, a] : lower(start)) {
      for (const auto& [end, b] : raise(mid)) {
        if (auto j = pair_k(end)) m(*j, k) += a * b;
      }
    }
    // Sz^2 - Sz is diagonal and vanishes on Sz = 0, kept for completeness.
    const double sz = start.magnetization();
    m(k, k) += sz * sz - sz;
  }
  return m;
}

ComplexMatrix project_onto_pairs(const SparseOperator& op, const SpinEnsembleBasis& basis) {
  const auto idx = basis.pair_indices();
  const auto n = static_cast<Eigen::Index>(idx.size());
  ComplexMatrix out(n, n);
  const ComplexMatrix dense(op.matrix());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = dense(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                        static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

std::vector<DickeComponent> dicke_decomposition(int n_atoms) {
  const Eigen::MatrixXd s2 = pair_subspace_s2(n_atoms);
  const Eigen::Index dim = s2.rows();
  Eigen::VectorXd diag = s2.diagonal();
  Eigen::VectorXd sub(std::max<Eigen::Index>(dim - 1, 0));
  for (Eigen::Index i = 0; i + 1 < dim; ++i) sub[i] = s2(i + 1, i);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "S^2 eigen-decomposition failed on the N = " << n_atoms << " pair subspace";
    throw NumericalError(msg.str());
  }

  std::vector<DickeComponent> out;
  out.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(k);
    if (v[0] < 0.0) v = -v;
    DickeComponent c;
    c.k = static_cast<int>(k);
    c.s2_eigenvalue = solver.eigenvalues()[k];
    c.weight = v[0] * v[0];
    c.pair_amplitudes = std::move(v);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<DickeComponent> dicke_decomposition(const SpinEnsembleBasis& basis) {
  return dicke_decomposition(basis.atoms());
}

}  // namespace singlet
