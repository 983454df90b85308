#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "singlet/sparse_operator.hpp"

namespace singlet {

/// Occupation numbers |n_-1, n_0, n_+1> of a symmetric spin-1 ensemble.
struct Occupation {
  int minus = 0;
  int zero = 0;
  int plus = 0;

  int atoms() const { return minus + zero + plus; }
  int magnetization() const { return plus - minus; }
  friend bool operator==(const Occupation&, const Occupation&) = default;
};

/// One term of a ladder-operator action: target occupation and amplitude.
using LadderTerm = std::pair<Occupation, double>;

/// S+ |occ> in the Schwinger-boson representation, S+ = sqrt(2)(b+^dag b0 + b0^dag b-).
std::vector<LadderTerm> raise(const Occupation& occ);
/// S- |occ>, S- = sqrt(2)(b-^dag b0 + b0^dag b+).
std::vector<LadderTerm> lower(const Occupation& occ);

/// Symmetric subspace of N spin-1 atoms.
///
/// Canonical order: descending n_-1, then descending n_0 within each n_-1
/// block. For N = 1 this is |1,0,0>, |0,1,0>, |0,0,1>, i.e. Sz = -1, 0, +1.
/// The order is frozen; state files carry `order_tag()`.
class SpinEnsembleBasis {
 public:
  explicit SpinEnsembleBasis(int n_atoms);

  static constexpr std::string_view order_tag() { return "desc_nminus_desc_nzero"; }
  static constexpr std::size_t dimension_for(int n_atoms) {
    const auto n = static_cast<std::size_t>(n_atoms);
    return (n + 1) * (n + 2) / 2;
  }

  int atoms() const { return atoms_; }
  std::size_t dimension() const { return states_.size(); }
  const std::vector<Occupation>& states() const { return states_; }
  const Occupation& state(std::size_t i) const { return states_.at(i); }

  /// Position of `occ`, or nullopt when it is not a valid occupation of this basis.
  std::optional<std::size_t> find(const Occupation& occ) const;
  std::size_t index_of(const Occupation& occ) const;

  /// Positions of the pair states |k, N-2k, k>, k = 0..N/2.
  std::vector<std::size_t> pair_indices() const;

 private:
  int atoms_;
  std::vector<Occupation> states_;
};

using BasisPtr = std::shared_ptr<const SpinEnsembleBasis>;

/// Rejects N < 1.
BasisPtr build_basis(int n_atoms);

enum class CollectiveOp { Sx, Sy, Sz, Splus, Sminus, S2, N0 };

std::string_view to_string(CollectiveOp op);

SparseOperator collective_operator(const SpinEnsembleBasis& basis, CollectiveOp which);

/// All collective operators of one basis, built once.
class CollectiveOperators {
 public:
  explicit CollectiveOperators(const SpinEnsembleBasis& basis);
  const SparseOperator& get(CollectiveOp which) const;

 private:
  std::array<SparseOperator, 7> ops_;
};

struct SpinStateVector {
  BasisPtr basis;
  ComplexVector amplitudes;
  bool normalized = false;

  double squared_norm() const { return amplitudes.squaredNorm(); }
  /// Throws when the dimension is wrong or the normalized flag is violated.
  void validate() const;
};

/// Product state |0, N, 0>.
SpinStateVector all_in_zero(const BasisPtr& basis);

/// Coefficients c_j of the singlet on |j, N-2j, j>, j = 0..N/2. Rejects odd N.
std::vector<double> singlet_coefficients(int n_atoms);

/// Normalized collective singlet. Rejects odd N.
SpinStateVector singlet_vector(const BasisPtr& basis);

/// Lift amplitudes on the pair states |k, N-2k, k> into the full basis.
SpinStateVector embed_pair_amplitudes(const BasisPtr& basis, const ComplexVector& pair_amplitudes);

/// S^2 restricted to the pair states, assembled from the ladder actions
/// (S+ S- + Sz^2 - Sz) and projected. Rejects odd N.
Eigen::MatrixXd pair_subspace_s2(int n_atoms);

/// Dense projection P^T A P of a full-basis operator onto the pair states.
ComplexMatrix project_onto_pairs(const SparseOperator& op, const SpinEnsembleBasis& basis);

struct DickeComponent {
  int k = 0;                       ///< Total spin S = 2k.
  double s2_eigenvalue = 0.0;      ///< 2k(2k+1) up to round-off.
  double weight = 0.0;             ///< |d_k|^2 = |<S=2k,0|0,N,0>|^2.
  Eigen::VectorXd pair_amplitudes; ///< Eigenvector on |j, N-2j, j>; j = 0 entry >= 0.
};

/// Decomposition of |0,N,0> into Dicke states |2k, 0>, ascending in k.
std::vector<DickeComponent> dicke_decomposition(int n_atoms);
std::vector<DickeComponent> dicke_decomposition(const SpinEnsembleBasis& basis);

}  // namespace singlet
