#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace singlet {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Complex sparse matrix tagged with a label and a Hermiticity flag.
///
/// Operators constructed with `hermitian = true` are checked on construction:
/// every entry of A - A^dagger must be below 1e-12 in magnitude.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

  SparseOperator() = default;
  SparseOperator(Matrix matrix, std::string label, bool hermitian = false);

  static SparseOperator identity(Eigen::Index dimension, std::string label = "I");
  static SparseOperator diagonal(const Eigen::VectorXd& entries, std::string label);

  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }
  Eigen::Index nonzeros() const { return matrix_.nonZeros(); }
  const Matrix& matrix() const { return matrix_; }
  const std::string& label() const { return label_; }
  bool is_hermitian() const { return hermitian_; }

  SparseOperator adjoint(std::string label = {}) const;
  SparseOperator relabel(std::string label, bool hermitian) const;

  ComplexVector apply(const ComplexVector& x) const { return matrix_ * x; }
  Complex expectation(const ComplexVector& x) const;
  /// Largest |A_ij - conj(A_ji)|.
  double hermiticity_defect() const;
  /// Largest entrywise magnitude.
  double max_abs() const;

  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator*(Complex s, const SparseOperator& a);

 private:
  Matrix matrix_;
  std::string label_;
  bool hermitian_ = false;
};

/// Kronecker product a (x) b; the index of (i, j) is i * dim(b) + j.
SparseOperator kron(const SparseOperator& a, const SparseOperator& b, std::string label = {});

/// Commutator [a, b].
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);

}  // namespace singlet
