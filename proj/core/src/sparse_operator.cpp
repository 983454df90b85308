#include "singlet/sparse_operator.hpp"

#include <algorithm>
#include <sstream>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace singlet {

namespace {

constexpr double kHermitianTolerance = 1e-12;

double max_abs_of(const SparseOperator::Matrix& m) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
      best = std::max(best, std::abs(it.value()));
    }
  }
  return best;
}

}  // namespace

SparseOperator::SparseOperator(Matrix matrix, std::string label, bool hermitian)
    : matrix_(std::move(matrix)), label_(std::move(label)), hermitian_(hermitian) {
  matrix_.makeCompressed();
  if (hermitian_) {
    if (matrix_.rows() != matrix_.cols()) {
      throw std::invalid_argument("operator '" + label_ + "' labelled Hermitian but not square");
    }
    const double defect = hermiticity_defect();
    if (defect > kHermitianTolerance) {
      std::ostringstream msg;
      msg << "operator '" << label_ << "' labelled Hermitian has |A - A^dagger| = " << defect;
      throw std::invalid_argument(msg.str());
    }
  }
}

SparseOperator SparseOperator::identity(Eigen::Index dimension, std::string label) {
  Matrix m(dimension, dimension);
  m.setIdentity();
  return SparseOperator(std::move(m), std::move(label), true);
}

SparseOperator SparseOperator::diagonal(const Eigen::VectorXd& entries, std::string label) {
  const Eigen::Index n = entries.size();
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (entries[i] != 0.0) triplets.emplace_back(i, i, entries[i]);
  }
  Matrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m), std::move(label), true);
}

SparseOperator SparseOperator::adjoint(std::string label) const {
  Matrix m = matrix_.adjoint();
  return SparseOperator(std::move(m), label.empty() ? label_ + "^dag" : std::move(label), hermitian_);
}

SparseOperator SparseOperator::relabel(std::string label, bool hermitian) const {
  return SparseOperator(matrix_, std::move(label), hermitian);
}

Complex SparseOperator::expectation(const ComplexVector& x) const {
  return x.dot(matrix_ * x);
}

double SparseOperator::hermiticity_defect() const {
  if (matrix_.rows() != matrix_.cols()) return std::numeric_limits<double>::infinity();
  Matrix diff = matrix_ - Matrix(matrix_.adjoint());
  return max_abs_of(diff);
}

double SparseOperator::max_abs() const { return max_abs_of(matrix_); }

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("operator product: dimension mismatch");
  SparseOperator::Matrix m = (a.matrix_ * b.matrix_).pruned();
  return SparseOperator(std::move(m), a.label_ + "*" + b.label_, false);
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("operator sum: dimension mismatch");
  }
  SparseOperator::Matrix m = a.matrix_ + b.matrix_;
  return SparseOperator(std::move(m), a.label_ + "+" + b.label_, false);
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("operator difference: dimension mismatch");
  }
  SparseOperator::Matrix m = a.matrix_ - b.matrix_;
  return SparseOperator(std::move(m), a.label_ + "-" + b.label_, false);
}

SparseOperator operator*(Complex s, const SparseOperator& a) {
  SparseOperator::Matrix m = s * a.matrix_;
  return SparseOperator(std::move(m), a.label_, false);
}

SparseOperator kron(const SparseOperator& a, const SparseOperator& b, std::string label) {
  using Matrix = SparseOperator::Matrix;
  const Eigen::Index br = b.rows();
  const Eigen::Index bc = b.cols();
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonzeros() * b.nonzeros()));
  for (Eigen::Index i = 0; i < a.matrix().outerSize(); ++i) {
    for (Matrix::InnerIterator ia(a.matrix(), i); ia; ++ia) {
      for (Eigen::Index k = 0; k < b.matrix().outerSize(); ++k) {
        for (Matrix::InnerIterator ib(b.matrix(), k); ib; ++ib) {
          triplets.emplace_back(ia.row() * br + ib.row(), ia.col() * bc + ib.col(),
                                ia.value() * ib.value());
        }
      }
    }
  }
  Matrix m(a.rows() * br, a.cols() * bc);
  m.setFromTriplets(triplets.begin(), triplets.end());
  if (label.empty()) label = a.label() + "(x)" + b.label();
  return SparseOperator(std::move(m), std::move(label), a.is_hermitian() && b.is_hermitian());
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
  SparseOperator c = a * b - b * a;
  return c.relabel("[" + a.label() + "," + b.label() + "]", false);
}

}  // namespace singlet
