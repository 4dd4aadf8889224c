#pragma once

#include "mskp/sparse.hpp"

#include <span>

namespace mskp {

/// Largest dimension the dense oracles are allowed to materialize.
inline constexpr Index kDenseOracleCap = 2000;

/// Lightweight view representing left (x) right. Never materializes the product;
/// the referenced matrices must outlive the operator.
class KroneckerOperator {
 public:
  KroneckerOperator(const SparseMatrix& left, const SparseMatrix& right);

  [[nodiscard]] const SparseMatrix& left() const { return *left_; }
  [[nodiscard]] const SparseMatrix& right() const { return *right_; }
  [[nodiscard]] Index rows() const { return left_->rows() * right_->rows(); }
  [[nodiscard]] Index cols() const { return left_->cols() * right_->cols(); }

 private:
  const SparseMatrix* left_;
  const SparseMatrix* right_;
};

struct KronTerm {
  double scale;
  KroneckerOperator op;
};

/// (left (x) right) x computed as vec(right * X * left^T) with vec(X) = x.
Vector kron_matvec(const KroneckerOperator& op, const Vector& x);

/// Same as kron_matvec but acting on the unvec'd form directly:
/// returns right * X * left^T.
Matrix kron_apply(const KroneckerOperator& op, const Matrix& x);

/// sum_k scale_k (left_k (x) right_k) x.
Vector kron_sum_matvec(std::span<const KronTerm> terms, const Vector& x);

/// Dense Kronecker product of two dense matrices (oracle use only).
Matrix dense_kron(const Matrix& a, const Matrix& b);

/// Dense materialization of sum_k scale_k (left_k (x) right_k), capped at
/// kDenseOracleCap rows.
Matrix materialize(std::span<const KronTerm> terms);

}  // namespace mskp
