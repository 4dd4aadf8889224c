#include "mskp/kron.hpp"

#include "mskp/error.hpp"

#include <string>

namespace mskp {

KroneckerOperator::KroneckerOperator(const SparseMatrix& left, const SparseMatrix& right)
    : left_(&left), right_(&right) {}

Matrix kron_apply(const KroneckerOperator& op, const Matrix& x) {
  require_dims(x.rows() == op.right().cols() && x.cols() == op.left().cols(),
               "kron_apply: operand is not right.cols x left.cols");
  const Matrix rx = op.right().storage() * x;
  Matrix out(rx.rows(), op.left().rows());
  out.noalias() = rx * op.left().storage().transpose();
  return out;
}

Vector kron_matvec(const KroneckerOperator& op, const Vector& x) {
  require_dims(x.size() == op.cols(), "kron_matvec: vector length " + std::to_string(x.size()) +
                                          " does not match operator width " + std::to_string(op.cols()));
  const Eigen::Map<const Matrix> xm(x.data(), op.right().cols(), op.left().cols());
  const Matrix y = kron_apply(op, xm);
  return Eigen::Map<const Vector>(y.data(), y.size());
}

Vector kron_sum_matvec(std::span<const KronTerm> terms, const Vector& x) {
  if (terms.empty()) throw std::invalid_argument("kron_sum_matvec: no terms");
  Vector out = Vector::Zero(terms.front().op.rows());
  for (const auto& t : terms) {
    require_dims(t.op.rows() == out.size(), "kron_sum_matvec: terms have different output sizes");
    out.noalias() += t.scale * kron_matvec(t.op, x);
  }
  return out;
}

Matrix dense_kron(const Matrix& a, const Matrix& b) {
  if (a.rows() * b.rows() > kDenseOracleCap || a.cols() * b.cols() > kDenseOracleCap) {
    throw NumericalError("dense Kronecker oracle exceeds dimension cap");
  }
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

Matrix materialize(std::span<const KronTerm> terms) {
  if (terms.empty()) throw std::invalid_argument("materialize: no terms");
  Matrix out = Matrix::Zero(terms.front().op.rows(), terms.front().op.cols());
  for (const auto& t : terms) {
    require_dims(t.op.rows() == out.rows() && t.op.cols() == out.cols(), "materialize: term shape mismatch");
    out += t.scale * dense_kron(t.op.left().to_dense(), t.op.right().to_dense());
  }
  return out;
}

}  // namespace mskp
