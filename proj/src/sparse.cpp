#include "mskp/sparse.hpp"

#include "mskp/error.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <iomanip>

namespace mskp {

SparseMatrix::SparseMatrix(Index rows, Index cols) : storage_(rows, cols) {
  storage_.makeCompressed();
}

SparseMatrix::SparseMatrix(Storage storage) : storage_(std::move(storage)) {
  storage_.prune(0.0);
  storage_.makeCompressed();
  for (Index k = 0; k < storage_.nonZeros(); ++k) {
    if (!std::isfinite(storage_.valuePtr()[k])) throw std::invalid_argument("sparse matrix entry is not finite");
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::span<const Triplet> entries) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  std::vector<Eigen::Triplet<double, int>> t;
  t.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      std::ostringstream msg;
      msg << "triplet (" << e.row << ", " << e.col << ") outside " << rows << "x" << cols;
      throw DimensionError(msg.str());
    }
    if (!std::isfinite(e.value)) throw std::invalid_argument("triplet value is not finite");
    t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  Storage s(rows, cols);
  s.setFromTriplets(t.begin(), t.end());
  return SparseMatrix(std::move(s));
}

SparseMatrix SparseMatrix::identity(Index n) {
  Storage s(n, n);
  s.setIdentity();
  return SparseMatrix(std::move(s));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  return SparseMatrix(Storage(dense.sparseView()));
}

SparseMatrix SparseMatrix::tridiag(Index n, double sub, double diag, double super) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, sub});
    t.push_back({i, i, diag});
    if (i + 1 < n) t.push_back({i, i + 1, super});
  }
  return from_triplets(n, n, t);
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(nnz()));
  for (Index r = 0; r < storage_.outerSize(); ++r) {
    for (Storage::InnerIterator it(storage_, r); it; ++it) out.push_back({it.row(), it.col(), it.value()});
  }
  return out;
}

Vector SparseMatrix::multiply(const Vector& x) const {
  require_dims(x.size() == cols(), "sparse matvec: vector length does not match column count");
  return storage_ * x;
}

SparseMatrix SparseMatrix::transpose() const { return SparseMatrix(Storage(storage_.transpose())); }

SparseMatrix SparseMatrix::scaled(double s) const { return SparseMatrix(Storage(s * storage_)); }

SparseMatrix SparseMatrix::block(Index row0, Index col0, Index nrows, Index ncols) const {
  require_dims(row0 >= 0 && col0 >= 0 && row0 + nrows <= rows() && col0 + ncols <= cols(),
               "sparse block outside matrix");
  return SparseMatrix(Storage(storage_.block(row0, col0, nrows, ncols)));
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "sparse sum: shape mismatch");
  return SparseMatrix(SparseMatrix::Storage(a.storage() + b.storage()));
}

SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "sparse difference: shape mismatch");
  return SparseMatrix(SparseMatrix::Storage(a.storage() - b.storage()));
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz() * b.nnz()));
  const auto ta = a.triplets();
  const auto tb = b.triplets();
  for (const auto& ea : ta) {
    for (const auto& eb : tb) {
      t.push_back({ea.row * b.rows() + eb.row, ea.col * b.cols() + eb.col, ea.value * eb.value});
    }
  }
  return SparseMatrix::from_triplets(a.rows() * b.rows(), a.cols() * b.cols(), t);
}

Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

Matrix unvec(const Vector& x, Index rows, Index cols) {
  require_dims(rows >= 0 && cols >= 0 && rows * cols == x.size(), "unvec: length is not rows*cols");
  return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

void write_coordinate(std::ostream& os, const SparseMatrix& a) {
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  os << std::setprecision(17);
  for (const auto& t : a.triplets()) os << t.row << ' ' << t.col << ' ' << t.value << '\n';
}

SparseMatrix read_coordinate(std::istream& is) {
  Index rows = 0, cols = 0, nnz = 0;
  if (!(is >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw std::invalid_argument("coordinate file: malformed header");
  }
  std::vector<Triplet> t(static_cast<std::size_t>(nnz));
  for (auto& e : t) {
    if (!(is >> e.row >> e.col >> e.value)) throw std::invalid_argument("coordinate file: truncated entry list");
  }
  return SparseMatrix::from_triplets(rows, cols, t);
}

}  // namespace mskp
