#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <span>
#include <vector>

namespace mskp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Row-compressed sparse matrix with real entries.
///
/// Holds at most one stored entry per (row, col) and only finite values.
/// Duplicate triplets handed to the builder are summed into a single entry.
class SparseMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);
  explicit SparseMatrix(Storage storage);

  static SparseMatrix from_triplets(Index rows, Index cols, std::span<const Triplet> entries);
  static SparseMatrix identity(Index n);
  static SparseMatrix from_dense(const Matrix& dense);
  /// Tridiagonal Toeplitz matrix with constant sub-, main- and super-diagonal.
  static SparseMatrix tridiag(Index n, double sub, double diag, double super);

  [[nodiscard]] Index rows() const { return storage_.rows(); }
  [[nodiscard]] Index cols() const { return storage_.cols(); }
  [[nodiscard]] Index nnz() const { return storage_.nonZeros(); }
  [[nodiscard]] bool square() const { return rows() == cols(); }
  [[nodiscard]] const Storage& storage() const { return storage_; }

  [[nodiscard]] double coeff(Index row, Index col) const { return storage_.coeff(row, col); }
  [[nodiscard]] std::vector<Triplet> triplets() const;

  [[nodiscard]] Vector multiply(const Vector& x) const;
  [[nodiscard]] Matrix to_dense() const { return Matrix(storage_); }
  [[nodiscard]] SparseMatrix transpose() const;
  [[nodiscard]] SparseMatrix scaled(double s) const;
  /// Sub-block [row0, row0+rows) x [col0, col0+cols).
  [[nodiscard]] SparseMatrix block(Index row0, Index col0, Index rows, Index cols) const;

  friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator*(double s, const SparseMatrix& a) { return a.scaled(s); }

 private:
  Storage storage_;
};

/// Sparse Kronecker product, materialized. Only used to build modest
/// spatial operators (e.g. I (x) T); the space-time operator is never formed.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// Column-stacking of a dense matrix.
Vector vec(const Matrix& x);
/// Inverse of vec: reshape into a rows x cols matrix, column-major.
Matrix unvec(const Vector& x, Index rows, Index cols);

/// Coordinate text form: "rows cols nnz" header, then one zero-based
/// "row col value" triple per line.
void write_coordinate(std::ostream& os, const SparseMatrix& a);
SparseMatrix read_coordinate(std::istream& is);

}  // namespace mskp
