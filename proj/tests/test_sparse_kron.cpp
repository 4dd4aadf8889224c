#include "mskp/error.hpp"
#include "mskp/kron.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mskp;
using namespace mskp::testing;

TEST(Sparse, DuplicateTripletsAreSummed) {
  const std::vector<Triplet> t{{0, 1, 2.0}, {0, 1, 3.0}, {1, 0, -1.0}};
  const auto a = SparseMatrix::from_triplets(2, 2, t);
  EXPECT_EQ(a.nnz(), 2);
  EXPECT_DOUBLE_EQ(a.coeff(0, 1), 5.0);
}

TEST(Sparse, RejectsOutOfRangeAndNonFinite) {
  const std::vector<Triplet> bad_index{{2, 0, 1.0}};
  EXPECT_ANY_THROW(SparseMatrix::from_triplets(2, 2, bad_index));
  const std::vector<Triplet> bad_value{{0, 0, std::numeric_limits<double>::infinity()}};
  EXPECT_ANY_THROW(SparseMatrix::from_triplets(2, 2, bad_value));
}

TEST(Sparse, MultiplyMatchesDense) {
  std::mt19937_64 rng(3);
  const auto a = random_sparse(rng, 7, 5);
  const Vector x = random_vector(rng, 5);
  EXPECT_LT(rel_err(a.multiply(x), a.to_dense() * x), 1e-15);
  EXPECT_THROW((void)a.multiply(random_vector(rng, 4)), DimensionError);
}

TEST(Sparse, CoordinateRoundTrip) {
  std::mt19937_64 rng(4);
  const auto a = random_sparse(rng, 6, 4);
  std::stringstream ss;
  write_coordinate(ss, a);
  const auto b = read_coordinate(ss);
  EXPECT_EQ(b.rows(), 6);
  EXPECT_EQ(b.cols(), 4);
  EXPECT_EQ((a.to_dense() - b.to_dense()).norm(), 0.0);
}

TEST(Vec, StacksColumns) {
  Matrix x(2, 3);
  x << 1, 3, 5, 2, 4, 6;
  const Vector v = vec(x);
  for (Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(v[i], static_cast<double>(i + 1));
}

TEST(Vec, UnvecInvertsVec) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = random_matrix(rng, 5, 7);
    EXPECT_EQ((unvec(vec(x), 5, 7) - x).norm(), 0.0);
  }
  EXPECT_THROW((void)unvec(Vector::Zero(6), 4, 2), DimensionError);
}

TEST(Kron, IdentityTimesMatrixIsBlockDiagonal) {
  const auto i2 = SparseMatrix::identity(2);
  Matrix b(2, 2);
  b << 1, 2, 3, 4;
  const Matrix d = kron(i2, SparseMatrix::from_dense(b)).to_dense();
  Matrix want = Matrix::Zero(4, 4);
  want.topLeftCorner(2, 2) = b;
  want.bottomRightCorner(2, 2) = b;
  EXPECT_EQ((d - want).norm(), 0.0);
}

TEST(Kron, MatvecAgreesWithMaterializedProduct) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = SparseMatrix::from_dense(random_matrix(rng, 4, 4));
    const auto b = SparseMatrix::from_dense(random_matrix(rng, 3, 3));
    const Vector x = random_vector(rng, 12);
    const Vector want = dense_kron(a.to_dense(), b.to_dense()) * x;
    EXPECT_LT(rel_err(kron_matvec(KroneckerOperator(a, b), x), want), 1e-13);
  }
}

TEST(Kron, RectangularFactors) {
  std::mt19937_64 rng(7);
  const auto a = random_sparse(rng, 3, 5, 0.6);
  const auto b = random_sparse(rng, 4, 2, 0.6);
  const Vector x = random_vector(rng, 10);
  const Vector want = dense_kron(a.to_dense(), b.to_dense()) * x;
  EXPECT_LT(rel_err(kron_matvec(KroneckerOperator(a, b), x), want), 1e-13);
  EXPECT_LT(rel_err(kron(a, b).to_dense(), dense_kron(a.to_dense(), b.to_dense())), 1e-15);
}

TEST(Kron, MixedProductProperty) {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(rng, 3, 3), b = random_matrix(rng, 2, 2);
  const Matrix c = random_matrix(rng, 3, 3), d = random_matrix(rng, 2, 2);
  EXPECT_LT(rel_err(dense_kron(a, b) * dense_kron(c, d), dense_kron(a * c, b * d)), 1e-13);
}

TEST(Kron, LinearityInVector) {
  std::mt19937_64 rng(9);
  const auto a = random_sparse(rng, 5, 5);
  const auto b = random_sparse(rng, 4, 4);
  const KroneckerOperator op(a, b);
  const Vector x = random_vector(rng, 20), y = random_vector(rng, 20);
  const Vector lhs = kron_matvec(op, 2.5 * x - y);
  const Vector rhs = 2.5 * kron_matvec(op, x) - kron_matvec(op, y);
  EXPECT_LT(rel_err(lhs, rhs), 1e-13);
}

TEST(Kron, SumOfTermsMatchesMaterialize) {
  std::mt19937_64 rng(10);
  const auto a1 = random_sparse(rng, 4, 4), b1 = random_sparse(rng, 3, 3);
  const auto a2 = random_sparse(rng, 4, 4), b2 = random_sparse(rng, 3, 3);
  const std::vector<KronTerm> terms{{1.0, KroneckerOperator(a1, b1)}, {0.3, KroneckerOperator(a2, b2)}};
  const Matrix dense = dense_kron(a1.to_dense(), b1.to_dense()) + 0.3 * dense_kron(a2.to_dense(), b2.to_dense());
  EXPECT_LT(rel_err(materialize(terms), dense), 1e-14);
  const Vector x = random_vector(rng, 12);
  EXPECT_LT(rel_err(kron_sum_matvec(terms, x), dense * x), 1e-13);
}

TEST(Kron, ShapeMismatchThrows) {
  const auto a = SparseMatrix::identity(3);
  const auto b = SparseMatrix::identity(2);
  EXPECT_THROW((void)kron_matvec(KroneckerOperator(a, b), Vector::Zero(5)), DimensionError);
}
