#include "mskp/bvm.hpp"
#include "mskp/problems.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mskp;
using namespace mskp::testing;

TEST(Gam5, RejectsTooFewSteps) {
  EXPECT_THROW((void)gam5_matrices(4, 0.25), std::invalid_argument);
  EXPECT_THROW((void)gam5_matrices(8, 0.0), std::invalid_argument);
}

TEST(Gam5, PrintedRows) {
  const auto t = gam5_matrices(8, 0.125);
  const Matrix b = 720.0 * t.b.to_dense();
  const Matrix a = t.a.to_dense();
  ASSERT_EQ(a.rows(), 9);

  EXPECT_EQ(a.row(0).norm(), 1.0);
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_EQ(b.row(0).norm(), 0.0);

  const double first[] = {251, 646, -264, 106, -19};
  const double interior[] = {-19, 346, 456, -74, 11};
  const double penult[] = {11, -74, 456, 346, -19};
  const double last[] = {-19, 106, -264, 646, 251};
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(b(1, j), first[j], 1e-12);
    EXPECT_NEAR(b(4, 2 + j), interior[j], 1e-12);
    EXPECT_NEAR(b(7, 4 + j), penult[j], 1e-12);
    EXPECT_NEAR(b(8, 4 + j), last[j], 1e-12);
  }
  for (Index i = 1; i <= 8; ++i) {
    EXPECT_EQ(a(i, i), 1.0);
    EXPECT_EQ(a(i, i - 1), -1.0);
    EXPECT_EQ(t.a.storage().row(i).nonZeros(), 2);
  }
}

TEST(Gam5, RowSums) {
  for (Index m : {5, 6, 11}) {
    const auto t = gam5_matrices(m, 1.0 / static_cast<double>(m));
    const Vector ones = Vector::Ones(m + 1);
    const Vector bs = t.b.multiply(ones);
    const Vector as = t.a.multiply(ones);
    EXPECT_EQ(bs[0], 0.0);
    EXPECT_EQ(as[0], 1.0);
    for (Index i = 1; i <= m; ++i) {
      EXPECT_NEAR(bs[i], 1.0, 1e-15) << "row " << i;
      EXPECT_EQ(as[i], 0.0);
    }
  }
}

// Each row i >= 1 states y(t_i) - y(t_{i-1}) = tau * sum_j B_ij y'(t_j); the
// coefficients integrate polynomials up to degree 5 exactly.
TEST(Gam5, QuadratureExactThroughDegreeFive) {
  const Index m = 9;
  const double tau = 0.1;
  const auto t = gam5_matrices(m, tau);
  for (int k = 0; k <= 6; ++k) {
    Vector y(m + 1), dy(m + 1);
    for (Index j = 0; j <= m; ++j) {
      const double tj = static_cast<double>(j) * tau;
      y[j] = std::pow(tj, k);
      dy[j] = k == 0 ? 0.0 : k * std::pow(tj, k - 1);
    }
    const Vector defect = (t.a.multiply(y) - tau * t.b.multiply(dy)).tail(m);
    if (k <= 5) {
      EXPECT_LT(defect.lpNorm<Eigen::Infinity>(), 1e-14) << "degree " << k;
    } else {
      EXPECT_GT(defect.lpNorm<Eigen::Infinity>(), 1e-9);
    }
  }
}

TEST(Bvm, ConstantDerivativeReproducesTime) {
  // x' = 1, x(0) = 0 on a 1x1 "space": the discrete solution is t itself.
  const Index m = 7;
  const double tau = 0.2;
  const auto t = gam5_matrices(m, tau);
  const auto sys = assemble(t, SparseMatrix::identity(1), SparseMatrix(1, 1), Matrix(Matrix::Ones(1, m + 1)), Vector(Vector::Zero(1)));
  const Vector u = dense_q(sys).fullPivLu().solve(sys.rhs);
  for (Index j = 0; j <= m; ++j) EXPECT_NEAR(u[j], static_cast<double>(j) * tau, 1e-13);
}

TEST(Bvm, ApplyQMatchesDenseKronecker) {
  const auto sys = build_system(diffusion_2d(4), 6);
  const Matrix q = dense_kron(sys.time.a.to_dense(), sys.mass.to_dense()) +
                   sys.time.tau * dense_kron(sys.time.b.to_dense(), sys.stiffness.to_dense());
  EXPECT_LT(rel_err(dense_q(sys), q), 1e-13);
  std::mt19937_64 rng(11);
  const Vector x = random_vector(rng, sys.size());
  EXPECT_LT(rel_err(apply_q(sys, x), q * x), 1e-13);
}

TEST(Bvm, RhsLayout) {
  // b = tau (B (x) I) f + e_1 (x) psi
  const auto t = gam5_matrices(6, 0.5);
  std::mt19937_64 rng(12);
  const Matrix f = random_matrix(rng, 3, 7);
  const Vector psi = random_vector(rng, 3);
  const auto sys = assemble(t, SparseMatrix::identity(3), SparseMatrix::identity(3), f, psi);
  Vector e1 = Vector::Zero(7);
  e1[0] = 1.0;
  const Vector want = 0.5 * dense_kron(t.b.to_dense(), Matrix::Identity(3, 3)) * vec(f) + dense_kron(e1, psi);
  EXPECT_LT(rel_err(sys.rhs, want), 1e-14);
}

// The exact diffusion solution is quadratic in x and in y, which the
// five-point stencil differentiates exactly: the space-time residual is
// purely temporal and does not move when h is refined.
TEST(Bvm, ExactDiffusionResidualHasNoSpatialPart) {
  // Residual = g(x, y) r(t) with g = xy(1-x)(1-y) and r independent of h.
  Vector first;
  for (Index n : {4, 7, 15}) {
    const auto prob = diffusion_2d(n);
    const auto sys = build_system(prob, 20);
    const Matrix r = unvec(apply_q(sys, exact_solution(prob, sys.time)) - sys.rhs, sys.space_dim(), sys.nodes());
    Vector g(sys.space_dim());
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) * prob.h, y = static_cast<double>(j + 1) * prob.h;
        g[j * n + i] = x * y * (1 - x) * (1 - y);
      }
    const Vector rt = r.transpose() * g / g.squaredNorm();
    EXPECT_LT((r - g * rt.transpose()).norm(), 1e-9 * r.norm()) << "n=" << n;
    if (first.size() == 0) first = rt;
    EXPECT_LT((rt - first).norm(), 1e-9 * first.norm()) << "n=" << n;
  }
}

TEST(Bvm, ExactDiffusionResidualIsHighOrderInTime) {
  // Per-step residual is tau times the local truncation error, O(tau^6).
  const auto prob = diffusion_2d(5);
  std::vector<double> res;
  for (Index m : {20, 40, 80}) {
    const auto sys = build_system(prob, m);
    res.push_back((apply_q(sys, exact_solution(prob, sys.time)) - sys.rhs).lpNorm<Eigen::Infinity>());
  }
  EXPECT_GE(std::log2(res[0] / res[1]), 5.0) << res[0] << " " << res[1];
  EXPECT_GE(std::log2(res[1] / res[2]), 5.0) << res[1] << " " << res[2];
}

TEST(Bvm, EliminateInitialBlockKeepsSolution) {
  const auto prob = diffusion_2d(3);
  const auto full = build_system(prob, 6);
  const auto red = eliminate_initial_block(full);
  EXPECT_EQ(red.nodes(), full.nodes() - 1);
  EXPECT_GT(std::abs(red.time.b.to_dense().determinant()), 1e-8);
  const Vector u_full = dense_q(full).fullPivLu().solve(full.rhs);
  const Vector u_red = dense_q(red).fullPivLu().solve(red.rhs);
  EXPECT_LT(rel_err(u_red, u_full.tail(red.size())), 1e-12);
}

TEST(Bvm, ExportWritesFiles) {
  const auto sys = build_system(diffusion_2d(2), 5);
  const auto dir = std::filesystem::temp_directory_path() / "mskp_export_test";
  std::filesystem::remove_all(dir);
  export_system(sys, dir);
  for (const char* f : {"A.mtx", "B.mtx", "M.mtx", "K.mtx", "rhs.txt", "manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}
