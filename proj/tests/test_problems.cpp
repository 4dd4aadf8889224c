#include "mskp/problems.hpp"
#include "mskp/solvers.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace mskp;
using namespace mskp::testing;

namespace {

Eigen::VectorXcd eigenvalues(const SparseMatrix& a) { return Eigen::EigenSolver<Matrix>(a.to_dense()).eigenvalues(); }

}  // namespace

TEST(Diffusion, StencilAtN2) {
  const auto p = diffusion_2d(2);
  EXPECT_DOUBLE_EQ(p.h, 1.0 / 3.0);
  const Matrix k = p.stiffness.to_dense();
  ASSERT_EQ(k.rows(), 4);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(k(i, i), 36.0, 1e-12);
  // Lexicographic order: 0-1 and 2-3 are x neighbours, 0-2 and 1-3 y neighbours.
  EXPECT_NEAR(k(0, 1), -9.0, 1e-12);
  EXPECT_NEAR(k(0, 2), -9.0, 1e-12);
  EXPECT_EQ(k(0, 3), 0.0);
  EXPECT_EQ((p.mass.to_dense() - Matrix::Identity(4, 4)).norm(), 0.0);
}

TEST(Diffusion, StiffnessIsSpd) {
  for (Index n : {2, 5, 16}) {
    const Matrix k = diffusion_2d(n).stiffness.to_dense();
    EXPECT_EQ((k - k.transpose()).norm(), 0.0);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues();
    EXPECT_GT(ev.minCoeff(), 0.0) << "n=" << n;
  }
  std::mt19937_64 rng(21);
  const auto k = diffusion_2d(6).stiffness;
  for (int i = 0; i < 10; ++i) {
    const Vector x = random_vector(rng, 36);
    EXPECT_GT(x.dot(k.multiply(x)), 0.0);
  }
}

TEST(Diffusion, InitialValueIsZero) {
  const auto p = diffusion_2d(4);
  EXPECT_EQ(p.psi.norm(), 0.0);
  ASSERT_TRUE(p.exact.has_value());
  EXPECT_EQ((*p.exact)(0.0).norm(), 0.0);
}

TEST(ConvDiff, StencilAtN2) {
  const Matrix k = convdiff_2d(2).stiffness.to_dense();
  // K = I (x) P + Q (x) I; the Q couplings sit two apart.
  EXPECT_NEAR(k(2, 0), -10.5, 1e-12);
  EXPECT_NEAR(k(0, 2), -7.5, 1e-12);
  EXPECT_NEAR(k(0, 1), -9.0, 1e-12);
  EXPECT_NEAR(k(1, 0), -9.0, 1e-12);
  EXPECT_NEAR(k(0, 0), 36.0, 1e-12);
}

TEST(ConvDiff, StiffnessHasNonnegativeRealSpectrum) {
  for (Index n : {2, 8, 16}) EXPECT_GE(eigenvalues(convdiff_2d(n).stiffness).real().minCoeff(), 0.0) << "n=" << n;
}

TEST(ConvDiff, AllOnesSolvesAssembledSystem) {
  const auto sys = build_system(convdiff_2d(4), 6);
  const Vector ones = Vector::Ones(sys.size());
  EXPECT_LT((apply_q(sys, ones) - sys.rhs).norm() / sys.rhs.norm(), 1e-13);

  SolverConfig cfg;
  cfg.outer_tolerance = 1e-10;
  const auto r = gmres_q(sys, cfg);
  ASSERT_TRUE(r.report.converged);
  EXPECT_LT((r.solution - ones).lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(Fdm, PureLaplacianIsNegatedDiffusionStiffness) {
  const auto l = fdm_2d_operator(5, {});
  EXPECT_LT(rel_err(l.to_dense(), -diffusion_2d(5).stiffness.to_dense()), 1e-15);
}

TEST(Fdm, ReactionShiftsDiagonal) {
  const ConvectionFields shift{{}, {}, [](double, double) { return 2.5; }};
  const Matrix d = fdm_2d_operator(4, shift).to_dense() - fdm_2d_operator(4, {}).to_dense();
  EXPECT_LT((d - 2.5 * Matrix::Identity(16, 16)).norm(), 1e-12);
}

TEST(Fdm, ConvectionStencilAtN2) {
  // h = 1/3, first point (x, y) = (1/3, 1/3): east neighbour 1/h^2 + x/(2h).
  const Matrix l = fdm_2d_operator(2, default_sylvester_fields()).to_dense();
  EXPECT_NEAR(l(0, 0), -36.0, 1e-12);
  EXPECT_NEAR(l(0, 1), 9.0 + 0.5, 1e-12);
  EXPECT_NEAR(l(1, 0), 9.0 - 1.0, 1e-12);
  EXPECT_NEAR(l(0, 2), 9.0 + 0.5, 1e-12);
}

TEST(Fdm, SylvesterOperatorIsStable) {
  for (Index n0 : {2, 4, 8}) {
    EXPECT_LT(eigenvalues(fdm_2d_operator(n0, default_sylvester_fields())).real().maxCoeff(), 0.0) << n0;
  }
}

TEST(Sylvester, OrdersAndRank) {
  const auto s = sylvester_problem(4, 2, 7);
  EXPECT_EQ(s.n, 16);
  const auto pde = s.as_pde();
  EXPECT_EQ(pde.stiffness.rows(), 256);
  const Matrix forcing = unvec(pde.forcing(0.3), 16, 16);
  Eigen::FullPivLU<Matrix> lu(forcing);
  EXPECT_LE(lu.rank(), 2);
  EXPECT_EQ(pde.psi.norm(), 0.0);
  EXPECT_GE(eigenvalues(pde.stiffness).real().minCoeff(), 0.0);
}

TEST(Sylvester, StiffnessIsNegatedKroneckerSum) {
  const auto s = sylvester_problem(2, 1, 3);
  const Matrix a = s.op_a.to_dense(), b = s.op_b.to_dense();
  const Matrix id = Matrix::Identity(4, 4);
  const Matrix want = -(dense_kron(id, a) + dense_kron(b.transpose(), id));
  EXPECT_LT(rel_err(s.as_pde().stiffness.to_dense(), want), 1e-15);
}

TEST(Sylvester, SeedDeterminesFactors) {
  const auto a = sylvester_problem(3, 2, 42);
  const auto b = sylvester_problem(3, 2, 42);
  const auto c = sylvester_problem(3, 2, 43);
  EXPECT_EQ((a.e - b.e).norm(), 0.0);
  EXPECT_EQ((a.f - b.f).norm(), 0.0);
  EXPECT_GT((a.e - c.e).norm(), 0.0);
  EXPECT_GE(a.e.minCoeff(), 0.0);
  EXPECT_LE(a.e.maxCoeff(), 1.0);
}

TEST(Problems, RejectTinyGrids) {
  EXPECT_ANY_THROW((void)diffusion_2d(1));
  EXPECT_ANY_THROW((void)convdiff_2d(1));
  EXPECT_ANY_THROW((void)sylvester_problem(1, 2, 1));
  EXPECT_ANY_THROW((void)sylvester_problem(3, 0, 1));
}
