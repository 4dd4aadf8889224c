#pragma once

#include "mskp/bvm.hpp"
#include "mskp/sparse.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace mskp {

/// Semi-discrete problem M U' = -K U + F(t), U(0) = psi on the unit square,
/// n interior points per direction, lexicographic ordering with x fastest.
struct PDEProblem {
  std::string name;
  Index n = 0;
  double h = 0.0;
  SparseMatrix mass;
  SparseMatrix stiffness;
  ForcingSampler forcing;
  Vector psi;
  /// Exact nodal solution when known.
  std::optional<ForcingSampler> exact;
};

/// u_t = u_xx + u_yy + f with exact solution sin(5.25 pi t) x y (1-x)(1-y).
PDEProblem diffusion_2d(Index n);

/// u_t + u_x = u_xx + u_yy + f, forcing chosen so that the all-ones vector
/// solves the discrete system exactly.
PDEProblem convdiff_2d(Index n);

using ScalarField = std::function<double(double x, double y)>;

struct ConvectionFields {
  ScalarField f1;  ///< coefficient of du/dx
  ScalarField f2;  ///< coefficient of du/dy
  ScalarField f;   ///< reaction coefficient
};

/// Centered-difference discretization of
///   L(u) = lap(u) + f1 u_x + f2 u_y + f u
/// on the unit square with homogeneous Dirichlet data, n0 interior points per
/// direction (order n0^2). The matrix discretizes L itself.
SparseMatrix fdm_2d_operator(Index n0, const ConvectionFields& fields);

/// f1 = x, f2 = y, f = 0.
ConvectionFields default_sylvester_fields();

/// dX/dt = A X + X B + E F^T, X(0) = 0.
struct SylvesterProblem {
  Index n0 = 0;
  Index n = 0;  ///< n0^2
  SparseMatrix op_a;
  SparseMatrix op_b;
  Matrix e;
  Matrix f;
  std::uint64_t seed = 0;

  /// Vectorized problem: M = I, K = -(I (x) A + B^T (x) I), forcing vec(E F^T), psi = 0.
  [[nodiscard]] PDEProblem as_pde() const;
};

/// A = fdm_2d_operator(n0, fields); B equals A unless `b_fields` is given.
/// E, F entries uniform on [0, 1] drawn from `seed`.
SylvesterProblem sylvester_problem(Index n0, Index s, std::uint64_t seed,
                                   const std::optional<ConvectionFields>& b_fields = std::nullopt);

inline constexpr double kSylvesterTau = 0.1;

/// GAM-5 space-time system on [0, 1] with `steps` uniform steps (tau = 1/steps).
AssembledSystem build_system(const PDEProblem& problem, Index steps);
/// GAM-5 space-time system with explicit tau (final time steps * tau).
AssembledSystem build_system(const PDEProblem& problem, Index steps, double tau);

/// Stacked exact nodal solution, when the problem has one.
Vector exact_solution(const PDEProblem& problem, const TimeDiscretization& time);

}  // namespace mskp
