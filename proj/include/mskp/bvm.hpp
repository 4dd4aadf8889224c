#pragma once

#include "mskp/kron.hpp"
#include "mskp/sparse.hpp"

#include <filesystem>
#include <functional>

namespace mskp {

/// Temporal matrices of a boundary value method over `steps` steps of size tau.
///
/// For the GAM-5 scheme both matrices are (steps+1) x (steps+1); row 0 carries
/// the initial condition. The type itself is scheme-agnostic: any pair of
/// square A, B of equal order can be supplied.
struct TimeDiscretization {
  Index steps = 0;
  double tau = 0.0;
  SparseMatrix a;
  SparseMatrix b;

  [[nodiscard]] Index nodes() const { return a.rows(); }
};

/// Fifth-order generalized Adams method. Requires steps >= 5.
TimeDiscretization gam5_matrices(Index steps, double tau);

/// Space-time system Q u = b with Q = A (x) M + tau B (x) K.
///
/// u stacks the spatial vectors of every time node: u = [U_0; U_1; ...; U_m],
/// i.e. u = vec(U) for the space_dim x nodes matrix U.
struct AssembledSystem {
  TimeDiscretization time;
  SparseMatrix mass;
  SparseMatrix stiffness;
  Vector rhs;

  [[nodiscard]] Index space_dim() const { return mass.rows(); }
  [[nodiscard]] Index nodes() const { return time.nodes(); }
  [[nodiscard]] Index size() const { return space_dim() * nodes(); }
};

using ForcingSampler = std::function<Vector(double t)>;

/// b = tau (B (x) I) f + e_1 (x) psi, where column j of `forcing` is F(t_j).
AssembledSystem assemble(TimeDiscretization time, SparseMatrix mass, SparseMatrix stiffness,
                         const Matrix& forcing, const Vector& psi);

/// Samples `forcing` at t_j = j * tau for every node.
AssembledSystem assemble(TimeDiscretization time, SparseMatrix mass, SparseMatrix stiffness,
                         const ForcingSampler& forcing, const Vector& psi);

/// (A (x) M + tau B (x) K) u, matrix-free.
Vector apply_q(const AssembledSystem& sys, const Vector& u);
/// Same, on the space_dim x nodes unvec'd form.
Matrix apply_q(const AssembledSystem& sys, const Matrix& u);

/// Dense Q for oracle checks, capped at kDenseOracleCap.
Matrix dense_q(const AssembledSystem& sys);

/// Removes the initial-condition block: drops row/column 0 of A and B and moves
/// the known U_0 = M^{-1} psi coupling into the right-hand side. The reduced
/// temporal B is nonsingular, which the convergence theory requires.
AssembledSystem eliminate_initial_block(const AssembledSystem& sys);

/// Writes A.mtx, B.mtx, M.mtx, K.mtx (coordinate form), rhs.txt and a
/// manifest.json holding steps, tau, nodes and space_dim.
void export_system(const AssembledSystem& sys, const std::filesystem::path& dir);

}  // namespace mskp
