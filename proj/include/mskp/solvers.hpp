#pragma once

#include "mskp/bvm.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mskp {

/// Splitting parameters of the MSKP family. KPS is (a, a, 0), GKPS is (a, b, 0).
struct SplitParams {
  double alpha = 1.0;
  double beta = 1.0;
  double omega = 0.0;

  /// alpha > 0, beta > 0, 0 <= omega < 2.
  [[nodiscard]] bool admissible() const;
  void validate() const;
  /// (alpha + beta)(2 - omega) / 2, the inverse scale of the splitting matrix P.
  [[nodiscard]] double scale() const { return 0.5 * (alpha + beta) * (2.0 - omega); }
};

struct SolveReport {
  Index iterations = 0;
  /// Relative residuals; entry 0 is 1 (or 0 when the initial guess is exact).
  std::vector<double> residual_history;
  bool converged = false;
  Index inner_iterations_total = 0;

  [[nodiscard]] double final_residual() const {
    return residual_history.empty() ? 1.0 : residual_history.back();
  }
  /// Iteration count with the last step interpolated on a log scale: the point
  /// where the residual crosses `tolerance`. Lies in (iterations - 1, iterations].
  /// Infinity when not converged.
  [[nodiscard]] double fractional_iterations(double tolerance) const;
};

enum class InnerSolver { gmres, direct };

/// Which residual the Krylov solvers test against the tolerance.
enum class ResidualMonitor { preconditioned, true_residual };

struct SolverConfig {
  double outer_tolerance = 1e-6;
  Index max_outer = 2000;
  double inner_tolerance = 1e-10;
  Index inner_max = 1000;
  InnerSolver inner = InnerSolver::gmres;
  std::optional<Vector> initial_guess;
  /// 0 means full GMRES.
  Index restart = 0;
  ResidualMonitor monitor = ResidualMonitor::preconditioned;
  /// Stationary iterations stop early once the relative residual exceeds this.
  double divergence_threshold = 1e8;

  void validate() const;
};

struct SolveResult {
  Vector solution;
  SolveReport report;
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// GMRES with modified Gram-Schmidt Arnoldi, optionally left preconditioned
/// (solves P^{-1} A x = P^{-1} b). Full (non-restarted) unless cfg.restart > 0.
/// A happy breakdown returns the projected solution.
SolveResult gmres_solve(const LinearOperator& apply, const Vector& b, const SolverConfig& cfg,
                        const LinearOperator& precondition = {});

/// Solves (tau K + beta M) v = r column by column.
class SpatialShiftSolver {
 public:
  SpatialShiftSolver(const AssembledSystem& sys, double beta, InnerSolver kind, double tolerance, Index max_iterations);
  ~SpatialShiftSolver();
  SpatialShiftSolver(const SpatialShiftSolver&) = delete;
  SpatialShiftSolver& operator=(const SpatialShiftSolver&) = delete;

  /// Solves every column of r; adds inner Krylov iterations to *inner_iterations.
  [[nodiscard]] Matrix solve(const Matrix& r, Index* inner_iterations = nullptr) const;
  [[nodiscard]] double beta() const { return beta_; }

 private:
  struct Factor;
  double beta_;
  InnerSolver kind_;
  double tolerance_;
  Index max_iterations_;
  SparseMatrix shifted_;
  std::unique_ptr<Factor> factor_;
};

/// Applies P(alpha, beta, omega)^{-1} with
///   P = 2 / ((alpha + beta)(2 - omega)) (A + alpha B) (x) (tau K + beta M)
/// by per-node spatial solves followed by one banded solve with (A + alpha B).
class MskpPreconditioner {
 public:
  MskpPreconditioner(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg);
  /// Reuses a spatial solver built for params.beta.
  MskpPreconditioner(const AssembledSystem& sys, const SplitParams& params,
                     std::shared_ptr<const SpatialShiftSolver> spatial);
  ~MskpPreconditioner();
  MskpPreconditioner(MskpPreconditioner&&) noexcept;

  /// P^{-1} r on the space_dim x nodes form.
  [[nodiscard]] Matrix apply(const Matrix& r) const;
  [[nodiscard]] Vector apply(const Vector& r) const;
  [[nodiscard]] Index inner_iterations() const { return *inner_iterations_; }
  [[nodiscard]] const SplitParams& params() const { return params_; }

 private:
  struct Temporal;
  const AssembledSystem* sys_;
  SplitParams params_;
  std::shared_ptr<const SpatialShiftSolver> spatial_;
  std::unique_ptr<Temporal> temporal_;
  std::unique_ptr<Index> inner_iterations_;
};

/// Stationary MSKP iteration u <- u + P^{-1}(b - Q u).
SolveResult mskp_solve(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg);
SolveResult mskp_solve(const AssembledSystem& sys, const MskpPreconditioner& precond, const SolverConfig& cfg);

/// MSKP with omega = 0.
SolveResult gkps_solve(const AssembledSystem& sys, double alpha, double beta, const SolverConfig& cfg);
/// MSKP with beta = alpha, omega = 0.
SolveResult kps_solve(const AssembledSystem& sys, double alpha, const SolverConfig& cfg);

/// GMRES on Q u = b without preconditioning.
SolveResult gmres_q(const AssembledSystem& sys, const SolverConfig& cfg);
/// GMRES on P^{-1} Q u = P^{-1} b.
SolveResult pgmres_mskp(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg);
SolveResult pgmres_mskp(const AssembledSystem& sys, const MskpPreconditioner& precond, const SolverConfig& cfg);

enum class Method { kps, gkps, mskp, gmres, gmres_gkps, gmres_mskp };

[[nodiscard]] std::string to_string(Method m);
[[nodiscard]] Method parse_method(const std::string& name);
[[nodiscard]] bool is_krylov(Method m);

/// Dispatches to the solver for `method`. KPS uses params.alpha only, GKPS
/// and GMRES-GKPS ignore params.omega, GMRES ignores params.
SolveResult run_method(Method method, const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg);

/// Parameters actually used by `method` given a requested triple.
[[nodiscard]] SplitParams effective_params(Method method, const SplitParams& params);

}  // namespace mskp
