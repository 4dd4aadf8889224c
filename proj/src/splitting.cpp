#include "mskp/error.hpp"
#include "mskp/solvers.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace mskp {

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

bool SplitParams::admissible() const {
  return alpha > 0.0 && beta > 0.0 && omega >= 0.0 && omega < 2.0 && std::isfinite(alpha) && std::isfinite(beta);
}

void SplitParams::validate() const {
  if (!admissible()) {
    std::ostringstream msg;
    msg << "splitting parameters (" << alpha << ", " << beta << ", " << omega
        << ") outside alpha > 0, beta > 0, 0 <= omega < 2";
    throw std::invalid_argument(msg.str());
  }
}

struct SpatialShiftSolver::Factor {
  Eigen::SparseLU<ColMajorSparse> lu;
};

SpatialShiftSolver::SpatialShiftSolver(const AssembledSystem& sys, double beta, InnerSolver kind, double tolerance,
                                       Index max_iterations)
    : beta_(beta),
      kind_(kind),
      tolerance_(tolerance),
      max_iterations_(max_iterations),
      shifted_(sys.stiffness.scaled(sys.time.tau) + sys.mass.scaled(beta)) {
  if (kind_ == InnerSolver::direct) {
    factor_ = std::make_unique<Factor>();
    factor_->lu.compute(ColMajorSparse(shifted_.storage()));
    if (factor_->lu.info() != Eigen::Success) throw NumericalError("tau K + beta M is singular");
  }
}

SpatialShiftSolver::~SpatialShiftSolver() = default;

Matrix SpatialShiftSolver::solve(const Matrix& r, Index* inner_iterations) const {
  require_dims(r.rows() == shifted_.rows(), "spatial solve: block length differs from space_dim");
  if (kind_ == InnerSolver::direct) return factor_->lu.solve(r);

  SolverConfig inner;
  inner.outer_tolerance = tolerance_;
  inner.max_outer = max_iterations_;
  const LinearOperator op = [this](const Vector& v) { return shifted_.multiply(v); };
  Matrix out(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j) {
    const Vector rj = r.col(j);
    if (rj.squaredNorm() == 0.0) {
      out.col(j).setZero();
      continue;
    }
    auto res = gmres_solve(op, rj, inner);
    if (inner_iterations) *inner_iterations += res.report.iterations;
    out.col(j) = res.solution;
  }
  return out;
}

struct MskpPreconditioner::Temporal {
  Eigen::SparseLU<ColMajorSparse> lu;
};

MskpPreconditioner::MskpPreconditioner(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg)
    : MskpPreconditioner(sys, params,
                         std::make_shared<const SpatialShiftSolver>(sys, params.beta, cfg.inner, cfg.inner_tolerance,
                                                                    cfg.inner_max)) {}

MskpPreconditioner::MskpPreconditioner(const AssembledSystem& sys, const SplitParams& params,
                                       std::shared_ptr<const SpatialShiftSolver> spatial)
    : sys_(&sys),
      params_(params),
      spatial_(std::move(spatial)),
      temporal_(std::make_unique<Temporal>()),
      inner_iterations_(std::make_unique<Index>(0)) {
  params_.validate();
  if (!spatial_ || spatial_->beta() != params_.beta) {
    throw std::invalid_argument("spatial solver was built for a different beta");
  }
  const SparseMatrix g = sys.time.a + sys.time.b.scaled(params_.alpha);
  temporal_->lu.compute(ColMajorSparse(g.storage()));
  if (temporal_->lu.info() != Eigen::Success) throw NumericalError("A + alpha B is singular");
}

MskpPreconditioner::~MskpPreconditioner() = default;
MskpPreconditioner::MskpPreconditioner(MskpPreconditioner&&) noexcept = default;

Matrix MskpPreconditioner::apply(const Matrix& r) const {
  require_dims(r.rows() == sys_->space_dim() && r.cols() == sys_->nodes(), "preconditioner: operand shape mismatch");
  const Matrix v = spatial_->solve(r, inner_iterations_.get());
  // v (A + alpha B)^{-T} = ((A + alpha B)^{-1} v^T)^T
  const Matrix vt = v.transpose();
  const Matrix wt = temporal_->lu.solve(vt);
  return params_.scale() * wt.transpose();
}

Vector MskpPreconditioner::apply(const Vector& r) const {
  require_dims(r.size() == sys_->size(), "preconditioner: vector length does not match system size");
  const Eigen::Map<const Matrix> rm(r.data(), sys_->space_dim(), sys_->nodes());
  return vec(apply(Matrix(rm)));
}

SolveResult mskp_solve(const AssembledSystem& sys, const MskpPreconditioner& precond, const SolverConfig& cfg) {
  cfg.validate();
  const Index n = sys.space_dim();
  const Index nodes = sys.nodes();
  Matrix u = Matrix::Zero(n, nodes);
  if (cfg.initial_guess) {
    require_dims(cfg.initial_guess->size() == sys.size(), "mskp: initial guess length does not match system size");
    u = unvec(*cfg.initial_guess, n, nodes);
  }
  const Matrix b = unvec(sys.rhs, n, nodes);
  const Index inner_before = precond.inner_iterations();

  SolveReport report;
  Matrix r = b - apply_q(sys, u);
  const double r0 = r.norm();
  if (r0 == 0.0) {
    report.residual_history = {0.0};
    report.converged = true;
    return {vec(u), std::move(report)};
  }
  report.residual_history.push_back(1.0);
  while (report.iterations < cfg.max_outer) {
    u += precond.apply(r);
    r = b - apply_q(sys, u);
    ++report.iterations;
    const double res = r.norm() / r0;
    report.residual_history.push_back(res);
    if (res <= cfg.outer_tolerance) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(res) || res > cfg.divergence_threshold) break;
  }
  report.inner_iterations_total = precond.inner_iterations() - inner_before;
  return {vec(u), std::move(report)};
}

SolveResult mskp_solve(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg) {
  cfg.validate();
  params.validate();
  const MskpPreconditioner precond(sys, params, cfg);
  return mskp_solve(sys, precond, cfg);
}

SolveResult gkps_solve(const AssembledSystem& sys, double alpha, double beta, const SolverConfig& cfg) {
  return mskp_solve(sys, SplitParams{alpha, beta, 0.0}, cfg);
}

SolveResult kps_solve(const AssembledSystem& sys, double alpha, const SolverConfig& cfg) {
  return mskp_solve(sys, SplitParams{alpha, alpha, 0.0}, cfg);
}

SolveResult gmres_q(const AssembledSystem& sys, const SolverConfig& cfg) {
  const LinearOperator q = [&sys](const Vector& v) { return apply_q(sys, v); };
  return gmres_solve(q, sys.rhs, cfg);
}

SolveResult pgmres_mskp(const AssembledSystem& sys, const MskpPreconditioner& precond, const SolverConfig& cfg) {
  const LinearOperator q = [&sys](const Vector& v) { return apply_q(sys, v); };
  const LinearOperator p = [&precond](const Vector& v) { return precond.apply(v); };
  const Index inner_before = precond.inner_iterations();
  auto result = gmres_solve(q, sys.rhs, cfg, p);
  result.report.inner_iterations_total = precond.inner_iterations() - inner_before;
  return result;
}

SolveResult pgmres_mskp(const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg) {
  cfg.validate();
  params.validate();
  const MskpPreconditioner precond(sys, params, cfg);
  return pgmres_mskp(sys, precond, cfg);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kps: return "KPS";
    case Method::gkps: return "GKPS";
    case Method::mskp: return "MSKP";
    case Method::gmres: return "GMRES";
    case Method::gmres_gkps: return "GMRES-GKPS";
    case Method::gmres_mskp: return "GMRES-MSKP";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string key;
  for (char c : name) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "kps") return Method::kps;
  if (key == "gkps") return Method::gkps;
  if (key == "mskp") return Method::mskp;
  if (key == "gmres") return Method::gmres;
  if (key == "gmres-gkps" || key == "gmres_gkps") return Method::gmres_gkps;
  if (key == "gmres-mskp" || key == "gmres_mskp") return Method::gmres_mskp;
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool is_krylov(Method m) { return m == Method::gmres || m == Method::gmres_gkps || m == Method::gmres_mskp; }

SplitParams effective_params(Method method, const SplitParams& p) {
  switch (method) {
    case Method::kps: return {p.alpha, p.alpha, 0.0};
    case Method::gkps:
    case Method::gmres_gkps: return {p.alpha, p.beta, 0.0};
    default: return p;
  }
}

SolveResult run_method(Method method, const AssembledSystem& sys, const SplitParams& params, const SolverConfig& cfg) {
  const SplitParams p = effective_params(method, params);
  switch (method) {
    case Method::kps:
    case Method::gkps:
    case Method::mskp: return mskp_solve(sys, p, cfg);
    case Method::gmres: return gmres_q(sys, cfg);
    case Method::gmres_gkps:
    case Method::gmres_mskp: return pgmres_mskp(sys, p, cfg);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace mskp
