#include "mskp/error.hpp"
#include "mskp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mskp {

double SolveReport::fractional_iterations(double tolerance) const {
  if (!converged) return std::numeric_limits<double>::infinity();
  if (iterations == 0 || residual_history.size() < 2) return 0.0;
  const double prev = residual_history[residual_history.size() - 2];
  const double last = residual_history.back();
  const auto k = static_cast<double>(iterations);
  if (!(last > 0.0) || !(prev > last)) return k;
  const double frac = std::log(prev / tolerance) / std::log(prev / last);
  return (k - 1.0) + std::clamp(frac, 0.0, 1.0);
}

void SolverConfig::validate() const {
  if (!(outer_tolerance > 0.0 && outer_tolerance < 1.0)) throw std::invalid_argument("outer tolerance must lie in (0, 1)");
  if (!(inner_tolerance > 0.0 && inner_tolerance < 1.0)) throw std::invalid_argument("inner tolerance must lie in (0, 1)");
  if (max_outer < 1 || inner_max < 1) throw std::invalid_argument("iteration caps must be positive");
  if (restart < 0) throw std::invalid_argument("restart length must be non-negative");
}

namespace {

/// Solves the leading j x j upper-triangular system of the rotated Hessenberg matrix.
Vector back_substitute(const Matrix& h, const Vector& g, Index j) {
  Vector y = g.head(j);
  h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solveInPlace(y);
  return y;
}

Vector combine(const std::vector<Vector>& basis, const Vector& y) {
  Vector out = Vector::Zero(basis.front().size());
  for (Index i = 0; i < y.size(); ++i) out.noalias() += y[i] * basis[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

SolveResult gmres_solve(const LinearOperator& apply, const Vector& b, const SolverConfig& cfg,
                        const LinearOperator& precondition) {
  cfg.validate();
  const Index n = b.size();
  if (!b.allFinite()) throw std::invalid_argument("gmres: right-hand side is not finite");
  Vector x = cfg.initial_guess ? *cfg.initial_guess : Vector::Zero(n);
  require_dims(x.size() == n, "gmres: initial guess length differs from right-hand side");

  const auto precond = [&](Vector v) { return precondition ? precondition(v) : v; };

  SolveReport report;
  Vector r = b - apply(x);
  require_dims(r.size() == n, "gmres: operator output length differs from right-hand side");
  const double true_base = r.norm();
  Vector z = precond(r);
  const double base = cfg.monitor == ResidualMonitor::true_residual ? true_base : z.norm();
  if (base == 0.0) {
    report.residual_history = {0.0};
    report.converged = true;
    return {std::move(x), std::move(report)};
  }
  report.residual_history.push_back(1.0);

  const Index cycle = cfg.restart > 0 ? cfg.restart : cfg.max_outer;
  bool done = false;
  while (!done) {
    const double beta = z.norm();
    if (beta == 0.0) break;
    std::vector<Vector> v;
    v.push_back(z / beta);
    Matrix h = Matrix::Zero(cycle + 1, cycle);
    Vector cs = Vector::Zero(cycle);
    Vector sn = Vector::Zero(cycle);
    Vector g = Vector::Zero(cycle + 1);
    g[0] = beta;

    Index j = 0;
    for (; j < cycle; ++j) {
      Vector w = precond(apply(v.back()));
      const double wnorm = w.norm();
      for (Index i = 0; i <= j; ++i) {
        h(i, j) = w.dot(v[static_cast<std::size_t>(i)]);
        w.noalias() -= h(i, j) * v[static_cast<std::size_t>(i)];
      }
      const double h_next = w.norm();
      h(j + 1, j) = h_next;
      const bool breakdown = !(h_next > 1e-14 * wnorm);

      for (Index i = 0; i < j; ++i) {
        const double a = h(i, j);
        const double c = h(i + 1, j);
        h(i, j) = cs[i] * a + sn[i] * c;
        h(i + 1, j) = -sn[i] * a + cs[i] * c;
      }
      const double den = std::hypot(h(j, j), h(j + 1, j));
      cs[j] = h(j, j) / den;
      sn[j] = h(j + 1, j) / den;
      h(j, j) = den;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++report.iterations;
      double res = std::abs(g[j + 1]) / base;
      if (cfg.monitor == ResidualMonitor::true_residual) {
        const Vector xk = x + combine(v, back_substitute(h, g, j + 1));
        res = (b - apply(xk)).norm() / base;
      }
      report.residual_history.push_back(res);

      if (!std::isfinite(res)) throw NumericalError("gmres: residual became non-finite");
      if (res <= cfg.outer_tolerance || breakdown || report.iterations >= cfg.max_outer) {
        report.converged = res <= cfg.outer_tolerance;
        done = true;
        ++j;
        break;
      }
      v.push_back(w / h_next);
    }
    x += combine(v, back_substitute(h, g, std::min(j, cycle)));
    if (!done) {
      r = b - apply(x);
      z = precond(r);
    }
  }
  return {std::move(x), std::move(report)};
}

}  // namespace mskp
