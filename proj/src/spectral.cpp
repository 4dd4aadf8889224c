#include "mskp/spectral.hpp"

#include "mskp/error.hpp"
#include "mskp/kron.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace mskp {

namespace {

void require_dense_size(Index n) {
  if (n > kDenseOracleCap) {
    throw NumericalError("dense spectral analysis limited to dimension " + std::to_string(kDenseOracleCap) +
                         "; use theoretical_bound for larger systems");
  }
}

double min_real(std::span<const Complex> eigs) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& z : eigs) out = std::min(out, z.real());
  return out;
}

double max_abs(std::span<const Complex> eigs) {
  double out = 0.0;
  for (const auto& z : eigs) out = std::max(out, std::abs(z));
  return out;
}

/// Solves with B densely; empty optional-like flag when B is numerically singular.
bool temporal_is_invertible(const Matrix& b) {
  const Eigen::FullPivLU<Matrix> lu(b);
  return lu.isInvertible();
}

}  // namespace

bool TheoremHypotheses::ok(double tol) const {
  return temporal_invertible && min_re_stiffness >= -tol && min_re_temporal > 0.0;
}

std::vector<Complex> dense_eigenvalues(const Matrix& m) {
  require_dense_size(m.rows());
  const Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve did not converge");
  const Eigen::VectorXcd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<Complex> temporal_eigenvalues(const AssembledSystem& sys) {
  const Matrix a = sys.time.a.to_dense();
  const Matrix b = sys.time.b.to_dense();
  const Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) {
    throw NumericalError("temporal matrix B is singular; eliminate the initial block first");
  }
  return dense_eigenvalues(lu.solve(a));
}

TheoremHypotheses check_hypotheses(const AssembledSystem& sys) {
  TheoremHypotheses h;
  const Matrix m = sys.mass.to_dense();
  const Matrix k = sys.stiffness.to_dense();
  h.min_re_stiffness = min_real(dense_eigenvalues(m.lu().solve(k)));
  h.temporal_invertible = temporal_is_invertible(sys.time.b.to_dense());
  h.min_re_temporal = h.temporal_invertible ? min_real(temporal_eigenvalues(sys)) : std::numeric_limits<double>::quiet_NaN();
  return h;
}

double phi(std::span<const Complex> temporal_eigs, double alpha, double beta) {
  const double shift = 0.5 * (alpha - beta);
  const double center = 0.5 * (alpha + beta);
  double out = 0.0;
  for (const auto& eig : temporal_eigs) {
    const Complex lambda = eig + shift;
    out = std::max(out, std::abs(lambda - center) / std::abs(lambda + center));
  }
  return out;
}

double theoretical_bound(std::span<const Complex> temporal_eigs, const SplitParams& params) {
  params.validate();
  return 0.5 * ((2.0 - params.omega) * phi(temporal_eigs, params.alpha, params.beta) + params.omega);
}

double theoretical_bound(const AssembledSystem& sys, const SplitParams& params) {
  return theoretical_bound(temporal_eigenvalues(sys), params);
}

Matrix dense_preconditioner(const AssembledSystem& sys, const SplitParams& params) {
  params.validate();
  require_dense_size(sys.size());
  const Matrix g = (sys.time.a + sys.time.b.scaled(params.alpha)).to_dense();
  const Matrix s = (sys.stiffness.scaled(sys.time.tau) + sys.mass.scaled(params.beta)).to_dense();
  return dense_kron(g, s) / params.scale();
}

Matrix dense_iteration_matrix(const AssembledSystem& sys, const SplitParams& params) {
  params.validate();
  require_dense_size(sys.size());
  const double half_sum = 0.5 * (params.alpha + params.beta);
  const Matrix a = sys.time.a.to_dense();
  const Matrix b = sys.time.b.to_dense();
  const Matrix m = sys.mass.to_dense();
  const Matrix k = sys.stiffness.to_dense();
  const double tau = sys.time.tau;
  const Matrix g = a + params.alpha * b;
  const Matrix s = tau * k + params.beta * m;
  const Matrix nk = tau * k - params.alpha * m;
  const Matrix rhs = dense_kron(a - params.beta * b, nk) + dense_kron(g, half_sum * params.omega * m) +
                     half_sum * params.omega * dense_kron(b, nk);
  return dense_kron(g, s).partialPivLu().solve(rhs);
}

SpectrumReport iteration_matrix_radius(const AssembledSystem& sys, const SplitParams& params) {
  SpectrumReport r;
  r.eigenvalues = dense_eigenvalues(dense_iteration_matrix(sys, params));
  r.spectral_radius = max_abs(r.eigenvalues);
  const TheoremHypotheses h = check_hypotheses(sys);
  r.hypothesis_ok = h.ok();
  if (h.temporal_invertible) r.bound = theoretical_bound(sys, params);
  return r;
}

SpectrumReport preconditioned_spectrum(const AssembledSystem& sys, const SplitParams& params) {
  SpectrumReport r;
  const Matrix p = dense_preconditioner(sys, params);
  r.eigenvalues = dense_eigenvalues(p.partialPivLu().solve(dense_q(sys)));
  r.spectral_radius = max_abs(r.eigenvalues);
  const TheoremHypotheses h = check_hypotheses(sys);
  r.hypothesis_ok = h.ok();
  if (h.temporal_invertible) r.bound = theoretical_bound(sys, params);
  return r;
}

SpectrumReport system_spectrum(const AssembledSystem& sys) {
  SpectrumReport r;
  r.eigenvalues = dense_eigenvalues(dense_q(sys));
  r.spectral_radius = max_abs(r.eigenvalues);
  return r;
}

void write_scatter_header(std::ostream& os) { os << "re,im,tag\n"; }

void write_scatter_rows(std::ostream& os, std::span<const Complex> eigs, const std::string& tag) {
  os << std::setprecision(17);
  for (const auto& z : eigs) os << z.real() << ',' << z.imag() << ',' << tag << '\n';
}

}  // namespace mskp
