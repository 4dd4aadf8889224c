#pragma once

#include "mskp/bvm.hpp"
#include "mskp/solvers.hpp"

#include <complex>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace mskp {

using Complex = std::complex<double>;

/// Premises of the MSKP convergence theorem, evaluated numerically.
struct TheoremHypotheses {
  double min_re_stiffness = 0.0;  ///< min Re sigma(M^{-1} K)
  double min_re_temporal = 0.0;   ///< min Re sigma(B^{-1} A); NaN when B is singular
  bool temporal_invertible = false;

  /// min Re sigma(M^{-1}K) >= -tol and min Re sigma(B^{-1}A) > 0.
  [[nodiscard]] bool ok(double tol = 1e-10) const;
  /// Upper end of the proven beta range, tau * min Re sigma(M^{-1}K).
  [[nodiscard]] double beta_limit(double tau) const { return tau * min_re_stiffness; }
};

struct SpectrumReport {
  std::vector<Complex> eigenvalues;
  double spectral_radius = 0.0;
  /// (1/2)[(2 - omega) phi + omega]; NaN when B is singular.
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool hypothesis_ok = false;
};

TheoremHypotheses check_hypotheses(const AssembledSystem& sys);

/// Eigenvalues of B^{-1} A. Throws NumericalError when B is singular.
std::vector<Complex> temporal_eigenvalues(const AssembledSystem& sys);

/// phi(alpha, beta) = max over lambda in sigma(B^{-1}A + (alpha-beta)/2 I) of
/// |lambda - (alpha+beta)/2| / |lambda + (alpha+beta)/2|.
double phi(std::span<const Complex> temporal_eigs, double alpha, double beta);

/// (1/2)[(2 - omega) phi(alpha, beta) + omega]. Throws NumericalError when B is singular.
double theoretical_bound(const AssembledSystem& sys, const SplitParams& params);
double theoretical_bound(std::span<const Complex> temporal_eigs, const SplitParams& params);

/// Dense iteration matrix T(alpha, beta, omega) assembled from its Kronecker form.
Matrix dense_iteration_matrix(const AssembledSystem& sys, const SplitParams& params);
/// Dense splitting matrix P(alpha, beta, omega).
Matrix dense_preconditioner(const AssembledSystem& sys, const SplitParams& params);

/// Eigenvalues and spectral radius of T. Total dimension capped at kDenseOracleCap.
SpectrumReport iteration_matrix_radius(const AssembledSystem& sys, const SplitParams& params);

/// Eigenvalues of P^{-1} Q (= I - T).
SpectrumReport preconditioned_spectrum(const AssembledSystem& sys, const SplitParams& params);

/// Eigenvalues of Q itself (no preconditioner).
SpectrumReport system_spectrum(const AssembledSystem& sys);

std::vector<Complex> dense_eigenvalues(const Matrix& m);

/// Scatter CSV with columns re,im,tag. Tags: none, kps, gkps, mskp.
void write_scatter_header(std::ostream& os);
void write_scatter_rows(std::ostream& os, std::span<const Complex> eigs, const std::string& tag);

}  // namespace mskp
