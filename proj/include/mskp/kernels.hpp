#pragma once

#include "mskp/sparse.hpp"

#include <string>
#include <vector>

namespace mskp {

enum class KernelKind { linear, gaussian, periodic };

/// Hyperparameters shared by every library element of the same kind.
struct KernelHyper {
  double variance = 1.0;     ///< sigma_f^2
  double offset = 0.0;       ///< c, linear kernel
  double lengthscale = 1.0;  ///< iota, gaussian and periodic
  double period = 1.0;       ///< p, periodic

  void validate() const;
};

/// A basic kernel or the product of two basic kernels.
struct KernelSpec {
  std::vector<KernelKind> factors;
  KernelHyper hyper;

  void validate() const;
  [[nodiscard]] std::string name() const;
};

/// Partial derivatives of one kernel evaluation with respect to the
/// log lengthscale, the log period and the linear offset.
struct KernelGradient {
  double value = 0.0;
  double d_log_lengthscale = 0.0;
  double d_log_period = 0.0;
  double d_offset = 0.0;
};

double basic_kernel(KernelKind kind, const KernelHyper& h, double x, double xp);
double kernel_eval(const KernelSpec& spec, double x, double xp);
KernelGradient kernel_eval_with_gradient(const KernelSpec& spec, double x, double xp);

/// Gram matrix k(x_i, y_j).
Matrix gram(const KernelSpec& spec, const Vector& x, const Vector& y);

/// Ordered list of kernels combined per task with nonnegative weights.
struct KernelLibrary {
  std::vector<std::vector<KernelKind>> elements;
  KernelHyper hyper;

  [[nodiscard]] Index size() const { return static_cast<Index>(elements.size()); }
  [[nodiscard]] KernelSpec element(Index i) const;
  [[nodiscard]] bool uses(KernelKind kind) const;
  [[nodiscard]] std::vector<std::string> names() const;
  void validate() const;

  /// {k_l, k_g, k_p, k_ll, k_lg, k_lp, k_gp}.
  static KernelLibrary full();
  /// {k_g, k_p, k_gp}, used for the PDE benchmarks.
  static KernelLibrary pde();
  /// {k_g, k_l, k_gl}, used for the Sylvester benchmark.
  static KernelLibrary sylvester();
  /// Parses names such as "g,p,gp" or a preset ("full", "pde", "sylvester").
  static KernelLibrary parse(const std::string& text);
};

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(char c);

}  // namespace mskp
