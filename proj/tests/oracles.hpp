#pragma once
// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the library routine it checks.

#include "mskp/bvm.hpp"
#include "mskp/mtgp.hpp"
#include "mskp/solvers.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mskp::oracle {

/// Kernel closed forms typed out again rather than taken from kernels.cpp.
inline double kernel(const std::vector<KernelKind>& factors, const KernelHyper& h, double x, double y) {
  double v = 1.0;
  for (KernelKind k : factors) {
    switch (k) {
      case KernelKind::linear: v *= h.variance * (x - h.offset) * (y - h.offset); break;
      case KernelKind::gaussian: v *= h.variance * std::exp(-(x - y) * (x - y) / (2 * h.lengthscale * h.lengthscale)); break;
      case KernelKind::periodic: {
        const double s = std::sin(std::numbers::pi * (x - y) / h.period);
        v *= h.variance * std::exp(-2.0 * s * s / (h.lengthscale * h.lengthscale));
        break;
      }
    }
  }
  return v;
}

/// Sigma entry by entry: K^t_lb sum_xi sqrt(c_l c_b) k_xi(x_i, x_j) + delta sigma_l^2.
inline Matrix naive_covariance(const MTGPModel& m) {
  const Index n = m.points(), t = m.tasks();
  const Vector x = (m.inputs.array() - m.input_shift) / m.input_scale;
  const Matrix kt = m.task_factor * m.task_factor.transpose();
  Matrix s(n * t, n * t);
  for (Index l = 0; l < t; ++l)
    for (Index b = 0; b < t; ++b)
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          double k = 0.0;
          for (Index xi = 0; xi < m.library.size(); ++xi)
            k += std::sqrt(m.weights(l, xi) * m.weights(b, xi)) *
                 kernel(m.library.elements[static_cast<std::size_t>(xi)], m.library.hyper, x[i], x[j]);
          s(l * n + i, b * n + j) = kt(l, b) * k + (l == b && i == j ? m.noise[l] : 0.0);
        }
  return s;
}

inline Vector stacked_targets(const MTGPModel& m) {
  Vector y(m.points() * m.tasks());
  for (Index l = 0; l < m.tasks(); ++l)
    for (Index i = 0; i < m.points(); ++i)
      y[l * m.points() + i] = (m.targets(i, l) - m.target_mean[l]) / m.target_scale[l];
  return y;
}

/// -1/2 y^T S^{-1} y - 1/2 log|S| - (Mn/2) log 2 pi with S = Sigma + jitter I.
inline double naive_log_likelihood(const MTGPModel& m) {
  Matrix s = naive_covariance(m);
  s.diagonal().array() += 1e-8 * s.diagonal().mean();
  const Vector y = stacked_targets(m);
  const Eigen::FullPivLU<Matrix> lu(s);
  const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
  return -0.5 * y.dot(lu.solve(y)) - 0.5 * logdet - 0.5 * static_cast<double>(y.size()) * std::log(2 * std::numbers::pi);
}

/// Central differences of the library likelihood over the packed parameters.
inline Vector fd_gradient(const MTGPModel& m, double h = 1e-5) {
  const Vector theta = pack_parameters(m);
  Vector g(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    MTGPModel a = m, b = m;
    Vector tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    unpack_parameters(a, tp);
    unpack_parameters(b, tm);
    g[i] = (mskp::log_marginal_likelihood(a) - mskp::log_marginal_likelihood(b)) / (2 * h);
  }
  return g;
}

/// Worst componentwise error, relative to max(|fd_i|, 1e-3 ||fd||).
inline double gradient_mismatch(const Vector& analytic, const Vector& fd) {
  const double floor = 1e-3 * fd.norm();
  double worst = 0.0;
  for (Index i = 0; i < fd.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / std::max({std::abs(fd[i]), floor, 1e-12}));
  return worst;
}

struct ScalarPosterior {
  double mean;
  double variance;
};

/// Textbook single-output GP posterior with kernel k, noise s2 and the same
/// relative jitter as the library.
template <class Kernel>
ScalarPosterior single_task_posterior(const Vector& x, const Vector& y, Kernel k, double s2, double xs) {
  const Index n = x.size();
  Matrix kxx(n, n);
  Vector kx(n);
  for (Index i = 0; i < n; ++i) {
    kx[i] = k(x[i], xs);
    for (Index j = 0; j < n; ++j) kxx(i, j) = k(x[i], x[j]);
  }
  kxx.diagonal().array() += s2;
  kxx.diagonal().array() += 1e-8 * kxx.diagonal().mean();
  const Eigen::FullPivLU<Matrix> lu(kxx);
  return {kx.dot(lu.solve(y)), k(xs, xs) - kx.dot(lu.solve(kx))};
}

/// Random valid model over `library` with `tasks` tasks and `points` inputs.
inline MTGPModel random_model(std::mt19937_64& rng, const KernelLibrary& library, Index tasks, Index points) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  Vector x(points);
  for (Index i = 0; i < points; ++i) x[i] = 10.0 * u(rng) + static_cast<double>(i);
  Matrix y(points, tasks);
  for (Index i = 0; i < points; ++i)
    for (Index l = 0; l < tasks; ++l) y(i, l) = g(rng);
  ModelInit init;
  init.hyper = {1.0, -0.5 + u(rng), 0.2 + 0.6 * u(rng), 0.3 + 1.2 * u(rng)};
  MTGPModel m = make_model(x, y, library, init);
  for (Index l = 0; l < tasks; ++l) {
    for (Index xi = 0; xi < library.size(); ++xi) m.weights(l, xi) = 0.1 + u(rng);
    for (Index j = 0; j < l; ++j) m.task_factor(l, j) = 0.5 * g(rng);
    m.task_factor(l, l) = 0.5 + u(rng);
    m.noise[l] = 0.01 + 0.2 * u(rng);
  }
  return m;
}

/// Dense a (x) b by its entrywise definition.
inline Matrix kron_dense(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

/// Q = A (x) M + tau B (x) K materialized from the factors.
inline Matrix dense_system(const AssembledSystem& sys) {
  return kron_dense(sys.time.a.to_dense(), sys.mass.to_dense()) +
         sys.time.tau * kron_dense(sys.time.b.to_dense(), sys.stiffness.to_dense());
}

/// One stationary step u0 + P^{-1}(b - Q u0) with P built densely from its definition.
inline Vector dense_mskp_step(const AssembledSystem& sys, const SplitParams& p, const Vector& u0) {
  const Matrix g = sys.time.a.to_dense() + p.alpha * sys.time.b.to_dense();
  const Matrix s = sys.time.tau * sys.stiffness.to_dense() + p.beta * sys.mass.to_dense();
  const Matrix pm = kron_dense(g, s) / p.scale();
  const Matrix q = dense_system(sys);
  return u0 + pm.fullPivLu().solve(sys.rhs - q * u0);
}

/// `iterations` GKPS steps in the two half-step form; B must be nonsingular.
inline std::vector<Vector> gkps_two_step(const AssembledSystem& sys, double alpha, double beta, Index iterations) {
  const double tau = sys.time.tau;
  const Matrix a = sys.time.a.to_dense(), b = sys.time.b.to_dense();
  const Matrix m = sys.mass.to_dense(), k = sys.stiffness.to_dense();
  const auto half = kron_dense(a + alpha * b, m).fullPivLu();
  const auto full = kron_dense(b, tau * k + beta * m).fullPivLu();
  const Matrix right_half = kron_dense(b, tau * k - alpha * m);
  const Matrix right_full = kron_dense(a - beta * b, m);
  std::vector<Vector> iterates;
  Vector u = Vector::Zero(sys.size());
  for (Index it = 0; it < iterations; ++it) {
    const Vector uh = half.solve(sys.rhs - right_half * u);
    u = full.solve(sys.rhs - right_full * uh);
    iterates.push_back(u);
  }
  return iterates;
}

}  // namespace mskp::oracle
