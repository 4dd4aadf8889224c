#include "mskp/problems.hpp"

#include "mskp/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mskp {

namespace {

void require_grid(Index n) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 interior points per direction");
}

/// Evaluates g(x, y) at the interior grid points, x fastest.
Vector sample_grid(Index n, const ScalarField& g) {
  const double h = 1.0 / static_cast<double>(n + 1);
  Vector out(n * n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) out[j * n + i] = g(static_cast<double>(i + 1) * h, static_cast<double>(j + 1) * h);
  }
  return out;
}

}  // namespace

PDEProblem diffusion_2d(Index n) {
  require_grid(n);
  const double h = 1.0 / static_cast<double>(n + 1);
  const auto t = SparseMatrix::tridiag(n, -1.0, 2.0, -1.0);
  const auto id = SparseMatrix::identity(n);
  SparseMatrix k = (kron(id, t) + kron(t, id)).scaled(1.0 / (h * h));

  constexpr double omega = 5.25 * std::numbers::pi;
  const Vector bubble = sample_grid(n, [](double x, double y) { return x * y * (1 - x) * (1 - y); });
  const Vector lap = sample_grid(n, [](double x, double y) { return -2.0 * (y * (1 - y) + x * (1 - x)); });

  PDEProblem p;
  p.name = "diffusion";
  p.n = n;
  p.h = h;
  p.mass = SparseMatrix::identity(n * n);
  p.stiffness = std::move(k);
  // f = u_t - lap(u)
  p.forcing = [bubble, lap](double time) -> Vector {
    return omega * std::cos(omega * time) * bubble - std::sin(omega * time) * lap;
  };
  p.psi = Vector::Zero(n * n);
  p.exact = [bubble](double time) -> Vector { return std::sin(omega * time) * bubble; };
  return p;
}

PDEProblem convdiff_2d(Index n) {
  require_grid(n);
  const double h = 1.0 / static_cast<double>(n + 1);
  const double h2 = h * h;
  const auto id = SparseMatrix::identity(n);
  const auto pn = SparseMatrix::tridiag(n, -1.0 / h2, 2.0 / h2, -1.0 / h2);
  const auto qn = SparseMatrix::tridiag(n, -1.0 / (2 * h) - 1.0 / h2, 2.0 / h2, 1.0 / (2 * h) - 1.0 / h2);

  PDEProblem p;
  p.name = "convdiff";
  p.n = n;
  p.h = h;
  p.mass = SparseMatrix::identity(n * n);
  p.stiffness = kron(id, pn) + kron(qn, id);
  // The constant-in-time all-ones vector solves M U' = -K U + F iff F = K 1.
  const Vector k_ones = p.stiffness.multiply(Vector::Ones(n * n));
  p.forcing = [k_ones](double) -> Vector { return k_ones; };
  p.psi = Vector::Ones(n * n);
  p.exact = [size = n * n](double) -> Vector { return Vector::Ones(size); };
  return p;
}

SparseMatrix fdm_2d_operator(Index n0, const ConvectionFields& fields) {
  require_grid(n0);
  const double h = 1.0 / static_cast<double>(n0 + 1);
  const double inv_h2 = 1.0 / (h * h);
  const double inv_2h = 1.0 / (2.0 * h);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(5 * n0 * n0));
  for (Index j = 0; j < n0; ++j) {
    for (Index i = 0; i < n0; ++i) {
      const double x = static_cast<double>(i + 1) * h;
      const double y = static_cast<double>(j + 1) * h;
      const Index row = j * n0 + i;
      const double c1 = fields.f1 ? fields.f1(x, y) : 0.0;
      const double c2 = fields.f2 ? fields.f2(x, y) : 0.0;
      const double c0 = fields.f ? fields.f(x, y) : 0.0;
      t.push_back({row, row, -4.0 * inv_h2 + c0});
      if (i > 0) t.push_back({row, row - 1, inv_h2 - c1 * inv_2h});
      if (i + 1 < n0) t.push_back({row, row + 1, inv_h2 + c1 * inv_2h});
      if (j > 0) t.push_back({row, row - n0, inv_h2 - c2 * inv_2h});
      if (j + 1 < n0) t.push_back({row, row + n0, inv_h2 + c2 * inv_2h});
    }
  }
  return SparseMatrix::from_triplets(n0 * n0, n0 * n0, t);
}

ConvectionFields default_sylvester_fields() {
  return {[](double x, double) { return x; }, [](double, double y) { return y; }, [](double, double) { return 0.0; }};
}

SylvesterProblem sylvester_problem(Index n0, Index s, std::uint64_t seed,
                                   const std::optional<ConvectionFields>& b_fields) {
  require_grid(n0);
  if (s < 1) throw std::invalid_argument("Sylvester forcing rank must be at least 1");
  SylvesterProblem p;
  p.n0 = n0;
  p.n = n0 * n0;
  p.op_a = fdm_2d_operator(n0, default_sylvester_fields());
  p.op_b = b_fields ? fdm_2d_operator(n0, *b_fields) : p.op_a;
  p.seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  p.e.resize(p.n, s);
  p.f.resize(p.n, s);
  for (Index c = 0; c < s; ++c) {
    for (Index r = 0; r < p.n; ++r) p.e(r, c) = unit(rng);
  }
  for (Index c = 0; c < s; ++c) {
    for (Index r = 0; r < p.n; ++r) p.f(r, c) = unit(rng);
  }
  return p;
}

PDEProblem SylvesterProblem::as_pde() const {
  const auto id = SparseMatrix::identity(n);
  PDEProblem p;
  p.name = "sylvester";
  p.n = n0;
  p.h = 1.0 / static_cast<double>(n0 + 1);
  p.mass = SparseMatrix::identity(n * n);
  p.stiffness = (kron(id, op_a) + kron(op_b.transpose(), id)).scaled(-1.0);
  const Vector forcing = vec(e * f.transpose());
  p.forcing = [forcing](double) -> Vector { return forcing; };
  p.psi = Vector::Zero(n * n);
  return p;
}

AssembledSystem build_system(const PDEProblem& problem, Index steps, double tau) {
  return assemble(gam5_matrices(steps, tau), problem.mass, problem.stiffness, problem.forcing, problem.psi);
}

AssembledSystem build_system(const PDEProblem& problem, Index steps) {
  return build_system(problem, steps, 1.0 / static_cast<double>(steps));
}

Vector exact_solution(const PDEProblem& problem, const TimeDiscretization& time) {
  if (!problem.exact) throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
  const Index n = problem.mass.rows();
  Matrix u(n, time.nodes());
  for (Index j = 0; j < time.nodes(); ++j) u.col(j) = (*problem.exact)(static_cast<double>(j) * time.tau);
  return vec(u);
}

}  // namespace mskp
