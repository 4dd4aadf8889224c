#include "mskp/bvm.hpp"

#include "mskp/error.hpp"

#include <Eigen/SparseLU>
#include <json.hpp>

#include <array>
#include <fstream>
#include <iomanip>

namespace mskp {

namespace {

constexpr double kGam5Scale = 720.0;
constexpr std::array<double, 5> kGam5First{251, 646, -264, 106, -19};
constexpr std::array<double, 5> kGam5Interior{-19, 346, 456, -74, 11};
constexpr std::array<double, 5> kGam5Penultimate{11, -74, 456, 346, -19};
constexpr std::array<double, 5> kGam5Last{-19, 106, -264, 646, 251};

void put_row(std::vector<Triplet>& t, Index row, Index col0, const std::array<double, 5>& w) {
  for (Index j = 0; j < 5; ++j) t.push_back({row, col0 + j, w[static_cast<std::size_t>(j)] / kGam5Scale});
}

}  // namespace

TimeDiscretization gam5_matrices(Index steps, double tau) {
  if (steps < 5) throw std::invalid_argument("GAM-5 needs at least 5 time steps");
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  const Index m = steps;
  const Index nodes = m + 1;

  std::vector<Triplet> ta;
  ta.push_back({0, 0, 1.0});
  for (Index i = 1; i <= m; ++i) {
    ta.push_back({i, i - 1, -1.0});
    ta.push_back({i, i, 1.0});
  }

  std::vector<Triplet> tb;
  put_row(tb, 1, 0, kGam5First);
  for (Index i = 2; i <= m - 2; ++i) put_row(tb, i, i - 2, kGam5Interior);
  put_row(tb, m - 1, m - 4, kGam5Penultimate);
  put_row(tb, m, m - 4, kGam5Last);

  return {m, tau, SparseMatrix::from_triplets(nodes, nodes, ta), SparseMatrix::from_triplets(nodes, nodes, tb)};
}

AssembledSystem assemble(TimeDiscretization time, SparseMatrix mass, SparseMatrix stiffness, const Matrix& forcing,
                         const Vector& psi) {
  require_dims(time.a.square() && time.b.square() && time.a.rows() == time.b.rows(),
               "assemble: temporal matrices must be square and of equal order");
  require_dims(mass.square() && stiffness.square() && mass.rows() == stiffness.rows(),
               "assemble: mass and stiffness must be square and of equal order");
  const Index n = mass.rows();
  require_dims(forcing.rows() == n && forcing.cols() == time.nodes(),
               "assemble: forcing must have one column of length space_dim per time node");
  require_dims(psi.size() == n, "assemble: initial vector length differs from space_dim");

  Matrix b = time.tau * forcing * time.b.storage().transpose();
  b.col(0) += psi;
  Vector rhs = vec(b);
  return {std::move(time), std::move(mass), std::move(stiffness), std::move(rhs)};
}

AssembledSystem assemble(TimeDiscretization time, SparseMatrix mass, SparseMatrix stiffness,
                         const ForcingSampler& forcing, const Vector& psi) {
  Matrix f(mass.rows(), time.nodes());
  for (Index j = 0; j < time.nodes(); ++j) {
    Vector fj = forcing(static_cast<double>(j) * time.tau);
    require_dims(fj.size() == mass.rows(), "assemble: forcing sampler returned wrong length");
    f.col(j) = fj;
  }
  return assemble(std::move(time), std::move(mass), std::move(stiffness), f, psi);
}

Matrix apply_q(const AssembledSystem& sys, const Matrix& u) {
  require_dims(u.rows() == sys.space_dim() && u.cols() == sys.nodes(), "apply_q: operand shape mismatch");
  Matrix out = kron_apply(KroneckerOperator(sys.time.a, sys.mass), u);
  out.noalias() += sys.time.tau * kron_apply(KroneckerOperator(sys.time.b, sys.stiffness), u);
  return out;
}

Vector apply_q(const AssembledSystem& sys, const Vector& u) {
  require_dims(u.size() == sys.size(), "apply_q: vector length does not match system size");
  const Eigen::Map<const Matrix> um(u.data(), sys.space_dim(), sys.nodes());
  return vec(apply_q(sys, Matrix(um)));
}

Matrix dense_q(const AssembledSystem& sys) {
  const std::array<KronTerm, 2> terms{KronTerm{1.0, KroneckerOperator(sys.time.a, sys.mass)},
                                      KronTerm{sys.time.tau, KroneckerOperator(sys.time.b, sys.stiffness)}};
  return materialize(terms);
}

AssembledSystem eliminate_initial_block(const AssembledSystem& sys) {
  const Index nodes = sys.nodes();
  const Index n = sys.space_dim();
  if (nodes < 2) throw std::invalid_argument("eliminate_initial_block: need at least two time nodes");
  const Matrix a0 = sys.time.a.block(0, 0, 1, nodes).to_dense();
  const Matrix b0 = sys.time.b.block(0, 0, 1, nodes).to_dense();
  Matrix e1 = Matrix::Zero(1, nodes);
  e1(0, 0) = 1.0;
  if (!a0.isApprox(e1) || b0.norm() != 0.0) {
    throw std::invalid_argument("eliminate_initial_block: row 0 must be the initial condition u_0");
  }

  const Eigen::Map<const Matrix> rhs(sys.rhs.data(), n, nodes);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Eigen::SparseMatrix<double>(sys.mass.storage()));
  if (lu.info() != Eigen::Success) throw NumericalError("eliminate_initial_block: mass matrix is singular");
  const Vector u0 = lu.solve(Vector(rhs.col(0)));

  const Index m = nodes - 1;
  TimeDiscretization reduced{sys.time.steps, sys.time.tau, sys.time.a.block(1, 1, m, m), sys.time.b.block(1, 1, m, m)};
  const Vector a_col = sys.time.a.block(1, 0, m, 1).to_dense();
  const Vector b_col = sys.time.b.block(1, 0, m, 1).to_dense();
  const Vector mu0 = sys.mass.multiply(u0);
  const Vector ku0 = sys.stiffness.multiply(u0);

  Matrix new_rhs = rhs.rightCols(m);
  new_rhs -= mu0 * a_col.transpose() + sys.time.tau * ku0 * b_col.transpose();
  return {std::move(reduced), sys.mass, sys.stiffness, vec(new_rhs)};
}

void export_system(const AssembledSystem& sys, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const char* name, const SparseMatrix& m) {
    std::ofstream os(dir / name);
    write_coordinate(os, m);
  };
  write("A.mtx", sys.time.a);
  write("B.mtx", sys.time.b);
  write("M.mtx", sys.mass);
  write("K.mtx", sys.stiffness);
  {
    std::ofstream os(dir / "rhs.txt");
    os << std::setprecision(17);
    for (Index i = 0; i < sys.rhs.size(); ++i) os << sys.rhs[i] << '\n';
  }
  nlohmann::json manifest{{"steps", sys.time.steps},
                          {"tau", sys.time.tau},
                          {"nodes", sys.nodes()},
                          {"space_dim", sys.space_dim()},
                          {"layout", "time-major blocks, u = [U_0; U_1; ...]"}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace mskp
