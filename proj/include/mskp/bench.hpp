#pragma once

#include "mskp/pipeline.hpp"
#include "mskp/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mskp {

/// One problem instance of a table. For the PDE families `grid` is n
/// (h = 1/(n+1)) and the size key is `steps`; for Sylvester `grid` is n0 and
/// the size key is n0^2.
struct BenchInstance {
  Index grid = 15;
  Index steps = 16;
  double tau = 1.0 / 16.0;
  std::uint64_t seed = 1;

  [[nodiscard]] Index size_key(ProblemKind kind) const { return kind == ProblemKind::sylvester ? grid * grid : steps; }
};

enum class ParamSource { fixed, traversed, model };

std::string to_string(ParamSource s);
ParamSource parse_param_source(const std::string& name);

struct BenchSpec {
  std::string table;
  ProblemKind problem = ProblemKind::diffusion;
  std::vector<BenchInstance> instances;
  std::vector<Method> methods;
  /// Where MSKP and GMRES-MSKP take (alpha, beta, omega) from. KPS and GKPS
  /// parameters are traversed unless the source is fixed.
  ParamSource source = ParamSource::traversed;
  SplitParams fixed;
  std::optional<MTGPModel> model;
  double tolerance = 1e-6;
  InnerSolver inner = InnerSolver::direct;
  SearchGrid grid = bench_search_grid();

  static SearchGrid bench_search_grid();
  void validate() const;
};

/// Presets: table3-small, table3, table5-small, table5, table8.
/// `n0` narrows table8 to one operator size; `seeds` repeats every
/// Sylvester instance over consecutive seeds starting at `seed`.
BenchSpec bench_preset(const std::string& table_id, std::uint64_t seed = 1, std::optional<Index> n0 = std::nullopt,
                       Index seeds = 1);

struct BenchRow {
  std::string method;
  std::string problem;
  Index n = 0;  ///< grid points per direction (n0 for Sylvester)
  Index m = 0;  ///< time steps
  double tau = 0.0;
  SplitParams params;
  Index iterations = 0;
  double final_res = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string error;
};

/// Runs every (instance, method) pair. A failing run is recorded in its row
/// and the harness moves on.
std::vector<BenchRow> run_bench(const BenchSpec& spec);

/// Columns: method,problem,n,m,tau,alpha,beta,omega,iterations,final_res,converged,wall_seconds,seed,error
void write_bench_header(std::ostream& os);
void write_bench_rows(std::ostream& os, const std::vector<BenchRow>& rows);

/// Parameters a method would use on `sys` given a spec (traversal or model).
SplitParams resolve_params(const BenchSpec& spec, Method method, const AssembledSystem& sys, Index size_key);

}  // namespace mskp
