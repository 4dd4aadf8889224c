#include "mskp/bench.hpp"

#include "mskp/error.hpp"

#include <chrono>
#include <iomanip>
#include <map>
#include <ostream>

namespace mskp {

std::string to_string(ParamSource s) {
  switch (s) {
    case ParamSource::fixed: return "fixed";
    case ParamSource::traversed: return "traversed";
    case ParamSource::model: return "model";
  }
  return "?";
}

ParamSource parse_param_source(const std::string& name) {
  if (name == "fixed") return ParamSource::fixed;
  if (name == "traversed") return ParamSource::traversed;
  if (name == "model") return ParamSource::model;
  throw std::invalid_argument("unknown parameter source '" + name + "'");
}

SearchGrid BenchSpec::bench_search_grid() {
  SearchGrid g;
  g.coarse_step = 0.25;
  g.coarse_omega_step = 0.25;
  return g;
}

void BenchSpec::validate() const {
  if (source == ParamSource::model && !model) throw std::invalid_argument("model parameter source needs a model");
  if (source == ParamSource::fixed) fixed.validate();
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
  grid.validate();
}

namespace {

std::vector<Method> all_methods() {
  return {Method::kps, Method::gkps, Method::mskp, Method::gmres, Method::gmres_gkps, Method::gmres_mskp};
}

std::vector<BenchInstance> pde_grid(bool small) {
  std::vector<BenchInstance> out;
  const std::vector<Index> steps = small ? std::vector<Index>{16} : std::vector<Index>{16, 32, 64};
  for (Index m : steps) {
    for (Index inv_h : steps) out.push_back({inv_h - 1, m, 1.0 / static_cast<double>(m), 1});
  }
  return out;
}

SearchSpace space_for(Method m) {
  switch (m) {
    case Method::kps: return SearchSpace::kps;
    case Method::gkps:
    case Method::gmres_gkps: return SearchSpace::gkps;
    default: return SearchSpace::mskp;
  }
}

}  // namespace

BenchSpec bench_preset(const std::string& table_id, std::uint64_t seed, std::optional<Index> n0, Index seeds) {
  BenchSpec spec;
  spec.table = table_id;
  if (table_id == "table3-small" || table_id == "table3" || table_id == "table5-small" || table_id == "table5") {
    spec.problem = table_id.rfind("table3", 0) == 0 ? ProblemKind::diffusion : ProblemKind::convdiff;
    spec.instances = pde_grid(table_id.ends_with("-small"));
    spec.methods = all_methods();
  } else if (table_id == "table8") {
    spec.problem = ProblemKind::sylvester;
    const std::vector<Index> sizes = n0 ? std::vector<Index>{*n0} : std::vector<Index>{4, 6, 8};
    for (Index g : sizes) {
      for (Index s = 0; s < std::max<Index>(1, seeds); ++s) {
        spec.instances.push_back({g, 10, kSylvesterTau, seed + static_cast<std::uint64_t>(s)});
      }
    }
    spec.methods = {Method::kps, Method::gkps, Method::mskp, Method::gmres};
  } else {
    throw std::invalid_argument("unknown table id '" + table_id + "' (table3-small, table3, table5-small, table5, table8)");
  }
  for (auto& inst : spec.instances) {
    if (spec.problem != ProblemKind::sylvester) inst.seed = seed;
  }
  return spec;
}

SplitParams resolve_params(const BenchSpec& spec, Method method, const AssembledSystem& sys, Index size_key) {
  if (method == Method::gmres) return {};
  if (spec.source == ParamSource::fixed) return effective_params(method, spec.fixed);
  const bool mskp_family = method == Method::mskp || method == Method::gmres_mskp;
  if (spec.source == ParamSource::model && mskp_family) {
    return predict_params(*spec.model, {size_key}).front().params;
  }
  SearchGrid g = spec.grid;
  g.space = space_for(method);
  g.solver.outer_tolerance = spec.tolerance;
  return traverse_optimal(sys, g).params;
}

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  spec.validate();
  std::vector<BenchRow> rows;
  for (const auto& inst : spec.instances) {
    ProblemSpec ps;
    ps.kind = spec.problem;
    ps.grid = inst.grid;
    ps.seed = inst.seed;
    ps.steps = inst.steps;
    ps.tau = inst.tau;
    AssembledSystem sys;
    std::string build_error;
    try {
      sys = spec.problem == ProblemKind::sylvester ? ps.build(inst.grid * inst.grid) : ps.build(inst.steps);
    } catch (const std::exception& e) {
      build_error = e.what();
    }
    std::map<SearchSpace, SplitParams> traversed;
    for (Method method : spec.methods) {
      BenchRow row;
      row.method = to_string(method);
      row.problem = to_string(spec.problem);
      row.n = inst.grid;
      row.m = inst.steps;
      row.tau = inst.tau;
      row.seed = inst.seed;
      if (!build_error.empty()) {
        row.error = build_error;
        rows.push_back(row);
        continue;
      }
      try {
        const Index key = inst.size_key(spec.problem);
        const bool traversal = method != Method::gmres && spec.source != ParamSource::fixed &&
                               !(spec.source == ParamSource::model && (method == Method::mskp || method == Method::gmres_mskp));
        SplitParams p;
        if (traversal) {
          const SearchSpace space = space_for(method);
          auto it = traversed.find(space);
          if (it == traversed.end()) it = traversed.emplace(space, resolve_params(spec, method, sys, key)).first;
          p = it->second;
        } else {
          p = resolve_params(spec, method, sys, key);
        }
        row.params = effective_params(method, p);
        SolverConfig cfg;
        cfg.outer_tolerance = spec.tolerance;
        cfg.inner = spec.inner;
        const auto t0 = std::chrono::steady_clock::now();
        const SolveResult r = run_method(method, sys, row.params, cfg);
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.iterations = r.report.iterations;
        row.final_res = r.report.final_residual();
        row.converged = r.report.converged;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_header(std::ostream& os) {
  os << "method,problem,n,m,tau,alpha,beta,omega,iterations,final_res,converged,wall_seconds,seed,error\n";
}

void write_bench_rows(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << std::setprecision(10);
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << r.method << ',' << r.problem << ',' << r.n << ',' << r.m << ',' << r.tau << ',' << r.params.alpha << ','
       << r.params.beta << ',' << r.params.omega << ',' << r.iterations << ',' << r.final_res << ','
       << (r.converged ? 1 : 0) << ',' << r.wall_seconds << ',' << r.seed << ',' << err << '\n';
  }
}

}  // namespace mskp
