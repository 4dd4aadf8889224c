// Command-line front end: problem generation, single solves, traversal,
// model training/prediction/retraining, table benches and spectral checks.
#include "mskp/bench.hpp"
#include "mskp/bvm.hpp"
#include "mskp/pipeline.hpp"
#include "mskp/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace mskp;

namespace {

struct Globals {
  double tol = 1e-6;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct ProblemOptions {
  std::string problem = "diffusion";
  Index n = 15;
  Index m = 0;  // 0: family default (16 steps for PDEs, 10 for Sylvester)
  double tau = 0.0;
  Index n0 = 4;
  Index rank = 2;
};

void add_problem_options(CLI::App* app, ProblemOptions& p) {
  app->add_option("--problem", p.problem, "diffusion | convdiff | sylvester")->capture_default_str();
  app->add_option("--n", p.n, "interior grid points per direction (PDE problems)")->capture_default_str();
  app->add_option("--m", p.m, "time steps (default 16, or 10 for sylvester)");
  app->add_option("--tau", p.tau, "time step (default 1/m, or 0.1 for sylvester)");
  app->add_option("--n0", p.n0, "operator grid points per direction (sylvester)")->capture_default_str();
  app->add_option("--rank", p.rank, "columns of E and F (sylvester)")->capture_default_str();
}

ProblemSpec to_spec(const ProblemOptions& p, const Globals& g) {
  ProblemSpec s;
  s.kind = parse_problem_kind(p.problem);
  s.grid = p.n;
  s.seed = g.seed;
  s.rank = p.rank;
  s.steps = p.m > 0 ? p.m : 10;
  s.tau = p.tau;
  return s;
}

Index size_key(const ProblemOptions& p) {
  if (parse_problem_kind(p.problem) == ProblemKind::sylvester) return p.n0 * p.n0;
  return p.m > 0 ? p.m : 16;
}

AssembledSystem build(const ProblemOptions& p, const Globals& g) { return to_spec(p, g).build(size_key(p)); }

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

struct ParamOptions {
  double alpha = 1.0;
  double beta = 1.0;
  double omega = 0.0;
};

void add_param_options(CLI::App* app, ParamOptions& p) {
  app->add_option("--alpha", p.alpha, "splitting parameter alpha > 0")->capture_default_str();
  app->add_option("--beta", p.beta, "splitting parameter beta > 0")->capture_default_str();
  app->add_option("--omega", p.omega, "splitting parameter 0 <= omega < 2")->capture_default_str();
}

InnerSolver parse_inner(const std::string& s) {
  if (s == "gmres") return InnerSolver::gmres;
  if (s == "direct") return InnerSolver::direct;
  throw std::invalid_argument("inner solver must be gmres or direct");
}

MtklOptions mtkl_options(const std::string& library, int restarts, int iterations, const Globals& g) {
  MtklOptions o;
  o.library = KernelLibrary::parse(library);
  o.train.restarts = restarts;
  o.train.max_iterations = iterations;
  o.train.seed = g.seed;
  return o;
}

void print_restarts(const MTGPModel& m) {
  for (std::size_t i = 0; i < m.restarts.size(); ++i) {
    const auto& r = m.restarts[i];
    std::cout << "restart " << i << ": L " << r.initial_log_likelihood << " -> " << r.final_log_likelihood << " ("
              << r.iterations << " iterations" << (r.usable ? "" : ", unusable") << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSKP splitting solvers and multitask parameter learning"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--tol", g.tol, "outer relative residual tolerance")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for random problem data and training restarts")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.set_config("--config", "", "TOML config file with option values");

  // gen
  ProblemOptions gen_p;
  auto* gen = app.add_subcommand("gen", "write the space-time system matrices");
  add_problem_options(gen, gen_p);

  // solve
  ProblemOptions solve_p;
  ParamOptions solve_params;
  std::string solve_method = "mskp";
  std::string solve_inner = "gmres";
  std::string solve_monitor = "preconditioned";
  bool solve_history = false;
  Index solve_max_outer = 2000;
  auto* solve = app.add_subcommand("solve", "run one method with explicit parameters");
  add_problem_options(solve, solve_p);
  add_param_options(solve, solve_params);
  solve->add_option("--method", solve_method, "kps | gkps | mskp | gmres | gmres-gkps | gmres-mskp")->capture_default_str();
  solve->add_option("--inner", solve_inner, "inner spatial solver: gmres | direct")->capture_default_str();
  solve->add_option("--monitor", solve_monitor, "Krylov residual monitor: preconditioned | true")->capture_default_str();
  solve->add_option("--max-outer", solve_max_outer, "outer iteration cap")->capture_default_str();
  solve->add_flag("--history", solve_history, "also write the residual history");

  // traverse
  ProblemOptions trav_p;
  std::string trav_sizes;
  std::string trav_space = "mskp";
  SearchGrid trav_grid;
  auto* trav = app.add_subcommand("traverse", "grid-search optimal parameters per size");
  add_problem_options(trav, trav_p);
  trav->add_option("--sizes", trav_sizes, "schedule: table1 | table5 | sylvester | list like 10:32:2,36")->required();
  trav->add_option("--space", trav_space, "kps | gkps | mskp")->capture_default_str();
  trav->add_option("--coarse", trav_grid.coarse_step, "coarse alpha/beta step")->capture_default_str();
  trav->add_option("--coarse-omega", trav_grid.coarse_omega_step, "coarse omega step")->capture_default_str();
  trav->add_option("--fine", trav_grid.fine_step, "final lattice step")->capture_default_str();
  trav->add_option("--starts", trav_grid.refine_starts, "coarse points refined")->capture_default_str();
  trav->add_option("--max-outer", trav_grid.solver.max_outer, "outer iteration cap per run")->capture_default_str();

  // train
  std::string train_dataset;
  std::string train_library = "pde";
  int train_restarts = 5;
  int train_iters = 200;
  auto* trn = app.add_subcommand("train", "fit the multitask model to a dataset");
  trn->add_option("--dataset", train_dataset, "dataset CSV")->required();
  trn->add_option("--library", train_library, "pde | sylvester | full | list like g,p,gp")->capture_default_str();
  trn->add_option("--restarts", train_restarts)->capture_default_str();
  trn->add_option("--iterations", train_iters)->capture_default_str();

  // predict
  std::string pred_model;
  std::string pred_sizes;
  bool pred_evaluate = false;
  ProblemOptions pred_p;
  auto* pred = app.add_subcommand("predict", "predict parameters from a saved model");
  pred->add_option("--model", pred_model, "model JSON")->required();
  pred->add_option("--sizes", pred_sizes, "schedule of size keys")->required();
  pred->add_flag("--evaluate", pred_evaluate, "run MSKP at each size with the predicted parameters");
  add_problem_options(pred, pred_p);

  // retrain
  std::string re_model;
  std::string re_dataset;
  std::string re_sizes;
  std::string re_library = "pde";
  bool re_verify = false;
  ProblemOptions re_p;
  SearchGrid re_grid;
  auto* re = app.add_subcommand("retrain", "add retraining points and refit");
  re->add_option("--model", re_model, "model JSON")->required();
  re->add_option("--dataset", re_dataset, "dataset CSV")->required();
  re->add_option("--sizes", re_sizes, "retrain schedule, e.g. 128:500:30")->required();
  re->add_option("--library", re_library)->capture_default_str();
  re->add_flag("--verify", re_verify, "traverse the retrain sizes instead of using predictions");
  re->add_option("--coarse", re_grid.coarse_step, "coarse step for --verify")->capture_default_str();
  add_problem_options(re, re_p);

  // bench
  std::string bench_id;
  std::optional<Index> bench_n0;
  Index bench_seeds = 1;
  std::string bench_source = "traversed";
  std::string bench_model;
  std::string bench_methods = "preset";
  std::string bench_inner = "direct";
  double bench_coarse = 0.25;
  ParamOptions bench_params;
  auto* bench = app.add_subcommand("bench", "reproduce a results table as CSV");
  bench->add_option("table", bench_id, "table3-small | table3 | table5-small | table5 | table8")->required();
  bench->add_option("--n0", bench_n0, "restrict table8 to one operator size");
  bench->add_option("--seeds", bench_seeds, "seeds per sylvester instance")->capture_default_str();
  bench->add_option("--params", bench_source, "traversed | model | fixed")->capture_default_str();
  bench->add_option("--model", bench_model, "model JSON for --params model");
  bench->add_option("--methods", bench_methods, "comma list, 'preset', or empty")->capture_default_str();
  bench->add_option("--inner", bench_inner, "gmres | direct")->capture_default_str();
  bench->add_option("--coarse", bench_coarse, "coarse traversal step")->capture_default_str();
  add_param_options(bench, bench_params);

  // eig-export
  ProblemOptions eig_p;
  ParamOptions eig_params;
  std::string eig_tags = "none,kps,gkps,mskp";
  bool eig_full = false;
  auto* eig = app.add_subcommand("eig-export", "write eigenvalues of Q and preconditioned Q");
  add_problem_options(eig, eig_p);
  add_param_options(eig, eig_params);
  eig->add_option("--tags", eig_tags, "subset of none,kps,gkps,mskp")->capture_default_str();
  eig->add_flag("--full", eig_full, "keep the initial-condition block");

  // bound
  ProblemOptions bound_p;
  ParamOptions bound_params;
  bool bound_full = false;
  auto* bnd = app.add_subcommand("bound", "evaluate the convergence bound and its hypotheses");
  add_problem_options(bnd, bound_p);
  add_param_options(bnd, bound_params);
  bnd->add_flag("--full", bound_full, "keep the initial-condition block (B singular: bound unavailable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const AssembledSystem sys = build(gen_p, g);
      const fs::path dir = out_path(g, "system");
      export_system(sys, dir);
      nlohmann::json j{{"problem", gen_p.problem}, {"seed", g.seed}, {"tau", sys.time.tau}, {"steps", sys.time.steps}};
      if (parse_problem_kind(gen_p.problem) == ProblemKind::sylvester) {
        j["n0"] = gen_p.n0;
        j["h"] = 1.0 / static_cast<double>(gen_p.n0 + 1);
      } else {
        j["n"] = gen_p.n;
        j["h"] = 1.0 / static_cast<double>(gen_p.n + 1);
      }
      open_out(dir / "problem.json") << j.dump(2) << '\n';
      std::cout << "wrote " << dir.string() << " (" << sys.size() << " unknowns)\n";
      return 0;
    }

    if (*solve) {
      const AssembledSystem sys = build(solve_p, g);
      const Method method = parse_method(solve_method);
      SolverConfig cfg;
      cfg.outer_tolerance = g.tol;
      cfg.inner = parse_inner(solve_inner);
      cfg.monitor = solve_monitor == "true" ? ResidualMonitor::true_residual : ResidualMonitor::preconditioned;
      cfg.max_outer = solve_max_outer;
      const SplitParams p = effective_params(method, {solve_params.alpha, solve_params.beta, solve_params.omega});
      const SolveResult r = run_method(method, sys, p, cfg);
      BenchRow row{to_string(method), solve_p.problem, parse_problem_kind(solve_p.problem) == ProblemKind::sylvester ? solve_p.n0 : solve_p.n,
                   sys.time.steps, sys.time.tau, p, r.report.iterations, r.report.final_residual(), r.report.converged,
                   0.0, g.seed, ""};
      auto os = open_out(out_path(g, "solve.csv"));
      write_bench_header(os);
      write_bench_rows(os, {row});
      write_bench_rows(std::cout, {row});
      if (solve_history) {
        auto hs = open_out(out_path(g, "history.csv"));
        hs << "iteration,res\n" << std::setprecision(17);
        for (std::size_t k = 0; k < r.report.residual_history.size(); ++k) hs << k << ',' << r.report.residual_history[k] << '\n';
      }
      return r.report.converged ? 0 : 1;
    }

    if (*trav) {
      const ProblemSpec spec = to_spec(trav_p, g);
      std::vector<Index> sizes;
      if (trav_sizes == "table1") sizes = table1_schedule();
      else if (trav_sizes == "table5") sizes = table5_schedule();
      else if (trav_sizes == "sylvester") sizes = sylvester_schedule();
      else sizes = parse_schedule(trav_sizes);
      trav_grid.space = parse_search_space(trav_space);
      trav_grid.solver.outer_tolerance = g.tol;
      ParamDataset data;
      data.problem = spec.describe();
      data.grid = trav_grid.describe();
      for (Index s : sizes) {
        TraversalStats st;
        data.records.push_back(traverse_optimal(spec, s, trav_grid, &st));
        const auto& r = data.records.back();
        std::cout << "size " << s << ": IT " << r.iterations << " at (" << r.params.alpha << ", " << r.params.beta
                  << ", " << r.params.omega << ") after " << st.evaluations << " runs, " << st.seconds << " s\n";
      }
      save_dataset(data, out_path(g, "dataset.csv"));
      return 0;
    }

    if (*trn) {
      const ParamDataset data = load_dataset(train_dataset);
      const MTGPModel model = train_param_model(data, mtkl_options(train_library, train_restarts, train_iters, g));
      save_model(model, out_path(g, "model.json").string());
      ProblemSpec ps;
      write_manifest(out_path(g, "manifest.json"), data, train_dataset, out_path(g, "model.json").string(), ps);
      print_restarts(model);
      std::cout << "log marginal likelihood " << log_marginal_likelihood(model) << '\n';
      return 0;
    }

    if (*pred) {
      const MTGPModel model = load_model(pred_model);
      const std::vector<Index> sizes = parse_schedule(pred_sizes);
      std::vector<double> xs(sizes.begin(), sizes.end());
      auto os = open_out(out_path(g, "predictions.csv"));
      write_prediction_csv(os, model, xs);
      ParamDataset data;
      data.problem = "predicted";
      data.records = predict_params(model, sizes);
      bool ok = true;
      if (pred_evaluate) {
        SolverConfig cfg;
        cfg.outer_tolerance = g.tol;
        cfg.inner = InnerSolver::direct;
        evaluate_records(to_spec(pred_p, g), data.records, cfg);
        for (const auto& r : data.records) ok = ok && r.iterations >= 0;
      }
      save_dataset(data, out_path(g, "predicted.csv"));
      write_dataset_csv(std::cout, data);
      return ok ? 0 : 1;
    }

    if (*re) {
      const MTGPModel model = load_model(re_model);
      const ParamDataset data = load_dataset(re_dataset);
      const ProblemSpec spec = to_spec(re_p, g);
      re_grid.solver.outer_tolerance = g.tol;
      const RetrainResult r = retrain(model, data, parse_schedule(re_sizes), mtkl_options(re_library, 5, 200, g),
                                      re_verify, &spec, &re_grid);
      save_dataset(r.data, out_path(g, "dataset_retrained.csv"));
      save_model(r.model, out_path(g, "model_retrained.json").string());
      print_restarts(r.model);
      return 0;
    }

    if (*bench) {
      BenchSpec spec = bench_preset(bench_id, g.seed, bench_n0, bench_seeds);
      if (bench_methods != "preset") {
        spec.methods.clear();
        std::stringstream ss(bench_methods);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) spec.methods.push_back(parse_method(item));
        }
      }
      spec.source = parse_param_source(bench_source);
      spec.fixed = {bench_params.alpha, bench_params.beta, bench_params.omega};
      if (spec.source == ParamSource::model) spec.model = load_model(bench_model);
      spec.tolerance = g.tol;
      spec.inner = parse_inner(bench_inner);
      spec.grid.coarse_step = bench_coarse;
      spec.grid.coarse_omega_step = bench_coarse;
      const auto rows = run_bench(spec);
      auto os = open_out(out_path(g, bench_id + ".csv"));
      write_bench_header(os);
      write_bench_rows(os, rows);
      write_bench_header(std::cout);
      write_bench_rows(std::cout, rows);
      bool ok = true;
      for (const auto& r : rows) ok = ok && r.converged && r.error.empty();
      return ok ? 0 : 1;
    }

    if (*eig) {
      AssembledSystem sys = build(eig_p, g);
      if (!eig_full) sys = eliminate_initial_block(sys);
      const ParamOptions& e = eig_params;
      auto os = open_out(out_path(g, "eigenvalues.csv"));
      write_scatter_header(os);
      std::stringstream ss(eig_tags);
      std::string tag;
      while (std::getline(ss, tag, ',')) {
        SpectrumReport r;
        if (tag == "none") r = system_spectrum(sys);
        else if (tag == "kps") r = preconditioned_spectrum(sys, {e.alpha, e.alpha, 0.0});
        else if (tag == "gkps") r = preconditioned_spectrum(sys, {e.alpha, e.beta, 0.0});
        else if (tag == "mskp") r = preconditioned_spectrum(sys, {e.alpha, e.beta, e.omega});
        else throw std::invalid_argument("unknown tag '" + tag + "'");
        write_scatter_rows(os, r.eigenvalues, tag);
        std::cout << tag << ": " << r.eigenvalues.size() << " eigenvalues\n";
      }
      return 0;
    }

    if (*bnd) {
      AssembledSystem sys = build(bound_p, g);
      if (!bound_full) sys = eliminate_initial_block(sys);
      const SplitParams p{bound_params.alpha, bound_params.beta, bound_params.omega};
      p.validate();
      const TheoremHypotheses h = check_hypotheses(sys);
      nlohmann::json j;
      j["min_re_stiffness"] = h.min_re_stiffness;
      j["temporal_invertible"] = h.temporal_invertible;
      j["beta_limit"] = h.beta_limit(sys.time.tau);
      j["beta_in_proven_region"] = p.beta <= h.beta_limit(sys.time.tau);
      j["hypotheses_hold"] = h.ok();
      if (h.temporal_invertible) {
        j["min_re_temporal"] = h.min_re_temporal;
        j["bound"] = theoretical_bound(sys, p);
      }
      if (sys.size() <= kDenseOracleCap) j["spectral_radius"] = iteration_matrix_radius(sys, p).spectral_radius;
      open_out(out_path(g, "bound.json")) << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
