#include "mskp/pipeline.hpp"

#include "mskp/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

namespace mskp {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::diffusion: return "diffusion";
    case ProblemKind::convdiff: return "convdiff";
    case ProblemKind::sylvester: return "sylvester";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "diffusion") return ProblemKind::diffusion;
  if (name == "convdiff" || name == "convection-diffusion") return ProblemKind::convdiff;
  if (name == "sylvester") return ProblemKind::sylvester;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

AssembledSystem ProblemSpec::build(Index size_key) const {
  switch (kind) {
    case ProblemKind::diffusion:
    case ProblemKind::convdiff: {
      const PDEProblem p = kind == ProblemKind::diffusion ? diffusion_2d(grid) : convdiff_2d(grid);
      return build_system(p, size_key, tau > 0.0 ? tau : 1.0 / static_cast<double>(size_key));
    }
    case ProblemKind::sylvester: {
      const auto n0 = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(size_key))));
      if (n0 * n0 != size_key) throw std::invalid_argument("sylvester size key must be a perfect square n0^2");
      const SylvesterProblem sp = sylvester_problem(n0, rank, seed);
      return build_system(sp.as_pde(), steps, tau > 0.0 ? tau : kSylvesterTau);
    }
  }
  throw std::logic_error("unreachable");
}

std::string ProblemSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == ProblemKind::sylvester) {
    os << " s=" << rank << " steps=" << steps << " seed=" << seed;
  } else {
    os << " n=" << grid;
  }
  if (tau > 0.0) os << " tau=" << tau;
  return os.str();
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::traversed: return "traversed";
    case Provenance::predicted: return "predicted";
    case Provenance::retrained: return "retrained";
  }
  return "?";
}

Provenance parse_provenance(const std::string& name) {
  if (name == "traversed") return Provenance::traversed;
  if (name == "predicted") return Provenance::predicted;
  if (name == "retrained") return Provenance::retrained;
  throw std::invalid_argument("unknown provenance '" + name + "'");
}

std::vector<ParamRecord> ParamDataset::with(Provenance p) const {
  std::vector<ParamRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [p](const ParamRecord& r) { return r.provenance == p; });
  return out;
}

std::vector<ParamRecord> ParamDataset::training_records() const {
  std::vector<ParamRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const ParamRecord& r) { return r.provenance != Provenance::predicted; });
  return out;
}

void ParamDataset::validate() const {
  std::map<Provenance, Index> last;
  for (const auto& r : records) {
    auto it = last.find(r.provenance);
    if (it != last.end() && r.size <= it->second) {
      throw std::invalid_argument("dataset sizes must increase within provenance class " + to_string(r.provenance));
    }
    last[r.provenance] = r.size;
  }
}

void write_dataset_csv(std::ostream& os, const ParamDataset& data) {
  data.validate();
  os << "# problem: " << data.problem << '\n' << "# grid: " << data.grid << '\n';
  os << "size,alpha,beta,omega,iterations,provenance\n" << std::setprecision(17);
  for (const auto& r : data.records) {
    os << r.size << ',' << r.params.alpha << ',' << r.params.beta << ',' << r.params.omega << ',' << r.iterations
       << ',' << to_string(r.provenance) << '\n';
  }
}

ParamDataset read_dataset_csv(std::istream& is) {
  ParamDataset data;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# problem: ", 0) == 0) {
      data.problem = line.substr(11);
      continue;
    }
    if (line.rfind("# grid: ", 0) == 0) {
      data.grid = line.substr(8);
      continue;
    }
    if (line.front() == '#') continue;
    if (!header) {
      if (line != "size,alpha,beta,omega,iterations,provenance") throw std::invalid_argument("unexpected dataset header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument("dataset row needs 6 fields: " + line);
    ParamRecord r;
    r.size = std::stoll(f[0]);
    r.params = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
    r.iterations = std::stoll(f[4]);
    r.provenance = parse_provenance(f[5]);
    data.records.push_back(r);
  }
  if (!header) throw std::invalid_argument("dataset has no header");
  data.validate();
  return data;
}

void save_dataset(const ParamDataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write dataset " + path.string());
  write_dataset_csv(os, data);
}

ParamDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read dataset " + path.string());
  return read_dataset_csv(is);
}

void write_manifest(const std::filesystem::path& path, const ParamDataset& data, const std::string& dataset_file,
                    const std::string& model_file, const ProblemSpec& problem) {
  nlohmann::json j;
  j["problem"] = to_string(problem.kind);
  j["problem_description"] = problem.describe();
  j["grid_points"] = problem.grid;
  j["seed"] = problem.seed;
  j["dataset"] = dataset_file;
  j["model"] = model_file;
  j["search_grid"] = data.grid;
  j["records"] = data.records.size();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  os << j.dump(2) << '\n';
}

std::string to_string(SearchSpace s) {
  switch (s) {
    case SearchSpace::kps: return "kps";
    case SearchSpace::gkps: return "gkps";
    case SearchSpace::mskp: return "mskp";
  }
  return "?";
}

SearchSpace parse_search_space(const std::string& name) {
  if (name == "kps") return SearchSpace::kps;
  if (name == "gkps") return SearchSpace::gkps;
  if (name == "mskp") return SearchSpace::mskp;
  throw std::invalid_argument("unknown search space '" + name + "'");
}

SolverConfig SearchGrid::default_search_solver() {
  SolverConfig cfg;
  cfg.inner = InnerSolver::direct;
  cfg.max_outer = 500;
  return cfg;
}

void SearchGrid::validate() const {
  if (!(fine_step > 0.0) || !(coarse_step >= fine_step) || !(coarse_omega_step >= fine_step)) {
    throw std::invalid_argument("search steps must satisfy coarse >= fine > 0");
  }
  if (!(alpha_max >= fine_step) || !(beta_max >= fine_step) || !(omega_max > 0.0) || omega_max > 2.0) {
    throw std::invalid_argument("search box must lie inside the admissible region");
  }
  if (refine_starts < 1) throw std::invalid_argument("need at least one refinement start");
  solver.validate();
}

std::string SearchGrid::describe() const {
  std::ostringstream os;
  os << to_string(space) << " alpha<=" << alpha_max << " beta<=" << beta_max << " omega<" << omega_max
     << " coarse=" << coarse_step << "/" << coarse_omega_step << " fine=" << fine_step << " starts=" << refine_starts;
  return os.str();
}

namespace {

using Lattice = std::array<Index, 3>;  // alpha, beta, omega in fine-step units

struct Score {
  Index iterations = std::numeric_limits<Index>::max();
  double fractional = std::numeric_limits<double>::infinity();
  [[nodiscard]] bool finite() const { return iterations != std::numeric_limits<Index>::max(); }
};

bool better(const Score& a, const Lattice& la, const Score& b, const Lattice& lb) {
  if (a.iterations != b.iterations) return a.iterations < b.iterations;
  if (std::abs(a.fractional - b.fractional) > 1e-9) return a.fractional < b.fractional;
  return la < lb;
}

class Searcher {
 public:
  Searcher(const AssembledSystem& sys, const SearchGrid& grid) : sys_(sys), grid_(grid) {
    alpha_top_ = std::max<Index>(1, std::llround(grid.alpha_max / grid.fine_step));
    beta_top_ = std::max<Index>(1, std::llround(grid.beta_max / grid.fine_step));
    omega_top_ = std::llround(grid.omega_max / grid.fine_step) - 1;
    omega_top_ = std::max<Index>(0, omega_top_);
    if (grid.space != SearchSpace::mskp) omega_top_ = 0;
    if (grid.space == SearchSpace::kps) beta_top_ = alpha_top_;
  }

  [[nodiscard]] Lattice normalize(Lattice p) const {
    p[0] = std::clamp<Index>(p[0], 1, alpha_top_);
    p[1] = grid_.space == SearchSpace::kps ? p[0] : std::clamp<Index>(p[1], 1, beta_top_);
    p[2] = std::clamp<Index>(p[2], 0, omega_top_);
    return p;
  }

  [[nodiscard]] SplitParams params(const Lattice& p) const {
    const double f = grid_.fine_step;
    return {static_cast<double>(p[0]) * f, static_cast<double>(p[1]) * f, static_cast<double>(p[2]) * f};
  }

  Score evaluate(const Lattice& p, Index cap) {
    auto it = memo_.find(p);
    if (it != memo_.end()) {
      // A memoized failure under a larger cap is still a failure now.
      if (it->second.score.finite() || it->second.cap >= cap) return it->second.score;
    }
    SolverConfig cfg = grid_.solver;
    cfg.max_outer = std::max<Index>(1, std::min(cfg.max_outer, cap));
    const SplitParams sp = params(p);
    const MskpPreconditioner pre(sys_, sp, spatial(p[1]));
    const SolveResult r = mskp_solve(sys_, pre, cfg);
    ++evaluations_;
    Score s;
    if (r.report.converged) {
      s.iterations = r.report.iterations;
      s.fractional = r.report.fractional_iterations(cfg.outer_tolerance);
    }
    memo_[p] = {s, cap};
    return s;
  }

  std::shared_ptr<const SpatialShiftSolver> spatial(Index beta_index) {
    auto it = cache_.find(beta_index);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 64) cache_.clear();
    auto solver = std::make_shared<const SpatialShiftSolver>(sys_, params({1, beta_index, 0}).beta, InnerSolver::direct,
                                                             grid_.solver.inner_tolerance, grid_.solver.inner_max);
    ++factorizations_;
    cache_.emplace(beta_index, solver);
    return solver;
  }

  [[nodiscard]] Index alpha_top() const { return alpha_top_; }
  [[nodiscard]] Index beta_top() const { return beta_top_; }
  [[nodiscard]] Index omega_top() const { return omega_top_; }
  [[nodiscard]] Index evaluations() const { return evaluations_; }
  [[nodiscard]] Index factorizations() const { return factorizations_; }

 private:
  struct Memo {
    Score score;
    Index cap;
  };
  const AssembledSystem& sys_;
  const SearchGrid& grid_;
  Index alpha_top_ = 0;
  Index beta_top_ = 0;
  Index omega_top_ = 0;
  std::map<Lattice, Memo> memo_;
  std::map<Index, std::shared_ptr<const SpatialShiftSolver>> cache_;
  Index evaluations_ = 0;
  Index factorizations_ = 0;
};

std::vector<Index> coarse_axis(Index step, Index lo, Index top) {
  std::vector<Index> out;
  for (Index v = lo; v <= top; v += step) out.push_back(v);
  if (out.empty()) out.push_back(std::max<Index>(lo, std::min<Index>(top, step)));
  return out;
}

}  // namespace

ParamRecord traverse_optimal(const AssembledSystem& sys, const SearchGrid& grid, TraversalStats* stats) {
  grid.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Searcher s(sys, grid);
  const Index cs = std::max<Index>(1, std::llround(grid.coarse_step / grid.fine_step));
  const Index cw = std::max<Index>(1, std::llround(grid.coarse_omega_step / grid.fine_step));
  const bool use_beta = grid.space != SearchSpace::kps;
  const bool use_omega = grid.space == SearchSpace::mskp;

  // Coarse sweep. Points needing a couple of iterations more than the current
  // best are still ranked so the next-best starts are meaningful.
  constexpr Index kSlack = 2;
  std::vector<std::pair<Score, Lattice>> ranked;
  Index best_it = grid.solver.max_outer;
  const auto alphas = coarse_axis(cs, cs, s.alpha_top());
  const auto betas = use_beta ? coarse_axis(cs, cs, s.beta_top()) : std::vector<Index>{0};
  const auto omegas = use_omega ? coarse_axis(cw, 0, s.omega_top()) : std::vector<Index>{0};
  for (Index b : betas) {
    for (Index a : alphas) {
      for (Index w : omegas) {
        const Lattice p = s.normalize({a, use_beta ? b : a, w});
        const Score sc = s.evaluate(p, std::min(grid.solver.max_outer, best_it + kSlack));
        if (!sc.finite()) continue;
        best_it = std::min(best_it, sc.iterations);
        ranked.emplace_back(sc, p);
      }
    }
  }
  const Index coarse_evals = s.evaluations();
  if (ranked.empty()) throw NumericalError("traversal: no coarse grid point converged");
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& x, const auto& y) { return better(x.first, x.second, y.first, y.second); });
  const Index coarse_best = ranked.front().first.iterations;

  // Compass refinement from the leading coarse points down to the fine lattice.
  Score best = ranked.front().first;
  Lattice best_p = ranked.front().second;
  const auto starts = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(grid.refine_starts));
  for (std::size_t k = 0; k < starts; ++k) {
    Lattice cur = ranked[k].second;
    Score cur_s = ranked[k].first;
    Index step = cs;
    while (true) {
      step = std::max<Index>(1, step / 2);
      const Index wstep = std::max<Index>(1, step * cw / cs);
      bool moved = true;
      while (moved) {
        moved = false;
        Lattice cand_p = cur;
        Score cand_s = cur_s;
        std::vector<Lattice> polls;
        for (int sign : {-1, 1}) {
          polls.push_back(s.normalize({cur[0] + sign * step, cur[1], cur[2]}));
          if (use_beta) polls.push_back(s.normalize({cur[0], cur[1] + sign * step, cur[2]}));
          if (use_omega) polls.push_back(s.normalize({cur[0], cur[1], cur[2] + sign * wstep}));
        }
        for (const auto& q : polls) {
          if (q == cur) continue;
          const Score qs = s.evaluate(q, std::min(grid.solver.max_outer, best.iterations));
          if (qs.finite() && better(qs, q, cand_s, cand_p)) {
            cand_s = qs;
            cand_p = q;
          }
        }
        if (cand_p != cur) {
          cur = cand_p;
          cur_s = cand_s;
          moved = true;
          if (better(cur_s, cur, best, best_p)) {
            best = cur_s;
            best_p = cur;
          }
        }
      }
      if (step == 1) break;
    }
  }

  ParamRecord rec;
  rec.params = s.params(best_p);
  rec.iterations = best.iterations;
  rec.provenance = Provenance::traversed;
  if (stats != nullptr) {
    stats->evaluations = s.evaluations();
    stats->coarse_evaluations = coarse_evals;
    stats->factorizations = s.factorizations();
    stats->coarse_best_iterations = coarse_best;
    stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

ParamRecord traverse_optimal(const ProblemSpec& problem, Index size_key, const SearchGrid& grid, TraversalStats* stats) {
  const AssembledSystem sys = problem.build(size_key);
  ParamRecord r = traverse_optimal(sys, grid, stats);
  r.size = size_key;
  return r;
}

std::vector<Index> range_schedule(Index first, Index last, Index step) {
  if (step <= 0) throw std::invalid_argument("schedule step must be positive");
  if (first > last) throw std::invalid_argument("schedule range must not run backwards");
  std::vector<Index> out;
  for (Index v = first; v <= last; v += step) out.push_back(v);
  return out;
}

std::vector<Index> table1_schedule() {
  std::vector<Index> out = range_schedule(10, 32, 2);
  for (Index v : range_schedule(36, 80, 4)) out.push_back(v);
  for (Index v : range_schedule(88, 128, 8)) out.push_back(v);
  return out;
}

std::vector<Index> table5_schedule() { return table1_schedule(); }

std::vector<Index> sylvester_schedule() {
  std::vector<Index> out;
  for (Index g = 4; g <= 15; ++g) out.push_back(g * g);
  return out;
}

std::vector<Index> parse_schedule(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::vector<Index> parts;
    std::stringstream is(item);
    std::string p;
    while (std::getline(is, p, ':')) {
      std::size_t used = 0;
      parts.push_back(std::stoll(p, &used));
      if (used != p.size()) throw std::invalid_argument("bad schedule number '" + p + "'");
    }
    if (parts.size() == 1) {
      out.push_back(parts[0]);
    } else if (parts.size() == 3) {
      for (Index v : range_schedule(parts[0], parts[1], parts[2])) out.push_back(v);
    } else {
      throw std::invalid_argument("schedule items are N or first:last:step, got '" + item + "'");
    }
  }
  return out;
}

ParamDataset build_training_set(const ProblemSpec& problem, const std::vector<Index>& schedule, const SearchGrid& grid) {
  ParamDataset data;
  data.problem = problem.describe();
  data.grid = grid.describe();
  for (Index size : schedule) {
    try {
      data.records.push_back(traverse_optimal(problem, size, grid));
    } catch (const std::exception& e) {
      throw NumericalError("traversal failed at size " + std::to_string(size) + ": " + e.what());
    }
  }
  data.validate();
  return data;
}

SplitParams clamp_params(const SplitParams& p) {
  return {std::clamp(p.alpha, 0.01, 5.0), std::clamp(p.beta, 0.01, 5.0), std::clamp(p.omega, 0.0, 1.99)};
}

MTGPModel train_param_model(const ParamDataset& data, const MtklOptions& options) {
  const auto recs = data.training_records();
  if (recs.size() < 2) throw std::invalid_argument("need at least two training records");
  Vector x(static_cast<Index>(recs.size()));
  Matrix y(x.size(), 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto k = static_cast<Index>(i);
    x[k] = static_cast<double>(recs[i].size);
    y(k, 0) = recs[i].params.alpha;
    y(k, 1) = recs[i].params.beta;
    y(k, 2) = recs[i].params.omega;
  }
  TrainOptions topt = options.train;
  if (topt.task_names.empty()) topt.task_names = {"alpha", "beta", "omega"};
  return train(x, y, options.library, topt);
}

std::vector<ParamRecord> predict_params(const MTGPModel& model, const std::vector<Index>& sizes, Provenance provenance) {
  require_dims(model.tasks() == 3, "parameter model must have three tasks");
  std::vector<ParamRecord> out;
  for (Index size : sizes) {
    const auto x = static_cast<double>(size);
    ParamRecord r;
    r.size = size;
    r.params = clamp_params({predict(model, x, 0).mean, predict(model, x, 1).mean, predict(model, x, 2).mean});
    r.provenance = provenance;
    out.push_back(r);
  }
  return out;
}

MtklResult mtkl_predict(const ParamDataset& data, const std::vector<Index>& sizes, const MtklOptions& options) {
  MtklResult r{train_param_model(data, options), {}};
  r.predictions = predict_params(r.model, sizes);
  return r;
}

void evaluate_records(const ProblemSpec& problem, std::vector<ParamRecord>& records, const SolverConfig& cfg) {
  for (auto& r : records) {
    const AssembledSystem sys = problem.build(r.size);
    const SolveResult res = mskp_solve(sys, r.params, cfg);
    r.iterations = res.report.converged ? res.report.iterations : -1;
  }
}

RetrainResult retrain(const MTGPModel& model, const ParamDataset& data, const std::vector<Index>& schedule,
                      const MtklOptions& options, bool verify_by_traversal, const ProblemSpec* problem,
                      const SearchGrid* grid) {
  RetrainResult out{data, model};
  if (schedule.empty()) return out;
  if (verify_by_traversal && (problem == nullptr || grid == nullptr)) {
    throw std::invalid_argument("traversal-verified retraining needs a problem and a search grid");
  }
  for (Index size : schedule) {
    ParamRecord r;
    if (verify_by_traversal) {
      r = traverse_optimal(*problem, size, *grid);
    } else {
      r = predict_params(model, {size}, Provenance::retrained).front();
    }
    r.provenance = Provenance::retrained;
    out.data.records.push_back(r);
  }
  out.data.validate();
  MtklOptions warm = options;
  warm.library = model.library;
  warm.train.warm_start = model;
  out.model = train_param_model(out.data, warm);
  return out;
}

}  // namespace mskp
