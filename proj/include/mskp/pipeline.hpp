#pragma once

#include "mskp/mtgp.hpp"
#include "mskp/problems.hpp"
#include "mskp/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mskp {

enum class ProblemKind { diffusion, convdiff, sylvester };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& name);

/// A benchmark family plus the knobs that turn a size key into a system.
///
/// For the PDE families the size key is the number of time steps m
/// (tau = 1/m unless `tau` is set) on an n x n grid. For the Sylvester
/// family the size key is n = n0^2 with `steps` steps of kSylvesterTau.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::diffusion;
  Index grid = 16;  ///< n for the PDE families; ignored for Sylvester
  std::uint64_t seed = 1;
  Index rank = 2;    ///< s for Sylvester
  Index steps = 10;  ///< time steps for Sylvester
  double tau = 0.0;  ///< 0 means the family default

  [[nodiscard]] AssembledSystem build(Index size_key) const;
  [[nodiscard]] std::string describe() const;
};

enum class Provenance { traversed, predicted, retrained };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& name);

struct ParamRecord {
  Index size = 0;
  SplitParams params;
  /// Outer MSKP iterations achieved with `params`; -1 when not evaluated.
  Index iterations = -1;
  Provenance provenance = Provenance::traversed;
};

struct ParamDataset {
  std::string problem;
  std::string grid;
  std::vector<ParamRecord> records;

  [[nodiscard]] std::vector<ParamRecord> with(Provenance p) const;
  /// Records used as training data: traversed and retrained.
  [[nodiscard]] std::vector<ParamRecord> training_records() const;
  /// Size keys strictly increasing within each provenance class.
  void validate() const;
};

void write_dataset_csv(std::ostream& os, const ParamDataset& data);
ParamDataset read_dataset_csv(std::istream& is);
void save_dataset(const ParamDataset& data, const std::filesystem::path& path);
ParamDataset load_dataset(const std::filesystem::path& path);

/// Ties a dataset file to a model file and a problem in a JSON manifest.
void write_manifest(const std::filesystem::path& path, const ParamDataset& data, const std::string& dataset_file,
                    const std::string& model_file, const ProblemSpec& problem);

enum class SearchSpace { kps, gkps, mskp };

std::string to_string(SearchSpace s);
SearchSpace parse_search_space(const std::string& name);

/// Parameter lattice: alpha, beta in (0, 5] and omega in [0, 2), all on
/// multiples of `fine_step`. The search evaluates a coarse sub-lattice and then
/// refines the best points by compass search down to `fine_step`.
struct SearchGrid {
  SearchSpace space = SearchSpace::mskp;
  double alpha_max = 5.0;
  double beta_max = 5.0;
  double omega_max = 2.0;  ///< exclusive
  double coarse_step = 0.1;
  double coarse_omega_step = 0.1;
  double fine_step = 0.01;
  /// Coarse points refined; the best refined point wins.
  int refine_starts = 2;
  SolverConfig solver = default_search_solver();

  static SolverConfig default_search_solver();
  void validate() const;
  [[nodiscard]] std::string describe() const;
};

struct TraversalStats {
  Index evaluations = 0;
  Index coarse_evaluations = 0;
  Index factorizations = 0;
  Index coarse_best_iterations = -1;
  double seconds = 0.0;
};

/// Parameters minimizing the MSKP outer iteration count over the grid. Ties
/// on the integer count are broken by the interpolated (fractional) count,
/// then by the lexicographically smallest triple. Throws NumericalError
/// when no lattice point converges.
ParamRecord traverse_optimal(const AssembledSystem& sys, const SearchGrid& grid, TraversalStats* stats = nullptr);
ParamRecord traverse_optimal(const ProblemSpec& problem, Index size_key, const SearchGrid& grid,
                             TraversalStats* stats = nullptr);

/// Training schedules.
std::vector<Index> table1_schedule();
std::vector<Index> table5_schedule();
std::vector<Index> sylvester_schedule();
/// first, first+step, ... up to last inclusive.
std::vector<Index> range_schedule(Index first, Index last, Index step);
/// Parses "10:32:2,36:80:4" or "16,32,64".
std::vector<Index> parse_schedule(const std::string& text);

/// Traverses every size; errors mention the failing size.
ParamDataset build_training_set(const ProblemSpec& problem, const std::vector<Index>& schedule,
                                const SearchGrid& grid);

/// Admissible box used for predictions: alpha, beta in [0.01, 5], omega in [0, 1.99].
SplitParams clamp_params(const SplitParams& p);

struct MtklOptions {
  KernelLibrary library = KernelLibrary::pde();
  TrainOptions train{5, 200, 1e-6, 0, true, {"alpha", "beta", "omega"}, std::nullopt};
};

/// Trains the three-task model (alpha, beta, omega against size) on the
/// training records of `data`.
MTGPModel train_param_model(const ParamDataset& data, const MtklOptions& options = {});

/// Posterior means at `sizes`, clamped into the admissible box. Uses the
/// model only: no traversal happens here.
std::vector<ParamRecord> predict_params(const MTGPModel& model, const std::vector<Index>& sizes,
                                        Provenance provenance = Provenance::predicted);

struct MtklResult {
  MTGPModel model;
  std::vector<ParamRecord> predictions;
};
MtklResult mtkl_predict(const ParamDataset& data, const std::vector<Index>& sizes, const MtklOptions& options = {});

/// Fills in `iterations` by running MSKP on each record's size.
void evaluate_records(const ProblemSpec& problem, std::vector<ParamRecord>& records, const SolverConfig& cfg);

struct RetrainResult {
  ParamDataset data;
  MTGPModel model;
};

/// Appends records at `schedule` (provenance retrained) and retrains, warm
/// started from `model` and keeping its kernel library and normalization. By
/// default the new records are the current model's predictions; with
/// `verify_by_traversal` they are traversed instead.
RetrainResult retrain(const MTGPModel& model, const ParamDataset& data, const std::vector<Index>& schedule,
                      const MtklOptions& options = {}, bool verify_by_traversal = false,
                      const ProblemSpec* problem = nullptr, const SearchGrid* grid = nullptr);

}  // namespace mskp
