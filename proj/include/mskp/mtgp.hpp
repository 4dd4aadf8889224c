#pragma once

#include "mskp/kernels.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mskp {

/// Per-restart optimizer record. Ascent holds when final >= initial.
struct RestartTrace {
  double initial_log_likelihood = 0.0;
  double final_log_likelihood = 0.0;
  int iterations = 0;
  bool usable = false;
  std::string message;
};

/// Multitask GP over a scalar input with M tasks sharing the training inputs.
///
/// Covariance between f_l(x) and f_b(x') is
///   K^t_{lb} * sum_xi sqrt(c_{l,xi} c_{b,xi}) k_xi(x, x'),
/// which is K^t (x) K^x whenever every task uses the same kernel weights.
/// Targets are stacked task-major: entry (l, i) sits at l * n + i.
///
/// Inputs are mapped to [0, 1] and targets optionally standardized before
/// anything else sees them; `library.hyper` holds normalized-unit values.
struct MTGPModel {
  KernelLibrary library;
  Matrix weights;      ///< C, tasks x library size, nonnegative
  Matrix task_factor;  ///< lower-triangular L with K^t = L L^T
  Vector noise;        ///< sigma_l^2 per task, normalized target units
  Vector inputs;       ///< training inputs, original units
  Matrix targets;      ///< n x tasks, original units
  double input_shift = 0.0;
  double input_scale = 1.0;
  Vector target_mean;
  Vector target_scale;
  std::vector<std::string> task_names;
  std::vector<RestartTrace> restarts;

  [[nodiscard]] Index tasks() const { return weights.rows(); }
  [[nodiscard]] Index points() const { return inputs.size(); }
  [[nodiscard]] Matrix task_covariance() const { return task_factor * task_factor.transpose(); }
  [[nodiscard]] double normalize_input(double x) const { return (x - input_shift) / input_scale; }
  [[nodiscard]] Vector normalized_inputs() const;
  /// Targets after the per-task affine map, stacked task-major.
  [[nodiscard]] Vector normalized_targets() const;
  /// Kernel hyperparameters expressed in original input units.
  [[nodiscard]] KernelHyper hyper_original_units() const;
  void validate() const;
};

struct ModelInit {
  bool standardize_targets = false;
  double noise = 1e-2;
  KernelHyper hyper{1.0, 0.0, 0.3, 1.0};
  std::vector<std::string> task_names;
};

/// Model with default hyperparameters: C = 1/N, K^t = I, uniform noise.
MTGPModel make_model(const Vector& inputs, const Matrix& targets, const KernelLibrary& library,
                     const ModelInit& init = {});

/// Full joint covariance Sigma (including noise, excluding jitter), normalized units.
Matrix joint_covariance(const MTGPModel& model);

/// Jitter added to Sigma's diagonal before factorization: 1e-8 times its mean diagonal.
double jitter(const Matrix& sigma);

/// Unconstrained parameter vector: log C (row-major), the lower triangle of L
/// (row-major), log noise, then log lengthscale, log period and offset when
/// the library uses the corresponding kind.
Vector pack_parameters(const MTGPModel& model);
void unpack_parameters(MTGPModel& model, const Vector& theta);
Index parameter_count(const MTGPModel& model);
std::vector<std::string> parameter_names(const MTGPModel& model);

/// log N(y | 0, Sigma) in normalized units.
double log_marginal_likelihood(const MTGPModel& model);

struct LikelihoodGradient {
  double value = 0.0;
  Vector gradient;  ///< with respect to pack_parameters(model)
};
LikelihoodGradient log_marginal_likelihood_with_gradient(const MTGPModel& model);

struct TrainOptions {
  int restarts = 5;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool standardize_targets = false;
  std::vector<std::string> task_names;
  /// When set, restart 0 starts from this model's parameters and the data are
  /// normalized with its input and target maps instead of fresh ones.
  std::optional<MTGPModel> warm_start;
};

/// Maximizes the log marginal likelihood with L-BFGS from `restarts` starting
/// points (the first is the make_model default, the rest random) and returns
/// the best. Throws NumericalError when no restart produces a usable model.
MTGPModel train(const Vector& inputs, const Matrix& targets, const KernelLibrary& library,
                const TrainOptions& options = {});

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Posterior of task `task` at x (original units).
Prediction predict(const MTGPModel& model, double x, Index task);
/// Prior variance of task `task` at x, original units.
double prior_variance(const MTGPModel& model, double x, Index task);

/// One row per x: x, then <name>_mean and <name>_var per task.
void write_prediction_csv(std::ostream& os, const MTGPModel& model, const std::vector<double>& xs);

/// FNV-1a over the training inputs and targets.
std::uint64_t training_digest(const MTGPModel& model);

std::string model_to_json(const MTGPModel& model);
MTGPModel model_from_json(const std::string& text);
void save_model(const MTGPModel& model, const std::string& path);
MTGPModel load_model(const std::string& path);

}  // namespace mskp
