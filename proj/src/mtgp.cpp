#include "mskp/mtgp.hpp"

#include "mskp/error.hpp"

#include <ceres/ceres.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

namespace mskp {

namespace {

/// Parameters beyond this magnitude (log scale) are treated as invalid steps.
constexpr double kParamLimit = 30.0;

struct HyperSlots {
  bool lengthscale = false;
  bool period = false;
  bool offset = false;
};

HyperSlots slots(const KernelLibrary& lib) {
  return {lib.uses(KernelKind::gaussian) || lib.uses(KernelKind::periodic), lib.uses(KernelKind::periodic),
          lib.uses(KernelKind::linear)};
}

/// Pieces shared by likelihood, gradient and prediction.
struct Assembled {
  Vector x;
  Vector y;
  Matrix sqrt_weights;        // s = sqrt(C)
  Matrix task_cov;            // K^t
  std::vector<Matrix> grams;  // one per library element
  Matrix sigma;
  Eigen::LLT<Matrix> chol;
  Vector alpha;               // Sigma^{-1} y
};

Matrix combine_blocks(const MTGPModel& m, const Matrix& s, const Matrix& kt, const std::vector<Matrix>& grams) {
  const Index tasks = m.tasks();
  const Index n = grams.front().rows();
  const Index cols = grams.front().cols();
  Matrix out = Matrix::Zero(tasks * n, tasks * cols);
  for (Index a = 0; a < tasks; ++a) {
    for (Index b = 0; b < tasks; ++b) {
      auto blk = out.block(a * n, b * cols, n, cols);
      for (std::size_t xi = 0; xi < grams.size(); ++xi) {
        const auto k = static_cast<Index>(xi);
        blk += (kt(a, b) * s(a, k) * s(b, k)) * grams[xi];
      }
    }
  }
  return out;
}

Assembled assemble_model(const MTGPModel& m) {
  m.validate();
  Assembled w;
  w.x = m.normalized_inputs();
  w.y = m.normalized_targets();
  w.sqrt_weights = m.weights.cwiseSqrt();
  w.task_cov = m.task_covariance();
  for (Index i = 0; i < m.library.size(); ++i) w.grams.push_back(gram(m.library.element(i), w.x, w.x));
  w.sigma = combine_blocks(m, w.sqrt_weights, w.task_cov, w.grams);
  const Index n = m.points();
  for (Index l = 0; l < m.tasks(); ++l) w.sigma.diagonal().segment(l * n, n).array() += m.noise[l];
  Matrix jittered = w.sigma;
  jittered.diagonal().array() += jitter(w.sigma);
  w.chol.compute(jittered);
  if (w.chol.info() != Eigen::Success) throw NumericalError("multitask covariance is not positive definite");
  w.alpha = w.chol.solve(w.y);
  if (!w.alpha.allFinite()) throw NumericalError("multitask covariance solve produced non-finite values");
  return w;
}

double log_likelihood_of(const Assembled& w) {
  const double logdet = 2.0 * w.chol.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(w.y.size());
  return -0.5 * w.y.dot(w.alpha) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

std::uint64_t fnv1a(std::uint64_t h, const double* data, std::size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < count * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Vector MTGPModel::normalized_inputs() const {
  return ((inputs.array() - input_shift) / input_scale).matrix();
}

Vector MTGPModel::normalized_targets() const {
  const Index n = points();
  Vector y(n * tasks());
  for (Index l = 0; l < tasks(); ++l) {
    y.segment(l * n, n) = ((targets.col(l).array() - target_mean[l]) / target_scale[l]).matrix();
  }
  return y;
}

KernelHyper MTGPModel::hyper_original_units() const {
  KernelHyper h = library.hyper;
  h.lengthscale *= input_scale;
  h.period *= input_scale;
  h.offset = input_shift + h.offset * input_scale;
  return h;
}

void MTGPModel::validate() const {
  library.validate();
  const Index m = weights.rows();
  require_dims(m >= 1, "model needs at least one task");
  require_dims(weights.cols() == library.size(), "weight matrix columns must match the kernel library");
  require_dims(task_factor.rows() == m && task_factor.cols() == m, "task factor must be tasks x tasks");
  require_dims(noise.size() == m && target_mean.size() == m && target_scale.size() == m,
               "per-task vectors must have one entry per task");
  require_dims(targets.rows() == inputs.size() && targets.cols() == m, "targets must be points x tasks");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("kernel weights must be nonnegative");
  if (!(noise.array() > 0.0).all()) throw std::invalid_argument("noise variances must be positive");
  if (!(input_scale > 0.0) || !(target_scale.array() > 0.0).all()) throw std::invalid_argument("scales must be positive");
}

MTGPModel make_model(const Vector& inputs, const Matrix& targets, const KernelLibrary& library, const ModelInit& init) {
  require_dims(inputs.size() >= 1, "need at least one training point");
  require_dims(targets.rows() == inputs.size(), "targets must have one row per input");
  require_dims(targets.cols() >= 1, "need at least one task");
  if (!inputs.allFinite() || !targets.allFinite()) throw std::invalid_argument("training data must be finite");
  const Index m = targets.cols();
  MTGPModel model;
  model.library = library;
  model.inputs = inputs;
  model.targets = targets;
  model.weights = Matrix::Constant(m, library.size(), 1.0 / static_cast<double>(library.size()));
  model.task_factor = Matrix::Identity(m, m);
  model.noise = Vector::Constant(m, init.noise);
  const double lo = inputs.minCoeff();
  const double hi = inputs.maxCoeff();
  model.input_shift = lo;
  model.input_scale = hi > lo ? hi - lo : 1.0;
  model.target_mean = Vector::Zero(m);
  model.target_scale = Vector::Ones(m);
  if (init.standardize_targets) {
    const double n = static_cast<double>(inputs.size());
    for (Index l = 0; l < m; ++l) {
      const double mean = targets.col(l).mean();
      const double var = n > 1 ? (targets.col(l).array() - mean).square().sum() / (n - 1.0) : 0.0;
      model.target_mean[l] = mean;
      model.target_scale[l] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }
  model.library.hyper = init.hyper;
  model.task_names = init.task_names;
  if (model.task_names.empty()) {
    for (Index l = 0; l < m; ++l) model.task_names.push_back("task" + std::to_string(l));
  }
  require_dims(static_cast<Index>(model.task_names.size()) == m, "need one task name per task");
  model.validate();
  return model;
}

Matrix joint_covariance(const MTGPModel& model) {
  model.validate();
  const Vector x = model.normalized_inputs();
  std::vector<Matrix> grams;
  for (Index i = 0; i < model.library.size(); ++i) grams.push_back(gram(model.library.element(i), x, x));
  Matrix sigma = combine_blocks(model, model.weights.cwiseSqrt(), model.task_covariance(), grams);
  const Index n = model.points();
  for (Index l = 0; l < model.tasks(); ++l) sigma.diagonal().segment(l * n, n).array() += model.noise[l];
  return sigma;
}

double jitter(const Matrix& sigma) { return 1e-8 * sigma.diagonal().mean(); }

Index parameter_count(const MTGPModel& model) {
  const Index m = model.tasks();
  const HyperSlots hs = slots(model.library);
  return m * model.library.size() + m * (m + 1) / 2 + m + (hs.lengthscale ? 1 : 0) + (hs.period ? 1 : 0) +
         (hs.offset ? 1 : 0);
}

std::vector<std::string> parameter_names(const MTGPModel& model) {
  std::vector<std::string> out;
  const Index m = model.tasks();
  const auto kn = model.library.names();
  for (Index l = 0; l < m; ++l) {
    for (const auto& k : kn) out.push_back("log_c[" + std::to_string(l) + "," + k + "]");
  }
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j <= i; ++j) out.push_back("L[" + std::to_string(i) + "," + std::to_string(j) + "]");
  }
  for (Index l = 0; l < m; ++l) out.push_back("log_noise[" + std::to_string(l) + "]");
  const HyperSlots hs = slots(model.library);
  if (hs.lengthscale) out.emplace_back("log_lengthscale");
  if (hs.period) out.emplace_back("log_period");
  if (hs.offset) out.emplace_back("offset");
  return out;
}

Vector pack_parameters(const MTGPModel& model) {
  Vector theta(parameter_count(model));
  Index k = 0;
  for (Index l = 0; l < model.tasks(); ++l) {
    for (Index xi = 0; xi < model.library.size(); ++xi) theta[k++] = std::log(model.weights(l, xi));
  }
  for (Index i = 0; i < model.tasks(); ++i) {
    for (Index j = 0; j <= i; ++j) theta[k++] = model.task_factor(i, j);
  }
  for (Index l = 0; l < model.tasks(); ++l) theta[k++] = std::log(model.noise[l]);
  const HyperSlots hs = slots(model.library);
  if (hs.lengthscale) theta[k++] = std::log(model.library.hyper.lengthscale);
  if (hs.period) theta[k++] = std::log(model.library.hyper.period);
  if (hs.offset) theta[k++] = model.library.hyper.offset;
  return theta;
}

void unpack_parameters(MTGPModel& model, const Vector& theta) {
  require_dims(theta.size() == parameter_count(model), "parameter vector has the wrong length");
  Index k = 0;
  for (Index l = 0; l < model.tasks(); ++l) {
    for (Index xi = 0; xi < model.library.size(); ++xi) model.weights(l, xi) = std::exp(theta[k++]);
  }
  model.task_factor.setZero();
  for (Index i = 0; i < model.tasks(); ++i) {
    for (Index j = 0; j <= i; ++j) model.task_factor(i, j) = theta[k++];
  }
  for (Index l = 0; l < model.tasks(); ++l) model.noise[l] = std::exp(theta[k++]);
  const HyperSlots hs = slots(model.library);
  if (hs.lengthscale) model.library.hyper.lengthscale = std::exp(theta[k++]);
  if (hs.period) model.library.hyper.period = std::exp(theta[k++]);
  if (hs.offset) model.library.hyper.offset = theta[k++];
}

double log_marginal_likelihood(const MTGPModel& model) { return log_likelihood_of(assemble_model(model)); }

LikelihoodGradient log_marginal_likelihood_with_gradient(const MTGPModel& model) {
  const Assembled w = assemble_model(model);
  LikelihoodGradient out;
  out.value = log_likelihood_of(w);

  const Index tasks = model.tasks();
  const Index n = model.points();
  const Index nk = model.library.size();
  const Matrix& s = w.sqrt_weights;
  const Matrix& kt = w.task_cov;

  // dL/dtheta = 1/2 sum(W o dSigma/dtheta), W = alpha alpha^T - Sigma^{-1}.
  Matrix wmat = w.alpha * w.alpha.transpose() - w.chol.solve(Matrix::Identity(tasks * n, tasks * n));
  // The jitter 1e-8 * tr(Sigma)/N moves with theta too; folding its derivative
  // into W keeps every component formula below unchanged.
  wmat.diagonal().array() += 1e-8 * wmat.trace() / static_cast<double>(tasks * n);

  // g[xi](a, b) = sum(W_ab o K_xi)
  std::vector<Matrix> g(static_cast<std::size_t>(nk), Matrix(tasks, tasks));
  for (Index xi = 0; xi < nk; ++xi) {
    for (Index a = 0; a < tasks; ++a) {
      for (Index b = 0; b < tasks; ++b) {
        g[static_cast<std::size_t>(xi)](a, b) =
            wmat.block(a * n, b * n, n, n).cwiseProduct(w.grams[static_cast<std::size_t>(xi)]).sum();
      }
    }
  }

  out.gradient = Vector::Zero(parameter_count(model));
  Index k = 0;
  for (Index l = 0; l < tasks; ++l) {
    for (Index xi = 0; xi < nk; ++xi) {
      double acc = 0.0;
      for (Index b = 0; b < tasks; ++b) acc += kt(l, b) * s(l, xi) * s(b, xi) * g[static_cast<std::size_t>(xi)](l, b);
      out.gradient[k++] = 0.5 * acc;
    }
  }
  Matrix h = Matrix::Zero(tasks, tasks);
  for (Index xi = 0; xi < nk; ++xi) {
    h += (s.col(xi) * s.col(xi).transpose()).cwiseProduct(g[static_cast<std::size_t>(xi)]);
  }
  const Matrix hl = h * model.task_factor;
  for (Index i = 0; i < tasks; ++i) {
    for (Index j = 0; j <= i; ++j) out.gradient[k++] = hl(i, j);
  }
  for (Index l = 0; l < tasks; ++l) {
    out.gradient[k++] = 0.5 * model.noise[l] * wmat.block(l * n, l * n, n, n).trace();
  }

  const HyperSlots hs = slots(model.library);
  if (!(hs.lengthscale || hs.period || hs.offset)) return out;
  // Derivative Gram matrices per element, one per hyperparameter slot.
  std::vector<Matrix> dl(static_cast<std::size_t>(nk), Matrix(n, n));
  std::vector<Matrix> dp = dl;
  std::vector<Matrix> dc = dl;
  for (Index xi = 0; xi < nk; ++xi) {
    const KernelSpec spec = model.library.element(xi);
    const auto u = static_cast<std::size_t>(xi);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        const KernelGradient kg = kernel_eval_with_gradient(spec, w.x[i], w.x[j]);
        dl[u](i, j) = kg.d_log_lengthscale;
        dp[u](i, j) = kg.d_log_period;
        dc[u](i, j) = kg.d_offset;
      }
    }
  }
  auto contract = [&](const std::vector<Matrix>& dk) {
    double acc = 0.0;
    for (Index a = 0; a < tasks; ++a) {
      for (Index b = 0; b < tasks; ++b) {
        const auto wab = wmat.block(a * n, b * n, n, n);
        for (Index xi = 0; xi < nk; ++xi) {
          acc += kt(a, b) * s(a, xi) * s(b, xi) * wab.cwiseProduct(dk[static_cast<std::size_t>(xi)]).sum();
        }
      }
    }
    return 0.5 * acc;
  };
  if (hs.lengthscale) out.gradient[k++] = contract(dl);
  if (hs.period) out.gradient[k++] = contract(dp);
  if (hs.offset) out.gradient[k++] = contract(dc);
  return out;
}

namespace {

class NegativeLogLikelihood final : public ceres::FirstOrderFunction {
 public:
  explicit NegativeLogLikelihood(MTGPModel prototype)
      : prototype_(std::move(prototype)), count_(static_cast<int>(parameter_count(prototype_))) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Vector> theta(parameters, count_);
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > kParamLimit) return false;
    MTGPModel m = prototype_;
    try {
      unpack_parameters(m, theta);
      if (gradient != nullptr) {
        const LikelihoodGradient lg = log_marginal_likelihood_with_gradient(m);
        if (!std::isfinite(lg.value) || !lg.gradient.allFinite()) return false;
        *cost = -lg.value;
        Eigen::Map<Vector>(gradient, count_) = -lg.gradient;
      } else {
        *cost = -log_marginal_likelihood(m);
      }
    } catch (const NumericalError&) {
      return false;
    }
    return std::isfinite(*cost);
  }

  int NumParameters() const override { return count_; }

 private:
  MTGPModel prototype_;
  int count_;
};

Vector random_start(const MTGPModel& base, std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  MTGPModel m = base;
  for (Index l = 0; l < m.tasks(); ++l) {
    for (Index xi = 0; xi < m.library.size(); ++xi) m.weights(l, xi) = std::exp(uni(std::log(0.05), std::log(2.0)));
  }
  m.task_factor.setZero();
  for (Index i = 0; i < m.tasks(); ++i) {
    for (Index j = 0; j < i; ++j) m.task_factor(i, j) = uni(-0.3, 0.3);
    m.task_factor(i, i) = uni(0.5, 1.5);
  }
  for (Index l = 0; l < m.tasks(); ++l) m.noise[l] = std::exp(uni(std::log(1e-3), std::log(0.3)));
  m.library.hyper.lengthscale = std::exp(uni(std::log(0.05), std::log(1.0)));
  m.library.hyper.period = std::exp(uni(std::log(0.1), std::log(2.0)));
  m.library.hyper.offset = uni(-1.0, 0.5);
  return pack_parameters(m);
}

}  // namespace

MTGPModel train(const Vector& inputs, const Matrix& targets, const KernelLibrary& library, const TrainOptions& options) {
  require_dims(inputs.size() >= 2, "training needs at least two points");
  if (options.restarts < 1 || options.max_iterations < 1) throw std::invalid_argument("training budget must be positive");
  ModelInit init;
  init.standardize_targets = options.standardize_targets;
  init.task_names = options.task_names;
  MTGPModel base = make_model(inputs, targets, library, init);
  if (options.warm_start) {
    const MTGPModel& ws = *options.warm_start;
    require_dims(ws.tasks() == base.tasks() && ws.library.elements == library.elements,
                 "warm start must share the task count and kernel library");
    base.input_shift = ws.input_shift;
    base.input_scale = ws.input_scale;
    base.target_mean = ws.target_mean;
    base.target_scale = ws.target_scale;
    base.library.hyper = ws.library.hyper;
    base.weights = ws.weights;
    base.task_factor = ws.task_factor;
    base.noise = ws.noise;
  }

  std::mt19937_64 rng(options.seed);
  std::vector<RestartTrace> traces;
  MTGPModel best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::ostringstream diagnostics;

  for (int r = 0; r < options.restarts; ++r) {
    Vector theta = r == 0 ? pack_parameters(base) : random_start(base, rng);
    RestartTrace trace;
    MTGPModel candidate = base;
    try {
      unpack_parameters(candidate, theta);
      trace.initial_log_likelihood = log_marginal_likelihood(candidate);
    } catch (const NumericalError& e) {
      trace.message = e.what();
      diagnostics << "restart " << r << ": " << e.what() << "; ";
      traces.push_back(trace);
      continue;
    }
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.max_num_iterations = options.max_iterations;
    opts.gradient_tolerance = options.gradient_tolerance;
    opts.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    const ceres::GradientProblem problem(new NegativeLogLikelihood(base));
    ceres::Solve(opts, problem, theta.data(), &summary);
    try {
      unpack_parameters(candidate, theta);
      trace.final_log_likelihood = log_marginal_likelihood(candidate);
      trace.usable = std::isfinite(trace.final_log_likelihood);
    } catch (const NumericalError& e) {
      trace.message = e.what();
    }
    trace.iterations = static_cast<int>(summary.iterations.size());
    if (trace.message.empty()) trace.message = summary.message;
    if (!trace.usable) diagnostics << "restart " << r << ": " << trace.message << "; ";
    traces.push_back(trace);
    if (trace.usable && trace.final_log_likelihood > best_value) {
      best_value = trace.final_log_likelihood;
      best = candidate;
    }
  }
  if (!std::isfinite(best_value)) throw NumericalError("every training restart failed: " + diagnostics.str());
  best.restarts = std::move(traces);
  return best;
}

double prior_variance(const MTGPModel& model, double x, Index task) {
  require_dims(task >= 0 && task < model.tasks(), "task index out of range");
  const double xn = model.normalize_input(x);
  double v = 0.0;
  for (Index xi = 0; xi < model.library.size(); ++xi) {
    v += model.weights(task, xi) * kernel_eval(model.library.element(xi), xn, xn);
  }
  const double scale = model.target_scale[task];
  return model.task_covariance()(task, task) * v * scale * scale;
}

Prediction predict(const MTGPModel& model, double x, Index task) {
  require_dims(task >= 0 && task < model.tasks(), "task index out of range");
  const Assembled w = assemble_model(model);
  const Index n = model.points();
  const Vector xs = Vector::Constant(1, model.normalize_input(x));
  Vector cross = Vector::Zero(model.tasks() * n);
  double prior = 0.0;
  for (Index xi = 0; xi < model.library.size(); ++xi) {
    const KernelSpec spec = model.library.element(xi);
    const Matrix k = gram(spec, w.x, xs);
    for (Index b = 0; b < model.tasks(); ++b) {
      cross.segment(b * n, n) += (w.task_cov(task, b) * w.sqrt_weights(task, xi) * w.sqrt_weights(b, xi)) * k.col(0);
    }
    prior += model.weights(task, xi) * kernel_eval(spec, xs[0], xs[0]);
  }
  prior *= w.task_cov(task, task);
  Prediction p;
  p.mean = cross.dot(w.alpha);
  p.variance = prior - cross.dot(w.chol.solve(cross));
  if (p.variance < 0.0) {
    if (p.variance < -1e-10) std::cerr << "warning: negative posterior variance " << p.variance << " clamped to 0\n";
    p.variance = 0.0;
  }
  const double scale = model.target_scale[task];
  p.mean = p.mean * scale + model.target_mean[task];
  p.variance *= scale * scale;
  return p;
}

void write_prediction_csv(std::ostream& os, const MTGPModel& model, const std::vector<double>& xs) {
  os << "x";
  for (const auto& name : model.task_names) os << ',' << name << "_mean," << name << "_var";
  os << '\n' << std::setprecision(17);
  for (double x : xs) {
    os << x;
    for (Index l = 0; l < model.tasks(); ++l) {
      const Prediction p = predict(model, x, l);
      os << ',' << p.mean << ',' << p.variance;
    }
    os << '\n';
  }
}

std::uint64_t training_digest(const MTGPModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, model.inputs.data(), static_cast<std::size_t>(model.inputs.size()));
  h = fnv1a(h, model.targets.data(), static_cast<std::size_t>(model.targets.size()));
  return h;
}

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from(const json& rows, Index cols_if_empty = 0) {
  const auto r = static_cast<Index>(rows.size());
  const Index c = r > 0 ? static_cast<Index>(rows[0].size()) : cols_if_empty;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    require_dims(static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) == c, "ragged matrix in model file");
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

json hyper_json(const KernelHyper& h) {
  return {{"variance", h.variance}, {"offset", h.offset}, {"lengthscale", h.lengthscale}, {"period", h.period}};
}

}  // namespace

std::string model_to_json(const MTGPModel& model) {
  model.validate();
  json j;
  j["format"] = "mskp-mtgp";
  j["version"] = 1;
  j["kernels"] = model.library.names();
  j["hyper"] = hyper_json(model.library.hyper);
  j["hyper_original_units"] = hyper_json(model.hyper_original_units());
  j["weights"] = matrix_json(model.weights);
  j["task_factor"] = matrix_json(model.task_factor);
  j["task_covariance"] = matrix_json(model.task_covariance());
  j["noise"] = vector_json(model.noise);
  j["task_names"] = model.task_names;
  j["input_shift"] = model.input_shift;
  j["input_scale"] = model.input_scale;
  j["target_mean"] = vector_json(model.target_mean);
  j["target_scale"] = vector_json(model.target_scale);
  j["inputs"] = vector_json(model.inputs);
  j["targets"] = matrix_json(model.targets);
  j["training_digest"] = hex(training_digest(model));
  json restarts = json::array();
  for (const auto& r : model.restarts) {
    restarts.push_back({{"initial_log_likelihood", r.initial_log_likelihood},
                        {"final_log_likelihood", r.final_log_likelihood},
                        {"iterations", r.iterations},
                        {"usable", r.usable},
                        {"message", r.message}});
  }
  j["restarts"] = restarts;
  return j.dump(2);
}

MTGPModel model_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "mskp-mtgp") throw std::invalid_argument("not a multitask GP model file");
  MTGPModel m;
  std::string names;
  for (const auto& k : j.at("kernels")) names += (names.empty() ? "" : ",") + k.get<std::string>();
  m.library = KernelLibrary::parse(names);
  const json& h = j.at("hyper");
  m.library.hyper = {h.at("variance").get<double>(), h.at("offset").get<double>(), h.at("lengthscale").get<double>(),
                     h.at("period").get<double>()};
  m.weights = matrix_from(j.at("weights"));
  m.task_factor = matrix_from(j.at("task_factor"));
  m.noise = vector_from(j.at("noise"));
  m.task_names = j.at("task_names").get<std::vector<std::string>>();
  m.input_shift = j.at("input_shift").get<double>();
  m.input_scale = j.at("input_scale").get<double>();
  m.target_mean = vector_from(j.at("target_mean"));
  m.target_scale = vector_from(j.at("target_scale"));
  m.inputs = vector_from(j.at("inputs"));
  m.targets = matrix_from(j.at("targets"), m.weights.rows());
  for (const auto& r : j.value("restarts", json::array())) {
    m.restarts.push_back({r.at("initial_log_likelihood").get<double>(), r.at("final_log_likelihood").get<double>(),
                          r.at("iterations").get<int>(), r.at("usable").get<bool>(), r.at("message").get<std::string>()});
  }
  m.validate();
  if (j.at("training_digest").get<std::string>() != hex(training_digest(m))) {
    throw std::invalid_argument("model file training digest does not match its data");
  }
  return m;
}

void save_model(const MTGPModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write model file " + path);
  os << model_to_json(model) << '\n';
}

MTGPModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read model file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace mskp
