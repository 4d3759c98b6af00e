#pragma once

// Likelihood, MCMC hyperparameter training and posterior prediction.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegp/assembly.hpp"
#include "sparsegp/hyperparams.hpp"
#include "sparsegp/solvers.hpp"

namespace sparsegp {

struct ComputeResources {
  std::size_t batch_size = 1000;  ///< clamped to the dataset size
  std::size_t workers = 1;
};

/// Dataset plus everything assembled for one hyperparameter state.
struct GPModel {
  Dataset dataset;
  HyperparamVector hyperparams;
  CoreKernelSpec core;
  SparsityKernelSpec spec;
  SparseSymMatrix kernel_matrix;  ///< K without noise
  AssemblyStats stats;

  /// Diagonal of V: per-point noise when the dataset has it, else the noise hyperparameter.
  std::vector<double> noise_diagonal() const;
  /// K + V.
  SparseSymMatrix system_matrix() const;
};

GPModel build_model(const Dataset& ds, const HyperparamVector& h, const ComputeResources& res = {});

struct LikelihoodConfig {
  CGConfig cg;
  LogDetConfig logdet;
  /// Replaces the randomized estimator, e.g. with an exact dense log-determinant in tests.
  std::function<double(const SparseSymMatrix&)> logdet_override;
};

struct LikelihoodResult {
  double value = 0.0;  ///< -1/2 r^T (K+V)^{-1} r - 1/2 log|K+V|
  double data_fit = 0.0;
  double logdet = 0.0;
  double logdet_std_error = 0.0;
  std::size_t cg_iterations = 0;
  double cg_residual = 0.0;
  bool cg_converged = true;
};

LikelihoodResult marginal_log_likelihood(const GPModel& model, const LikelihoodConfig& cfg = {});

/// lnL + (1 - s) lnL with s clamped to [0, 1].
double augmented_objective(double log_likelihood, double s_bound);

/// min(1, s_bound) < requirement.
bool constraint_satisfied(double s_bound, double requirement);

enum class Objective { plain, augmented, constrained };
const char* to_string(Objective o);
Objective objective_from_string(const std::string& name);

struct MCMCConfig {
  std::size_t iterations = 160;
  double proposal_scale = 0.1;
  std::uint64_t seed = 0;
  Objective objective = Objective::plain;
  double sparsity_requirement = 1.0;
  ComputeResources resources;
  LikelihoodConfig likelihood;
};

struct TraceRecord {
  std::size_t iteration = 0;
  std::vector<double> hyperparams;  ///< the proposal evaluated this iteration
  std::optional<double> log_likelihood;  ///< empty when the proposal was never assembled
  std::optional<double> objective;
  double s_bound = 0.0;
  std::optional<double> empirical_s;
  bool accepted = false;
  bool feasible = true;
  bool cg_converged = true;
  double best_log_likelihood = 0.0;  ///< best-so-far including this iteration
  double elapsed_s = 0.0;
};

struct MCMCTrace {
  HyperparamVector initial;
  double initial_log_likelihood = 0.0;
  double initial_s_bound = 0.0;
  std::vector<TraceRecord> records;
  HyperparamVector best;
  double best_log_likelihood = 0.0;
};

struct TrainResult {
  MCMCTrace trace;
  GPModel model;  ///< assembled at trace.best
};

/// Domain used for the analytic sparsity bound during training.
DomainBox training_domain(const Dataset& ds);

/// Random-walk Metropolis; reports the best visited state. Deterministic for a fixed seed.
/// Throws ConstraintViolation when constrained mode starts from an infeasible state.
TrainResult mcmc_train(const Dataset& ds, const HyperparamVector& init, const MCMCConfig& cfg,
                       const std::function<void(const TraceRecord&)>& on_record = {});

nlohmann::json to_json(const TraceRecord& rec);
TraceRecord trace_record_from_json(const nlohmann::json& j);

struct PosteriorResult {
  std::vector<double> mean;
  std::vector<double> variance;      ///< clamped at 0
  std::vector<double> raw_variance;  ///< before clamping
  std::vector<std::size_t> cg_iterations;  ///< per query; 0 when the query has no support
  std::vector<bool> converged;
  std::size_t mean_solve_iterations = 0;
};

PosteriorResult posterior_predict(const GPModel& model, std::span<const Point> queries,
                                  const CGConfig& cg = {});

}  // namespace sparsegp
