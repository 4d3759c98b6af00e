#include "sparsegp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sparsegp/errors.hpp"

namespace sparsegp {

std::vector<double> GPModel::noise_diagonal() const {
  if (dataset.has_point_noise()) return dataset.noise;
  return std::vector<double>(dataset.size(), hyperparams.noise_variance());
}

SparseSymMatrix GPModel::system_matrix() const {
  return kernel_matrix.with_added_diagonal(noise_diagonal());
}

GPModel build_model(const Dataset& ds, const HyperparamVector& h, const ComputeResources& res) {
  ds.validate();
  h.validate();
  if (h.layout().dim != ds.dim) throw InvalidInput("hyperparameters and dataset dimensions differ");
  GPModel model{ds, h, h.core_spec(), h.sparsity_spec(), {}, {}};
  const std::size_t b = std::clamp<std::size_t>(res.batch_size, 1, ds.size());
  auto assembled = assemble_covariance(ds, plan_batches(ds.size(), b), model.core, model.spec,
                                       std::max<std::size_t>(res.workers, 1));
  model.kernel_matrix = std::move(assembled.matrix);
  model.stats = std::move(assembled.stats);
  return model;
}

LikelihoodResult marginal_log_likelihood(const GPModel& model, const LikelihoodConfig& cfg) {
  const SparseSymMatrix a = model.system_matrix();
  const double m = model.hyperparams.prior_mean();
  std::vector<double> residual(model.dataset.y);
  for (double& v : residual) v -= m;

  LikelihoodResult out;
  const CGResult solve = cg_solve(a, residual, cfg.cg);
  out.cg_iterations = solve.iterations;
  out.cg_residual = solve.residual;
  out.cg_converged = solve.converged;
  double quad = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) quad += residual[i] * solve.x[i];
  out.data_fit = -0.5 * quad;

  if (cfg.logdet_override) {
    out.logdet = cfg.logdet_override(a);
  } else {
    const LogDetResult ld = logdet_rla(a, cfg.logdet);
    out.logdet = ld.estimate;
    out.logdet_std_error = ld.std_error;
  }
  if (!std::isfinite(out.logdet)) throw NumericalBreakdown("log-determinant is not finite");
  out.value = out.data_fit - 0.5 * out.logdet;
  return out;
}

double augmented_objective(double log_likelihood, double s_bound) {
  const double s = std::min(1.0, std::max(0.0, s_bound));
  return log_likelihood + (1.0 - s) * log_likelihood;
}

bool constraint_satisfied(double s_bound, double requirement) {
  return std::min(1.0, s_bound) < requirement;
}

const char* to_string(Objective o) {
  switch (o) {
    case Objective::plain: return "plain";
    case Objective::augmented: return "augmented";
    case Objective::constrained: return "constrained";
  }
  return "plain";
}

Objective objective_from_string(const std::string& name) {
  if (name == "plain") return Objective::plain;
  if (name == "augmented") return Objective::augmented;
  if (name == "constrained") return Objective::constrained;
  throw InvalidInput("unknown objective: " + name);
}

DomainBox training_domain(const Dataset& ds) { return ds.bounding_box(); }

namespace {

struct Evaluation {
  double log_likelihood = 0.0;
  double objective = 0.0;
  double empirical_s = 0.0;
  bool cg_converged = true;
};

Evaluation evaluate(const Dataset& ds, const HyperparamVector& h, double s_bound, const MCMCConfig& cfg) {
  const GPModel model = build_model(ds, h, cfg.resources);
  const LikelihoodResult lr = marginal_log_likelihood(model, cfg.likelihood);
  Evaluation e;
  e.log_likelihood = lr.value;
  e.cg_converged = lr.cg_converged;
  e.empirical_s = model.stats.empirical_s;
  e.objective = cfg.objective == Objective::augmented ? augmented_objective(lr.value, s_bound) : lr.value;
  return e;
}

}  // namespace

TrainResult mcmc_train(const Dataset& ds, const HyperparamVector& init, const MCMCConfig& cfg,
                       const std::function<void(const TraceRecord&)>& on_record) {
  if (cfg.iterations < 1) throw InvalidInput("mcmc: iterations must be >= 1");
  if (!(cfg.proposal_scale >= 0.0)) throw InvalidInput("mcmc: proposal scale must be >= 0");
  if (cfg.objective == Objective::constrained &&
      !(cfg.sparsity_requirement > 0.0 && cfg.sparsity_requirement <= 1.0)) {
    throw InvalidInput("mcmc: sparsity requirement must lie in (0, 1]");
  }
  ds.validate();
  init.validate();
  const auto start = std::chrono::steady_clock::now();

  const DomainBox domain = training_domain(ds);
  DomainBox clip = domain;
  for (std::size_t k = 0; k < clip.dim(); ++k) {
    const double pad = 0.1 * (domain.upper[k] - domain.lower[k]);
    clip.lower[k] -= pad;
    clip.upper[k] += pad;
  }
  const double y_mean = std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / static_cast<double>(ds.size());
  double y_sd = 0.0;
  for (double v : ds.y) y_sd += (v - y_mean) * (v - y_mean);
  y_sd = std::sqrt(y_sd / static_cast<double>(ds.size()));
  if (!(y_sd > 0.0)) y_sd = 1.0;

  const bool constrained = cfg.objective == Objective::constrained;
  MCMCTrace trace;
  trace.initial = init;
  trace.initial_s_bound = sparsity_upper_bound(init.sparsity_spec(), domain);
  if (constrained && !constraint_satisfied(trace.initial_s_bound, cfg.sparsity_requirement)) {
    throw ConstraintViolation("initial hyperparameters violate the sparsity requirement: s_bound = " +
                              std::to_string(trace.initial_s_bound) + ", requirement = " +
                              std::to_string(cfg.sparsity_requirement));
  }

  HyperparamVector current = init;
  Evaluation current_eval = evaluate(ds, init, trace.initial_s_bound, cfg);
  trace.initial_log_likelihood = current_eval.log_likelihood;
  trace.best = init;
  trace.best_log_likelihood = current_eval.log_likelihood;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool freeze_noise = ds.has_point_noise();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    HyperparamVector proposal = current;
    for (std::size_t k = 0; k < proposal.size(); ++k) {
      const double step = cfg.proposal_scale * normal(rng);
      if (k == 0 && freeze_noise) continue;
      switch (proposal.role(k)) {
        case ParamRole::positive: proposal[k] *= std::exp(step); break;
        case ParamRole::location: {
          const std::size_t axis = proposal.location_axis(k);
          const double width = domain.upper[axis] - domain.lower[axis];
          proposal[k] = std::clamp(proposal[k] + step * width, clip.lower[axis], clip.upper[axis]);
          break;
        }
        case ParamRole::mean: proposal[k] += step * y_sd; break;
      }
    }
    const double u = unif(rng);

    TraceRecord rec;
    rec.iteration = it;
    rec.hyperparams = proposal.values();
    rec.s_bound = sparsity_upper_bound(proposal.sparsity_spec(), domain);

    if (constrained && !constraint_satisfied(rec.s_bound, cfg.sparsity_requirement)) {
      rec.feasible = false;  // rejected before assembly
    } else {
      Evaluation e;
      bool broke_down = false;
      try {
        e = evaluate(ds, proposal, rec.s_bound, cfg);
      } catch (const NumericalBreakdown&) {
        broke_down = true;  // e.g. a proposal that makes K + V numerically indefinite
      }
      if (!broke_down) {
        rec.log_likelihood = e.log_likelihood;
        rec.objective = e.objective;
        rec.empirical_s = e.empirical_s;
      }
      rec.cg_converged = !broke_down && e.cg_converged;
      if (rec.cg_converged && std::isfinite(e.objective)) {
        const double delta = e.objective - current_eval.objective;
        rec.accepted = delta >= 0.0 || std::log(u) < delta;
      }
      if (rec.accepted) {
        current = proposal;
        current_eval = e;
        if (e.log_likelihood > trace.best_log_likelihood) {
          trace.best = proposal;
          trace.best_log_likelihood = e.log_likelihood;
        }
      }
    }
    rec.best_log_likelihood = trace.best_log_likelihood;
    rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_record) on_record(rec);
    trace.records.push_back(std::move(rec));
  }

  GPModel model = build_model(ds, trace.best, cfg.resources);
  return TrainResult{std::move(trace), std::move(model)};
}

nlohmann::json to_json(const TraceRecord& rec) {
  nlohmann::json j;
  j["iteration"] = rec.iteration;
  j["hyperparams"] = rec.hyperparams;
  j["log_likelihood"] = rec.log_likelihood ? nlohmann::json(*rec.log_likelihood) : nlohmann::json();
  j["objective"] = rec.objective ? nlohmann::json(*rec.objective) : nlohmann::json();
  j["s_bound"] = rec.s_bound;
  j["empirical_s"] = rec.empirical_s ? nlohmann::json(*rec.empirical_s) : nlohmann::json();
  j["accepted"] = rec.accepted;
  j["feasible"] = rec.feasible;
  j["cg_converged"] = rec.cg_converged;
  j["best_log_likelihood"] = rec.best_log_likelihood;
  j["elapsed_s"] = rec.elapsed_s;
  return j;
}

TraceRecord trace_record_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  TraceRecord rec;
  rec.iteration = j.at("iteration").get<std::size_t>();
  rec.hyperparams = j.at("hyperparams").get<std::vector<double>>();
  rec.log_likelihood = opt("log_likelihood");
  rec.objective = opt("objective");
  rec.s_bound = j.at("s_bound").get<double>();
  rec.empirical_s = opt("empirical_s");
  rec.accepted = j.at("accepted").get<bool>();
  rec.feasible = j.at("feasible").get<bool>();
  rec.cg_converged = j.at("cg_converged").get<bool>();
  rec.best_log_likelihood = j.at("best_log_likelihood").get<double>();
  rec.elapsed_s = j.at("elapsed_s").get<double>();
  return rec;
}

PosteriorResult posterior_predict(const GPModel& model, std::span<const Point> queries, const CGConfig& cg) {
  const SparseSymMatrix a = model.system_matrix();
  const double m0 = model.hyperparams.prior_mean();
  std::vector<double> residual(model.dataset.y);
  for (double& v : residual) v -= m0;

  PosteriorResult out;
  const CGResult weights = cg_solve(a, residual, cg);
  out.mean_solve_iterations = weights.iterations;

  const CrossCovariance kappa = cross_covariance(model.dataset, queries, model.core, model.spec);
  const std::size_t n = model.dataset.size();
  std::vector<double> dense_row(n, 0.0);
  out.mean.resize(queries.size());
  out.variance.resize(queries.size());
  out.raw_variance.resize(queries.size());
  out.cg_iterations.assign(queries.size(), 0);
  out.converged.assign(queries.size(), weights.converged);

  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto idx = kappa.row_indices(q);
    const auto val = kappa.row_values(q);
    const double prior_var = composed_kernel_eval(model.core, model.spec, queries[q], queries[q]);
    double mean = m0;
    for (std::size_t e = 0; e < idx.size(); ++e) mean += val[e] * weights.x[idx[e]];
    double var = prior_var;
    if (!idx.empty()) {
      for (std::size_t e = 0; e < idx.size(); ++e) dense_row[idx[e]] = val[e];
      const CGResult s = cg_solve(a, dense_row, cg);
      double reduction = 0.0;
      for (std::size_t e = 0; e < idx.size(); ++e) reduction += val[e] * s.x[idx[e]];
      var -= reduction;
      out.cg_iterations[q] = s.iterations;
      out.converged[q] = out.converged[q] && s.converged;
      for (std::size_t e = 0; e < idx.size(); ++e) dense_row[idx[e]] = 0.0;
    }
    out.mean[q] = mean;
    out.raw_variance[q] = var;
    out.variance[q] = std::max(0.0, var);
  }
  return out;
}

}  // namespace sparsegp
