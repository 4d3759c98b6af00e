#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sparsegp/errors.hpp"

namespace sparsegp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_if(const json& doc, const char* key, T& out) {
  if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

template <typename T>
void read_if(const json& doc, const char* key, std::optional<T>& out) {
  if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

SyntheticSpec synthetic_from_json(const json& j) {
  if (j.contains("two_cluster")) {
    const auto& t = j.at("two_cluster");
    auto spec = two_cluster_spec(t.value("dim", std::size_t{2}), t.value("per_cluster", std::size_t{1000}),
                                 t.value("cluster_radius", 1.0), t.value("separation", 10.0));
    read_if(t, "noise_std", spec.noise_std);
    return spec;
  }
  return synthetic_spec_from_json(j);
}

LikelihoodConfig likelihood_config(const RunConfig& cfg) {
  LikelihoodConfig lc;
  lc.cg.rel_tolerance = cfg.cg_tolerance;
  lc.logdet.probes = cfg.logdet_probes;
  lc.logdet.taylor_terms = cfg.logdet_terms;
  lc.logdet.seed = cfg.seed;
  return lc;
}

ComputeResources resources(const RunConfig& cfg, std::size_t n) {
  return {std::min(cfg.batch_size, n), cfg.workers};
}

/// Hyperparameters and normalization constants stored together.
json hyperparams_document(const HyperparamVector& h, const Normalizer& norm, const json& extra) {
  json doc = to_json(h);
  doc["normalization"] = norm.to_json();
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  return doc;
}

}  // namespace

void RunConfig::validate() const {
  if (data.has_value() == synthetic.has_value()) {
    throw InvalidInput("config: exactly one of 'data' and 'synthetic' is required");
  }
  HyperLayout{1, n1, n2, core}.validate();
  if (batch_size < 1) throw InvalidInput("config: batch_size must be >= 1");
  if (workers < 1) throw InvalidInput("config: workers must be >= 1");
  if (iterations < 1) throw InvalidInput("config: iterations must be >= 1");
  if (!(proposal_scale >= 0.0)) throw InvalidInput("config: proposal_scale must be >= 0");
  if (!(sparsity_requirement > 0.0 && sparsity_requirement <= 1.0)) {
    throw InvalidInput("config: sparsity_requirement must lie in (0, 1]");
  }
  if (logdet_probes < 1 || logdet_terms < 1) throw InvalidInput("config: logdet probes and terms must be >= 1");
  if (!(cg_tolerance > 0.0 && cg_tolerance < 1.0)) throw InvalidInput("config: cg_tolerance must lie in (0, 1)");
}

RunConfig config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  try {
    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      DataSource src;
      src.path = d.at("path").get<std::string>();
      if (src.path.is_relative()) src.path = base_dir / src.path;
      src.schema.coord_columns = d.at("coord_columns").get<std::vector<std::string>>();
      src.schema.value_column = d.at("value_column").get<std::string>();
      read_if(d, "noise_column", src.schema.noise_column);
      read_if(d, "subsample", src.subsample);
      read_if(d, "subsample_seed", src.subsample_seed);
      cfg.data = std::move(src);
    }
    if (doc.contains("synthetic")) {
      cfg.synthetic = synthetic_from_json(doc.at("synthetic"));
      read_if(doc.at("synthetic"), "seed", cfg.synthetic_seed);
    }
    if (doc.contains("kernel")) {
      const auto& k = doc.at("kernel");
      read_if(k, "n1", cfg.n1);
      read_if(k, "n2", cfg.n2);
      if (k.contains("core")) cfg.core = core_kind_from_string(k.at("core").get<std::string>());
    }
    read_if(doc, "batch_size", cfg.batch_size);
    read_if(doc, "workers", cfg.workers);
    read_if(doc, "iterations", cfg.iterations);
    read_if(doc, "proposal_scale", cfg.proposal_scale);
    if (doc.contains("objective")) cfg.objective = objective_from_string(doc.at("objective").get<std::string>());
    read_if(doc, "sparsity_requirement", cfg.sparsity_requirement);
    read_if(doc, "seed", cfg.seed);
    if (doc.contains("output_dir")) {
      cfg.output_dir = doc.at("output_dir").get<std::string>();
      if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
    }
    read_if(doc, "export_covariance", cfg.export_covariance);
    if (doc.contains("logdet")) {
      read_if(doc.at("logdet"), "probes", cfg.logdet_probes);
      read_if(doc.at("logdet"), "taylor_terms", cfg.logdet_terms);
    }
    read_if(doc, "cg_tolerance", cfg.cg_tolerance);
    if (doc.contains("init")) {
      const auto& i = doc.at("init");
      read_if(i, "noise_variance", cfg.init.noise_variance);
      read_if(i, "signal_variance", cfg.init.signal_variance);
      read_if(i, "length_scale", cfg.init.length_scale);
      read_if(i, "base_radius", cfg.init.base_radius);
      read_if(i, "bump_radius", cfg.init.bump_radius);
      read_if(i, "bump_amplitude", cfg.init.bump_amplitude);
      read_if(i, "bump_shape", cfg.init.bump_shape);
      read_if(i, "bump_centers", cfg.init.bump_centers);
      read_if(i, "prior_mean", cfg.init.prior_mean);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path), path.parent_path());
}

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.data) {
    auto ingested = ingest_csv(cfg.data->path.string(), cfg.data->schema);
    out.raw = cfg.data->subsample > 0 ? subsample(ingested.raw, cfg.data->subsample, cfg.data->subsample_seed)
                                      : std::move(ingested.raw);
    out.schema = cfg.data->schema;
    out.report = std::move(ingested.report);
  } else if (cfg.synthetic) {
    out.raw = generate_synthetic(*cfg.synthetic, cfg.synthetic_seed.value_or(cfg.seed));
    for (std::size_t k = 0; k < out.raw.dim; ++k) out.schema.coord_columns.push_back("x" + std::to_string(k));
    out.schema.value_column = "y";
  } else {
    throw InvalidInput("config: no data source");
  }
  out.normalizer = Normalizer::fit(out.raw);
  out.dataset = out.normalizer.apply(out.raw);
  return out;
}

HyperparamVector initial_hyperparams(const RunConfig& cfg, const Dataset& ds) {
  const HyperLayout layout{ds.dim, cfg.n1, cfg.n2, cfg.core};
  HyperparamVector h = HyperparamVector::initial(ds, layout);
  const auto& o = cfg.init;
  if (o.noise_variance) h[0] = *o.noise_variance;
  if (cfg.core != CoreKind::none) {
    if (o.signal_variance) h[1] = *o.signal_variance;
    if (o.length_scale) h[2] = *o.length_scale;
  }
  if (o.base_radius) h[layout.base_radius_index()] = *o.base_radius;
  if (o.bump_centers && o.bump_centers->size() != cfg.n1 * cfg.n2) {
    throw InvalidInput("config: init.bump_centers needs n1 * n2 entries");
  }
  for (std::size_t i = 0; i < cfg.n1; ++i) {
    for (std::size_t j = 0; j < cfg.n2; ++j) {
      const std::size_t b = layout.bump_index(i, j);
      if (o.bump_amplitude) h[b] = *o.bump_amplitude;
      if (o.bump_shape) h[b + 1] = *o.bump_shape;
      if (o.bump_radius) h[b + 2] = *o.bump_radius;
      if (o.bump_centers) {
        const auto& c = (*o.bump_centers)[i * cfg.n2 + j];
        if (c.size() != ds.dim) throw InvalidInput("config: bump center dimension mismatch");
        for (std::size_t k = 0; k < ds.dim; ++k) h[b + 3 + k] = c[k];
      }
    }
  }
  if (o.prior_mean) h.set_prior_mean(*o.prior_mean);
  h.validate();
  return h;
}

GridAxis parse_grid_axis(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3) throw InvalidInput("grid axis '" + text + "': expected min:max:count");
  GridAxis axis;
  try {
    std::size_t used = 0;
    axis.min = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("min");
    axis.max = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("max");
    const long long count = std::stoll(parts[2], &used);
    if (used != parts[2].size() || count < 1) throw std::invalid_argument("count");
    axis.count = static_cast<std::size_t>(count);
  } catch (const std::exception&) {
    throw InvalidInput("grid axis '" + text + "': expected min:max:count with count >= 1");
  }
  if (axis.max < axis.min) throw InvalidInput("grid axis '" + text + "': max < min");
  return axis;
}

std::vector<Point> grid_points(const std::vector<GridAxis>& axes) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.count;
  std::vector<Point> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p(axes.size());
    std::size_t rest = flat;
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto& a = axes[k];
      const std::size_t idx = rest % a.count;
      rest /= a.count;
      p[k] = a.count == 1 ? a.min
                          : a.min + (a.max - a.min) * static_cast<double>(idx) / static_cast<double>(a.count - 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void cmd_generate(const RunConfig& cfg) {
  if (!cfg.synthetic) throw InvalidInput("generate: config needs a 'synthetic' section");
  const LoadedData d = load_data(cfg);
  fs::create_directories(cfg.output_dir);
  export_csv(d.raw, d.schema, (cfg.output_dir / "data.csv").string());
}

void cmd_train(const RunConfig& cfg) {
  const LoadedData d = load_data(cfg);
  const Dataset& ds = d.dataset;
  const HyperparamVector init = initial_hyperparams(cfg, ds);
  fs::create_directories(cfg.output_dir);

  MCMCConfig mc;
  mc.iterations = cfg.iterations;
  mc.proposal_scale = cfg.proposal_scale;
  mc.seed = cfg.seed;
  mc.objective = cfg.objective;
  mc.sparsity_requirement = cfg.sparsity_requirement;
  mc.resources = resources(cfg, ds.size());
  mc.likelihood = likelihood_config(cfg);

  auto trace_out = open_out(cfg.output_dir / "trace.jsonl");
  const TrainResult result = mcmc_train(ds, init, mc, [&](const TraceRecord& rec) {
    trace_out << to_json(rec).dump() << '\n';
    trace_out.flush();
  });
  const MCMCTrace& trace = result.trace;
  const GPModel& model = result.model;
  const DomainBox domain = training_domain(ds);
  const double s_bound = sparsity_upper_bound(model.spec, domain);

  write_json(cfg.output_dir / "hyperparameters.json",
             hyperparams_document(trace.best, d.normalizer,
                                  {{"log_likelihood", trace.best_log_likelihood},
                                   {"initial_log_likelihood", trace.initial_log_likelihood},
                                   {"objective", to_string(cfg.objective)}}));
  write_json(cfg.output_dir / "assembly_stats.json",
             {{"dataset_size", ds.size()},
              {"batch_size", mc.resources.batch_size},
              {"workers", model.stats.workers},
              {"nnz", model.stats.nnz},
              {"empirical_s", model.stats.empirical_s},
              {"s_bound", s_bound},
              {"tasks_executed", model.stats.tasks_executed},
              {"wall_time_s", model.stats.wall_time}});
  if (cfg.export_covariance) {
    write_matrix_market(model.system_matrix(), (cfg.output_dir / "covariance.mtx").string());
  }

  std::size_t accepted = 0, infeasible = 0, not_converged = 0;
  for (const auto& r : trace.records) {
    accepted += r.accepted ? 1 : 0;
    infeasible += r.feasible ? 0 : 1;
    not_converged += r.cg_converged ? 0 : 1;
  }
  auto out = open_out(cfg.output_dir / "summary.txt");
  out << std::setprecision(10);
  out << "points: " << ds.size() << "\n";
  out << "dim: " << ds.dim << "\n";
  out << "kernel: n1=" << cfg.n1 << " n2=" << cfg.n2 << " core=" << to_string(cfg.core) << "\n";
  out << "objective: " << to_string(cfg.objective);
  if (cfg.objective == Objective::constrained) out << " (requirement " << cfg.sparsity_requirement << ")";
  out << "\n";
  out << "iterations: " << trace.records.size() << "\n";
  out << "accepted: " << accepted << "\n";
  out << "rejected_infeasible: " << infeasible << "\n";
  out << "cg_not_converged: " << not_converged << "\n";
  out << "initial_log_likelihood: " << trace.initial_log_likelihood << "\n";
  out << "best_log_likelihood: " << trace.best_log_likelihood << "\n";
  out << "initial_s_bound: " << trace.initial_s_bound << "\n";
  out << "nnz: " << model.stats.nnz << "\n";
  out << "empirical_s: " << model.stats.empirical_s << "\n";
  out << "s_bound: " << s_bound << "\n";
  if (!d.report.dropped.empty() || !d.report.malformed.empty()) {
    out << "rows_dropped: " << d.report.dropped.size() << "\n";
    out << "rows_malformed: " << d.report.malformed.size() << "\n";
  }
  out << "elapsed_s: " << (trace.records.empty() ? 0.0 : trace.records.back().elapsed_s) << "\n";
  out << "best hyperparameters:\n";
  const auto names = trace.best.names();
  for (std::size_t k = 0; k < names.size(); ++k) out << "  " << names[k] << " = " << trace.best[k] << "\n";
}

void cmd_predict(const RunConfig& cfg, const fs::path& hyperparams_path, const std::vector<std::string>& grid,
                 const fs::path& output) {
  const json doc = read_json(hyperparams_path);
  const HyperparamVector h = hyperparams_from_json(doc);
  if (!doc.contains("normalization")) throw InvalidInput("hyperparameter file has no normalization section");
  const Normalizer norm = Normalizer::from_json(doc.at("normalization"));

  const LoadedData d = load_data(cfg);
  if (d.raw.dim != h.layout().dim || norm.dim() != h.layout().dim) {
    throw InvalidInput("hyperparameters and dataset dimensions differ");
  }
  std::vector<GridAxis> axes;
  for (const auto& g : grid) axes.push_back(parse_grid_axis(g));
  if (axes.size() != h.layout().dim) {
    throw InvalidInput("grid has " + std::to_string(axes.size()) + " axes, model dimension is " +
                       std::to_string(h.layout().dim));
  }

  const Dataset ds = norm.apply(d.raw);
  const GPModel model = build_model(ds, h, resources(cfg, ds.size()));
  std::vector<Point> queries;
  for (const auto& q : grid_points(axes)) queries.push_back(norm.normalize(q));
  CGConfig cg;
  cg.rel_tolerance = cfg.cg_tolerance;
  const PosteriorResult post = posterior_predict(model, queries, cg);

  fs::create_directories(output.parent_path().empty() ? fs::path(".") : output.parent_path());
  auto out = open_out(output);
  for (const auto& c : d.schema.coord_columns) out << c << ',';
  out << "mean,variance\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (double c : norm.denormalize(queries[i])) out << c << ',';
    out << post.mean[i] << ',' << post.variance[i] << '\n';
  }
}

void cmd_benchmark(const RunConfig& cfg, const std::vector<std::size_t>& worker_counts, std::size_t repeats) {
  if (worker_counts.empty()) throw InvalidInput("benchmark: at least one worker count is required");
  for (std::size_t w : worker_counts) {
    if (w < 1) throw InvalidInput("benchmark: worker counts must be >= 1");
  }
  const LoadedData d = load_data(cfg);
  const HyperparamVector h = initial_hyperparams(cfg, d.dataset);
  const BatchPlan plan = plan_batches(d.dataset.size(), std::min(cfg.batch_size, d.dataset.size()));
  const auto rows = run_scaling_benchmark(d.dataset, plan, h.core_spec(), h.sparsity_spec(), worker_counts,
                                          std::max<std::size_t>(repeats, 1));
  fs::create_directories(cfg.output_dir);
  auto out = open_out(cfg.output_dir / "benchmark.csv");
  out << "workers,measured_s,model_s,mean_block_s,dataset_size,batch_size\n";
  for (const auto& r : rows) {
    out << r.workers << ',' << r.wall_time << ',' << r.model_time << ',' << r.mean_block_time << ','
        << d.dataset.size() << ',' << plan.batch_size << '\n';
  }
}

void cmd_sparsity(const RunConfig& cfg, const std::optional<fs::path>& hyperparams_path) {
  const LoadedData d = load_data(cfg);
  HyperparamVector h;
  Dataset ds = d.dataset;
  if (hyperparams_path) {
    const json doc = read_json(*hyperparams_path);
    h = hyperparams_from_json(doc);
    if (doc.contains("normalization")) ds = Normalizer::from_json(doc.at("normalization")).apply(d.raw);
  } else {
    h = initial_hyperparams(cfg, ds);
  }
  const GPModel model = build_model(ds, h, resources(cfg, ds.size()));
  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "sparsity.json",
             {{"dataset_size", ds.size()},
              {"nnz", model.stats.nnz},
              {"empirical_s", model.stats.empirical_s},
              {"s_bound", sparsity_upper_bound(model.spec, training_domain(ds))},
              {"wall_time_s", model.stats.wall_time}});
}

}  // namespace sparsegp::cli
