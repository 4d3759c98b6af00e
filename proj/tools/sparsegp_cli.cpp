// sparsegp: train and apply exact sparse Gaussian processes from the command line.
//
//   sparsegp generate  --config run.json
//   sparsegp train     --config run.json [--iterations N --objective constrained ...]
//   sparsegp predict   --config run.json --hyperparams out/hyperparameters.json --grid 0:1:20 --grid 0:1:20
//   sparsegp benchmark --config run.json --worker-counts 1,2,4
//   sparsegp sparsity  --config run.json [--hyperparams FILE]
//
// Exit status: 0 on success, 1 on runtime failure, 2 on invalid input,
// 3 on a violated sparsity constraint. Failures write error.txt to the output directory.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "commands.hpp"
#include "sparsegp/errors.hpp"

namespace fs = std::filesystem;
using namespace sparsegp;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> iterations;
  std::optional<std::string> objective;
  std::optional<double> sparsity_requirement;
  std::optional<std::string> output_dir;
  bool export_covariance = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "random seed (MCMC, log-det probes, synthetic data)");
    app.add_option("--workers", workers, "assembly worker threads")->check(CLI::PositiveNumber);
    app.add_option("--batch-size", batch_size, "points per assembly batch")->check(CLI::PositiveNumber);
    app.add_option("--iterations", iterations, "MCMC iterations")->check(CLI::PositiveNumber);
    app.add_option("--objective", objective, "plain | augmented | constrained")
        ->check(CLI::IsMember({"plain", "augmented", "constrained"}));
    app.add_option("--sparsity-requirement", sparsity_requirement, "upper limit on s for constrained mode");
    app.add_option("--output-dir", output_dir, "directory for all artifacts");
    app.add_flag("--export-covariance", export_covariance, "write K + V as Matrix Market");
  }

  void apply(cli::RunConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (batch_size) cfg.batch_size = *batch_size;
    if (iterations) cfg.iterations = *iterations;
    if (objective) cfg.objective = objective_from_string(*objective);
    if (sparsity_requirement) cfg.sparsity_requirement = *sparsity_requirement;
    if (output_dir) cfg.output_dir = *output_dir;
    if (export_covariance) cfg.export_covariance = true;
  }
};

void write_error(const fs::path& dir, const std::string& message) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.txt");
  out << message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Gaussian process regression with sparsity-discovering kernels"};
  app.require_subcommand(1);

  Overrides ov;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset to <output-dir>/data.csv");
  auto* train = app.add_subcommand("train", "MCMC hyperparameter training");
  auto* predict = app.add_subcommand("predict", "posterior mean and variance over a grid");
  auto* benchmark = app.add_subcommand("benchmark", "covariance assembly scaling measurements");
  auto* sparsity = app.add_subcommand("sparsity", "sparsity report for one hyperparameter state");
  for (auto* sub : {generate, train, predict, benchmark, sparsity}) ov.add_to(*sub);

  std::string hyperparams;
  std::vector<std::string> grid;
  std::string predictions;
  predict->add_option("--hyperparams", hyperparams, "trained hyperparameters.json")->required();
  predict->add_option("--grid", grid, "per-dimension min:max:count in raw units")->required();
  predict->add_option("--output", predictions, "CSV path (default <output-dir>/predictions.csv)");

  std::vector<std::size_t> worker_counts{1};
  std::size_t repeats = 1;
  benchmark->add_option("--worker-counts", worker_counts, "comma separated worker counts")->delimiter(',');
  benchmark->add_option("--repeats", repeats, "median over this many runs per count");

  std::optional<std::string> sparsity_hyperparams;
  sparsity->add_option("--hyperparams", sparsity_hyperparams, "hyperparameters.json (default: initial state)");

  CLI11_PARSE(app, argc, argv);

  fs::path out_dir = ov.output_dir ? fs::path(*ov.output_dir) : fs::path("sparsegp_out");
  try {
    cli::RunConfig cfg = cli::load_config(ov.config);
    ov.apply(cfg);
    out_dir = cfg.output_dir;
    cfg.validate();

    if (generate->parsed()) {
      cli::cmd_generate(cfg);
    } else if (train->parsed()) {
      cli::cmd_train(cfg);
    } else if (predict->parsed()) {
      const fs::path target = predictions.empty() ? cfg.output_dir / "predictions.csv" : fs::path(predictions);
      cli::cmd_predict(cfg, hyperparams, grid, target);
    } else if (benchmark->parsed()) {
      cli::cmd_benchmark(cfg, worker_counts, repeats);
    } else if (sparsity->parsed()) {
      cli::cmd_sparsity(cfg, sparsity_hyperparams ? std::optional<fs::path>(*sparsity_hyperparams) : std::nullopt);
    }
    std::error_code ec;
    fs::remove(cfg.output_dir / "error.txt", ec);
    return 0;
  } catch (const ConstraintViolation& e) {
    std::cerr << "constraint violation: " << e.what() << '\n';
    write_error(out_dir, std::string("constraint violation: ") + e.what());
    return 3;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    write_error(out_dir, std::string("invalid input: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_error(out_dir, std::string("error: ") + e.what());
    return 1;
  }
}
