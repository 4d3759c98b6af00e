#pragma once

// Command implementations behind the sparsegp executable.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegp/data_io.hpp"
#include "sparsegp/training.hpp"

namespace sparsegp::cli {

struct DataSource {
  std::filesystem::path path;
  CsvSchema schema;
  std::size_t subsample = 0;  ///< 0 keeps every row
  std::uint64_t subsample_seed = 0;
};

/// Optional overrides applied to the documented initial hyperparameters.
struct InitOverrides {
  std::optional<double> noise_variance;
  std::optional<double> signal_variance;
  std::optional<double> length_scale;
  std::optional<double> base_radius;
  std::optional<double> bump_radius;
  std::optional<double> bump_amplitude;
  std::optional<double> bump_shape;
  std::optional<std::vector<std::vector<double>>> bump_centers;  ///< i-major, normalized units
  std::optional<double> prior_mean;
};

struct RunConfig {
  std::optional<DataSource> data;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::uint64_t> synthetic_seed;  ///< falls back to `seed`
  std::size_t n1 = 2;
  std::size_t n2 = 4;
  CoreKind core = CoreKind::none;
  std::size_t batch_size = 1000;
  std::size_t workers = 1;
  std::size_t iterations = 160;
  double proposal_scale = 0.1;
  Objective objective = Objective::plain;
  double sparsity_requirement = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "sparsegp_out";
  bool export_covariance = false;
  std::size_t logdet_probes = 30;
  std::size_t logdet_terms = 50;
  double cg_tolerance = 1e-8;
  InitOverrides init;

  void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct LoadedData {
  Dataset raw;
  Dataset dataset;  ///< normalized to the unit box
  Normalizer normalizer;
  CsvSchema schema;
  IngestReport report;
};

LoadedData load_data(const RunConfig& cfg);
HyperparamVector initial_hyperparams(const RunConfig& cfg, const Dataset& ds);

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
};

/// Parses "min:max:count".
GridAxis parse_grid_axis(const std::string& text);
/// Cartesian product, last axis fastest.
std::vector<Point> grid_points(const std::vector<GridAxis>& axes);

void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg, const std::filesystem::path& hyperparams_path,
                 const std::vector<std::string>& grid, const std::filesystem::path& output);
void cmd_benchmark(const RunConfig& cfg, const std::vector<std::size_t>& worker_counts,
                   std::size_t repeats);
void cmd_sparsity(const RunConfig& cfg, const std::optional<std::filesystem::path>& hyperparams_path);

}  // namespace sparsegp::cli
