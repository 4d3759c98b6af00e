#pragma once

// Batched, parallel assembly of the sparse covariance matrix.
//
// The dataset is cut into contiguous batches; every batch pair (i, j) with
// i <= j is one task. Workers compute dense blocks, drop zeros, and hand
// coordinate entries to a single collector that owns the host matrix.

#include <cstddef>
#include <span>
#include <vector>

#include "sparsegp/kernel.hpp"
#include "sparsegp/sparse_matrix.hpp"

namespace sparsegp {

/// Entries with magnitude below this are dropped along with exact zeros.
inline constexpr double kDustThreshold = 1e-12;

struct Dataset {
  std::size_t dim = 0;
  std::vector<double> coords;  ///< row-major, size() * dim
  std::vector<double> y;
  /// Per-point noise variances; empty means a single trained noise hyperparameter.
  std::vector<double> noise;

  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> coords, std::vector<double> y,
          std::vector<double> noise = {});

  std::size_t size() const { return y.size(); }
  PointView point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  bool has_point_noise() const { return !noise.empty(); }
  DomainBox bounding_box() const;
  void validate() const;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct BlockTask {
  std::size_t i = 0;
  std::size_t j = 0;
};

struct BatchPlan {
  std::size_t batch_size = 0;
  std::vector<IndexRange> batches;

  std::size_t num_batches() const { return batches.size(); }
  std::size_t num_tasks() const { return batches.size() * (batches.size() + 1) / 2; }
  /// Upper-triangular task list in submission order.
  std::vector<BlockTask> tasks() const;
};

BatchPlan plan_batches(std::size_t n, std::size_t batch_size);

struct AssemblyStats {
  std::size_t nnz = 0;
  double empirical_s = 0.0;
  double wall_time = 0.0;
  std::size_t tasks_executed = 0;
  std::vector<double> per_block_times;
  std::size_t workers = 1;
};

/// Coordinate entries of one covariance block. Diagonal tasks emit only the upper triangle.
std::vector<Triplet> compute_block(const Dataset& ds, const BlockTask& task, const BatchPlan& plan,
                                   const CoreKernelSpec& core, const SparsityKernelSpec& spec);

struct AssemblyResult {
  SparseSymMatrix matrix;
  AssemblyStats stats;
};

/// Kernel part of the covariance (no noise on the diagonal), finalized.
/// The result does not depend on `workers` or task completion order.
AssemblyResult assemble_covariance(const Dataset& ds, const BatchPlan& plan,
                                   const CoreKernelSpec& core, const SparsityKernelSpec& spec,
                                   std::size_t workers);

/// Row-compressed rectangular matrix: rows are queries, columns data points.
struct CrossCovariance {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  double at(std::size_t r, std::size_t c) const;
};

CrossCovariance cross_covariance(const Dataset& ds, std::span<const Point> queries,
                                 const CoreKernelSpec& core, const SparsityKernelSpec& spec);

struct ScalingModelInput {
  double dataset_size = 0.0;
  double batch_size = 0.0;
  double workers = 0.0;
  double block_time = 0.0;
};

/// Predicted covariance compute time: exact = D/(2nb) (D/b + 1) t_b,
/// approximate = D^2 t_b / (2 n b^2).
double scaling_model_time(const ScalingModelInput& in, bool exact);

struct ScalingRow {
  std::size_t workers = 0;
  double wall_time = 0.0;
  double mean_block_time = 0.0;
  double model_time = 0.0;
};

/// After one untimed warm-up, assembles `repeats` times per worker count and keeps
/// the medians. The model column uses the mean block time of the first row as t_b.
std::vector<ScalingRow> run_scaling_benchmark(const Dataset& ds, const BatchPlan& plan,
                                              const CoreKernelSpec& core,
                                              const SparsityKernelSpec& spec,
                                              std::span<const std::size_t> worker_counts,
                                              std::size_t repeats = 1);

}  // namespace sparsegp
