#include "sparsegp/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "sparsegp/errors.hpp"

namespace sparsegp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Bump features f_i(x) for a contiguous range of points, row-major.
std::vector<double> features_for(const Dataset& ds, IndexRange range, const SparsityKernelSpec& spec) {
  const std::size_t n1 = spec.num_sums();
  std::vector<double> out(range.size() * n1);
  for (std::size_t p = 0; p < range.size(); ++p) {
    bump_features(spec, ds.point(range.begin + p), std::span<double>(out.data() + p * n1, n1));
  }
  return out;
}

bool all_zero(std::span<const double> f) {
  return std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; });
}

/// Same arithmetic as composed_kernel_eval, with features supplied by the caller.
double composed_from_features(const CoreKernelSpec& core, const SparsityKernelSpec& spec,
                              PointView x1, PointView x2, std::span<const double> f1,
                              std::span<const double> f2) {
  const double stationary = compact_stationary_eval(spec.base_radius, x1, x2);
  const double ks = combine_features(stationary, f1, f2);
  if (ks == 0.0 || core.kind == CoreKind::none) return ks;
  return core_kernel_eval(core, x1, x2) * ks;
}

bool keep(double v) { return v != 0.0 && std::abs(v) >= kDustThreshold; }

}  // namespace

Dataset::Dataset(std::size_t dim_, std::vector<double> coords_, std::vector<double> y_,
                 std::vector<double> noise_)
    : dim(dim_), coords(std::move(coords_)), y(std::move(y_)), noise(std::move(noise_)) {
  validate();
}

DomainBox Dataset::bounding_box() const {
  DomainBox box{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (std::size_t k = 0; k < dim; ++k) {
    double lo = coords[k], hi = coords[k];
    for (std::size_t i = 1; i < size(); ++i) {
      lo = std::min(lo, coords[i * dim + k]);
      hi = std::max(hi, coords[i * dim + k]);
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    box.lower[k] = lo;
    box.upper[k] = hi;
  }
  return box;
}

void Dataset::validate() const {
  if (dim < 1) throw InvalidInput("dataset: dim must be >= 1");
  if (y.empty()) throw InvalidInput("dataset: needs at least one point");
  if (coords.size() != y.size() * dim) throw InvalidInput("dataset: coordinate count mismatch");
  for (double c : coords)
    if (!std::isfinite(c)) throw InvalidInput("dataset: non-finite coordinate");
  for (double v : y)
    if (!std::isfinite(v)) throw InvalidInput("dataset: non-finite observation");
  if (!noise.empty()) {
    if (noise.size() != y.size()) throw InvalidInput("dataset: noise length mismatch");
    for (double v : noise)
      if (!(v > 0.0)) throw InvalidInput("dataset: noise variances must be > 0");
  }
}

std::vector<BlockTask> BatchPlan::tasks() const {
  std::vector<BlockTask> out;
  out.reserve(num_tasks());
  for (std::size_t i = 0; i < batches.size(); ++i)
    for (std::size_t j = i; j < batches.size(); ++j) out.push_back({i, j});
  return out;
}

BatchPlan plan_batches(std::size_t n, std::size_t batch_size) {
  if (n < 1) throw InvalidInput("plan_batches: dataset is empty");
  if (batch_size < 1 || batch_size > n) {
    throw InvalidInput("plan_batches: batch size must lie in [1, " + std::to_string(n) + "]");
  }
  BatchPlan plan;
  plan.batch_size = batch_size;
  for (std::size_t start = 0; start < n; start += batch_size) {
    plan.batches.push_back({start, std::min(n, start + batch_size)});
  }
  return plan;
}

std::vector<Triplet> compute_block(const Dataset& ds, const BlockTask& task, const BatchPlan& plan,
                                   const CoreKernelSpec& core, const SparsityKernelSpec& spec) {
  if (task.i > task.j || task.j >= plan.num_batches()) throw InvalidInput("compute_block: invalid task");
  if (spec.dim() != ds.dim) throw InvalidInput("compute_block: kernel and dataset dimensions differ");
  const IndexRange rows = plan.batches[task.i];
  const IndexRange cols = plan.batches[task.j];
  if (cols.end > ds.size()) throw InvalidInput("compute_block: plan does not match dataset");
  const std::size_t n1 = spec.num_sums();
  const auto frow = features_for(ds, rows, spec);
  const auto fcol = task.i == task.j ? frow : features_for(ds, cols, spec);
  const bool diagonal = task.i == task.j;

  std::vector<Triplet> out;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const std::span<const double> f1(frow.data() + p * n1, n1);
    if (all_zero(f1)) continue;
    const PointView x1 = ds.point(rows.begin + p);
    for (std::size_t q = diagonal ? p : 0; q < cols.size(); ++q) {
      const std::span<const double> f2(fcol.data() + q * n1, n1);
      if (all_zero(f2)) continue;
      const double v = composed_from_features(core, spec, x1, ds.point(cols.begin + q), f1, f2);
      if (keep(v)) {
        out.push_back({static_cast<std::uint32_t>(rows.begin + p),
                       static_cast<std::uint32_t>(cols.begin + q), v});
      }
    }
  }
  return out;
}

AssemblyResult assemble_covariance(const Dataset& ds, const BatchPlan& plan,
                                   const CoreKernelSpec& core, const SparsityKernelSpec& spec,
                                   std::size_t workers) {
  if (workers < 1) throw InvalidInput("assemble_covariance: workers must be >= 1");
  spec.validate();
  core.validate();
  if (plan.batches.empty() || plan.batches.back().end != ds.size()) {
    throw InvalidInput("assemble_covariance: plan does not cover the dataset");
  }
  const auto start = Clock::now();
  const auto tasks = plan.tasks();

  struct Delivery {
    std::size_t task;
    std::vector<Triplet> entries;
    double seconds;
  };
  std::mutex mu;
  std::condition_variable ready;
  std::deque<Delivery> inbox;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::size_t finished_workers = 0;

  auto work = [&] {
    try {
      for (std::size_t t = next++; t < tasks.size() && !abort; t = next++) {
        const auto t0 = Clock::now();
        auto entries = compute_block(ds, tasks[t], plan, core, spec);
        const double secs = seconds_since(t0);
        std::lock_guard lock(mu);
        inbox.push_back({t, std::move(entries), secs});
        ready.notify_one();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      abort = true;
    }
    std::lock_guard lock(mu);
    ++finished_workers;
    ready.notify_one();
  };

  const std::size_t pool = std::min(workers, tasks.size());
  std::vector<std::jthread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(work);

  AssemblyResult result{SparseSymMatrix(ds.size()), {}};
  result.stats.per_block_times.assign(tasks.size(), 0.0);
  result.stats.workers = workers;
  // Single collector: the only writer of the host matrix.
  for (;;) {
    std::unique_lock lock(mu);
    ready.wait(lock, [&] { return !inbox.empty() || finished_workers == pool; });
    if (inbox.empty()) break;
    Delivery d = std::move(inbox.front());
    inbox.pop_front();
    lock.unlock();
    if (abort) continue;
    result.matrix.insert(d.entries);
    result.stats.per_block_times[d.task] = d.seconds;
    ++result.stats.tasks_executed;
  }
  threads.clear();
  if (failure) std::rethrow_exception(failure);

  result.matrix.finalize();
  const double n = static_cast<double>(ds.size());
  result.stats.nnz = result.matrix.nnz();
  result.stats.empirical_s = static_cast<double>(result.stats.nnz) / (n * n);
  result.stats.wall_time = seconds_since(start);
  return result;
}

double CrossCovariance::at(std::size_t r, std::size_t c) const {
  const auto idx = row_indices(r);
  const auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(c));
  if (it == idx.end() || *it != c) return 0.0;
  return values[offsets[r] + static_cast<std::size_t>(it - idx.begin())];
}

CrossCovariance cross_covariance(const Dataset& ds, std::span<const Point> queries,
                                 const CoreKernelSpec& core, const SparsityKernelSpec& spec) {
  spec.validate();
  if (spec.dim() != ds.dim) throw InvalidInput("cross_covariance: kernel and dataset dimensions differ");
  const std::size_t n1 = spec.num_sums();
  const auto fdata = features_for(ds, {0, ds.size()}, spec);
  std::vector<double> fq(n1);

  CrossCovariance out;
  out.rows = queries.size();
  out.cols = ds.size();
  out.offsets.assign(1, 0);
  for (const Point& q : queries) {
    if (q.size() != ds.dim) throw InvalidInput("cross_covariance: query dimension mismatch");
    bump_features(spec, q, fq);
    if (!all_zero(fq)) {
      for (std::size_t p = 0; p < ds.size(); ++p) {
        const std::span<const double> fp(fdata.data() + p * n1, n1);
        if (all_zero(fp)) continue;
        const double v = composed_from_features(core, spec, q, ds.point(p), fq, fp);
        if (keep(v)) {
          out.indices.push_back(static_cast<std::uint32_t>(p));
          out.values.push_back(v);
        }
      }
    }
    out.offsets.push_back(out.indices.size());
  }
  return out;
}

double scaling_model_time(const ScalingModelInput& in, bool exact) {
  if (!(in.dataset_size > 0 && in.batch_size > 0 && in.workers > 0 && in.block_time > 0)) {
    throw InvalidInput("scaling model: all inputs must be positive");
  }
  const double d = in.dataset_size, b = in.batch_size, n = in.workers, tb = in.block_time;
  if (exact) return d / (2.0 * n * b) * (d / b + 1.0) * tb;
  return d * d * tb / (2.0 * n * b * b);
}

std::vector<ScalingRow> run_scaling_benchmark(const Dataset& ds, const BatchPlan& plan,
                                              const CoreKernelSpec& core,
                                              const SparsityKernelSpec& spec,
                                              std::span<const std::size_t> worker_counts,
                                              std::size_t repeats) {
  if (worker_counts.empty()) throw InvalidInput("benchmark: worker_counts must be nonempty");
  repeats = std::max<std::size_t>(repeats, 1);
  // Untimed warm-up so the first measured row does not pay for page faults and allocator growth.
  (void)assemble_covariance(ds, plan, core, spec, worker_counts.front());
  std::vector<ScalingRow> rows;
  double reference_block_time = 0.0;
  for (std::size_t workers : worker_counts) {
    std::vector<double> walls, blocks;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto res = assemble_covariance(ds, plan, core, spec, workers);
      walls.push_back(res.stats.wall_time);
      double sum = 0.0;
      for (double t : res.stats.per_block_times) sum += t;
      blocks.push_back(sum / static_cast<double>(res.stats.per_block_times.size()));
    }
    std::sort(walls.begin(), walls.end());
    std::sort(blocks.begin(), blocks.end());
    ScalingRow row;
    row.workers = workers;
    row.wall_time = walls[walls.size() / 2];
    row.mean_block_time = blocks[blocks.size() / 2];
    if (rows.empty()) reference_block_time = row.mean_block_time;
    row.model_time = scaling_model_time({static_cast<double>(ds.size()),
                                         static_cast<double>(plan.batch_size),
                                         static_cast<double>(workers),
                                         std::max(reference_block_time, 1e-12)},
                                        true);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sparsegp
