#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsegp/sparse_matrix.hpp"

namespace sparsegp {

enum class Preconditioner { none, jacobi };

struct CGConfig {
  double rel_tolerance = 1e-8;
  std::size_t max_iters = 0;  ///< 0 means 10 * n
  Preconditioner preconditioner = Preconditioner::jacobi;
};

struct CGResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double residual = 0.0;  ///< ||A x - b|| / ||b|| recomputed from x
  bool converged = false;
};

/// Conjugate gradients for symmetric positive definite A.
/// Non-convergence is reported through `converged`; NaN or non-positive
/// curvature throws NumericalBreakdown.
CGResult cg_solve(const SparseSymMatrix& a, std::span<const double> b, const CGConfig& cfg = {});

struct LogDetConfig {
  std::size_t probes = 30;
  std::size_t taylor_terms = 50;
  /// Leading series terms computed exactly instead of by probing (0, 1 or 2):
  /// tr(C) from the diagonal, tr(C^2) from the Frobenius norm.
  std::size_t exact_terms = 2;
  double eig_margin = 1.05;
  std::size_t power_iters = 20;
  std::uint64_t seed = 0;
};

struct LogDetResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double alpha = 0.0;             ///< eigenvalue upper bound used for scaling
  bool power_converged = true;    ///< false: fell back to the Gershgorin bound
};

/// Randomized log-determinant of an SPD matrix.
///
/// With alpha >= lambda_max and C = I - A / alpha,
///   log|A| = n log(alpha) + tr log(I - C) = n log(alpha) - sum_k tr(C^k) / k,
/// the series truncated at `taylor_terms` and each trace estimated with
/// Rademacher probes. Bit-identical for a fixed seed.
LogDetResult logdet_rla(const SparseSymMatrix& a, const LogDetConfig& cfg = {});

/// Power-iteration estimate of the largest eigenvalue.
double power_iteration(const SparseSymMatrix& a, std::size_t iters, std::uint64_t seed,
                       bool* converged = nullptr);

}  // namespace sparsegp
