#pragma once

// Compactly supported, non-stationary kernels and the analytic sparsity bound.
//
// All functions here are pure: they may be called from any number of threads.
// Support tests use strict inequalities on the exact floating-point distance,
// so the zero pattern of a Gram matrix is bit-reproducible.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sparsegp {

using Point = std::vector<double>;
using PointView = std::span<const double>;

struct DomainBox {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  double volume() const;
  double diameter() const;
  void validate() const;

  static DomainBox unit(std::size_t dim);
};

/// One bump a * exp(beta - beta / (1 - d^2/r^2)) supported on the open ball |x - center| < radius.
struct BumpParams {
  double amplitude = 1.0;
  double shape = 1.0;
  double radius = 1.0;
  Point center;

  void validate() const;
};

/// Sum over i of f_i(x1) f_i(x2), each f_i a sum of bumps, times the
/// compactly supported stationary kernel of radius `base_radius`.
struct SparsityKernelSpec {
  std::vector<std::vector<BumpParams>> sums;
  double base_radius = 1.0;

  std::size_t num_sums() const { return sums.size(); }
  std::size_t bumps_per_sum() const { return sums.empty() ? 0 : sums.front().size(); }
  std::size_t dim() const;
  void validate() const;
};

/// Kronecker-delta weighting: each anchor point carries weights for two functions f and g.
struct DeltaKernelSpec {
  std::vector<Point> anchor_points;
  std::vector<double> hf;
  std::vector<double> hg;

  void validate() const;
};

enum class CoreKind { none, squared_exponential };

struct CoreKernelSpec {
  CoreKind kind = CoreKind::none;
  double signal_variance = 1.0;
  double length_scale = 1.0;

  void validate() const;
};

const char* to_string(CoreKind kind);
CoreKind core_kind_from_string(const std::string& name);

double squared_distance(PointView x1, PointView x2);
double distance(PointView x1, PointView x2);

double bump_eval(const BumpParams& p, PointView x);
double bump_sum_eval(std::span<const BumpParams> f, PointView x);

/// Stationary kernel with compact support of radius r, as a function of the distance.
double compact_stationary_of_distance(double r, double d);
double compact_stationary_eval(double r, PointView x1, PointView x2);

/// f_i(x) for every i: the per-point feature vector that the product structure factorizes over.
void bump_features(const SparsityKernelSpec& spec, PointView x, std::span<double> out);

/// Kernel value from a precomputed stationary factor and feature vectors.
/// sparsity_kernel_eval and block assembly both go through this so they agree bit-for-bit.
inline double combine_features(double stationary, std::span<const double> f1,
                               std::span<const double> f2) {
  if (stationary == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) acc += f1[i] * f2[i];
  return stationary * acc;
}

double sparsity_kernel_eval(const SparsityKernelSpec& spec, PointView x1, PointView x2);
double delta_kernel_eval(const DeltaKernelSpec& spec, double r, PointView x1, PointView x2);
double core_kernel_eval(const CoreKernelSpec& core, PointView x1, PointView x2);
double composed_kernel_eval(const CoreKernelSpec& core, const SparsityKernelSpec& spec,
                            PointView x1, PointView x2);

double sphere_volume(int dim, double r);

/// Upper bound on the fraction of non-zero covariances for uniformly distributed data,
/// assuming disjoint bump supports. Not clamped; may exceed 1.
double sparsity_upper_bound(const SparsityKernelSpec& spec, const DomainBox& domain);

}  // namespace sparsegp
