#include "sparsegp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sparsegp/errors.hpp"

namespace sparsegp {

namespace {

// sqrt(2) / (3 sqrt(pi)): value of the stationary kernel at zero distance.
const double kStationaryNorm = std::numbers::sqrt2 / (3.0 * std::sqrt(std::numbers::pi));

void check_dims(PointView a, PointView b) {
  if (a.size() != b.size()) {
    throw InvalidInput("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()));
  }
}

}  // namespace

double DomainBox::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
  return v;
}

double DomainBox::diameter() const {
  double d2 = 0.0;
  for (std::size_t k = 0; k < lower.size(); ++k) {
    const double w = upper[k] - lower[k];
    d2 += w * w;
  }
  return std::sqrt(d2);
}

void DomainBox::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw InvalidInput("domain box: bad dimensions");
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(upper[k] > lower[k])) throw InvalidInput("domain box: upper must exceed lower");
  }
}

DomainBox DomainBox::unit(std::size_t dim) {
  return DomainBox{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

void BumpParams::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw InvalidInput("bump amplitude must be >= 0");
  if (!(shape > 0.0) || !std::isfinite(shape)) throw InvalidInput("bump shape must be > 0");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("bump radius must be > 0");
  if (center.empty()) throw InvalidInput("bump center must have dim >= 1");
}

std::size_t SparsityKernelSpec::dim() const {
  if (sums.empty() || sums.front().empty()) return 0;
  return sums.front().front().center.size();
}

void SparsityKernelSpec::validate() const {
  if (sums.empty()) throw InvalidInput("sparsity kernel needs at least one bump sum");
  if (!(base_radius > 0.0)) throw InvalidInput("base radius must be > 0");
  const std::size_t n2 = sums.front().size();
  const std::size_t d = dim();
  for (const auto& f : sums) {
    if (f.empty() || f.size() != n2) throw InvalidInput("every bump sum needs the same number (>= 1) of bumps");
    for (const auto& b : f) {
      b.validate();
      if (b.center.size() != d) throw InvalidInput("bump centers must share one dimension");
    }
  }
}

void DeltaKernelSpec::validate() const {
  if (hf.size() != anchor_points.size() || hg.size() != anchor_points.size()) {
    throw InvalidInput("delta kernel: weights must match anchor count");
  }
  for (std::size_t i = 0; i < hf.size(); ++i) {
    if (!(hf[i] >= 0.0) || !(hg[i] >= 0.0)) throw InvalidInput("delta kernel: weights must be >= 0");
  }
}

void CoreKernelSpec::validate() const {
  if (kind == CoreKind::none) return;
  if (!(signal_variance > 0.0)) throw InvalidInput("signal variance must be > 0");
  if (!(length_scale > 0.0)) throw InvalidInput("length scale must be > 0");
}

const char* to_string(CoreKind kind) {
  switch (kind) {
    case CoreKind::none: return "none";
    case CoreKind::squared_exponential: return "squared_exponential";
  }
  return "none";
}

CoreKind core_kind_from_string(const std::string& name) {
  if (name == "none") return CoreKind::none;
  if (name == "squared_exponential" || name == "se") return CoreKind::squared_exponential;
  throw InvalidInput("unknown core kernel kind: " + name);
}

double squared_distance(PointView x1, PointView x2) {
  check_dims(x1, x2);
  double d2 = 0.0;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    const double t = x1[k] - x2[k];
    d2 += t * t;
  }
  return d2;
}

double distance(PointView x1, PointView x2) { return std::sqrt(squared_distance(x1, x2)); }

double bump_eval(const BumpParams& p, PointView x) {
  const double d2 = squared_distance(x, p.center);
  if (!(std::sqrt(d2) < p.radius)) return 0.0;
  const double q = 1.0 - d2 / (p.radius * p.radius);
  if (q <= 0.0) return 0.0;
  return p.amplitude * std::exp(-p.shape / q + p.shape);
}

double bump_sum_eval(std::span<const BumpParams> f, PointView x) {
  double s = 0.0;
  for (const auto& b : f) s += bump_eval(b, x);
  return s;
}

double compact_stationary_of_distance(double r, double d) {
  if (!(d < r)) return 0.0;
  const double u = d / r;
  if (u == 0.0) return kStationaryNorm;
  const double u2 = u * u;
  const double root = std::sqrt(1.0 - u2);
  const double value = 3.0 * u2 * std::log(u / (1.0 + root)) + (2.0 * u2 + 1.0) * root;
  // Cancellation near u -> 1 can leave a tiny negative residue.
  return value > 0.0 ? kStationaryNorm * value : 0.0;
}

double compact_stationary_eval(double r, PointView x1, PointView x2) {
  if (!(r > 0.0)) throw InvalidInput("stationary kernel radius must be > 0");
  return compact_stationary_of_distance(r, distance(x1, x2));
}

void bump_features(const SparsityKernelSpec& spec, PointView x, std::span<double> out) {
  for (std::size_t i = 0; i < spec.sums.size(); ++i) out[i] = bump_sum_eval(spec.sums[i], x);
}

double sparsity_kernel_eval(const SparsityKernelSpec& spec, PointView x1, PointView x2) {
  check_dims(x1, x2);
  const double stationary = compact_stationary_eval(spec.base_radius, x1, x2);
  if (stationary == 0.0) return 0.0;
  std::vector<double> f1(spec.sums.size()), f2(spec.sums.size());
  bump_features(spec, x1, f1);
  bump_features(spec, x2, f2);
  return combine_features(stationary, f1, f2);
}

double delta_kernel_eval(const DeltaKernelSpec& spec, double r, PointView x1, PointView x2) {
  check_dims(x1, x2);
  auto weights = [&](PointView x, double& f, double& g) {
    f = 0.0;
    g = 0.0;
    for (std::size_t i = 0; i < spec.anchor_points.size(); ++i) {
      const Point& a = spec.anchor_points[i];
      if (a.size() == x.size() && std::equal(a.begin(), a.end(), x.begin())) {
        f += spec.hf[i];
        g += spec.hg[i];
      }
    }
  };
  double f1, g1, f2, g2;
  weights(x1, f1, g1);
  weights(x2, f2, g2);
  const double mix = f1 * f2 + g1 * g2;
  if (mix == 0.0) return 0.0;
  return compact_stationary_eval(r, x1, x2) * mix;
}

double core_kernel_eval(const CoreKernelSpec& core, PointView x1, PointView x2) {
  switch (core.kind) {
    case CoreKind::none: return 1.0;
    case CoreKind::squared_exponential: {
      const double d2 = squared_distance(x1, x2);
      return core.signal_variance *
             std::exp(-0.5 * d2 / (core.length_scale * core.length_scale));
    }
  }
  return 1.0;
}

double composed_kernel_eval(const CoreKernelSpec& core, const SparsityKernelSpec& spec,
                            PointView x1, PointView x2) {
  const double ks = sparsity_kernel_eval(spec, x1, x2);
  if (ks == 0.0 || core.kind == CoreKind::none) return ks;
  return core_kernel_eval(core, x1, x2) * ks;
}

double sphere_volume(int dim, double r) {
  if (dim < 1) throw InvalidInput("sphere volume: dim must be >= 1");
  if (!(r > 0.0)) throw InvalidInput("sphere volume: radius must be > 0");
  const double half = 0.5 * dim;
  return std::pow(std::numbers::pi, half) * std::pow(r, dim) / std::tgamma(half + 1.0);
}

double sparsity_upper_bound(const SparsityKernelSpec& spec, const DomainBox& domain) {
  domain.validate();
  const int dim = static_cast<int>(domain.dim());
  double numerator = 0.0;
  for (const auto& f : spec.sums) {
    // sum_j sum_k V_j V_k == (sum_j V_j)^2
    double row = 0.0;
    for (const auto& b : f) row += sphere_volume(dim, b.radius);
    numerator += row * row;
  }
  const double vol = domain.volume();
  return numerator / (vol * vol);
}

}  // namespace sparsegp
