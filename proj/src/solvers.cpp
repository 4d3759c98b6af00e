#include "sparsegp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sparsegp/errors.hpp"

namespace sparsegp {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double true_residual(const SparseSymMatrix& a, std::span<const double> x, std::span<const double> b,
                     std::vector<double>& r) {
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm(r);
}

}  // namespace

CGResult cg_solve(const SparseSymMatrix& a, std::span<const double> b, const CGConfig& cfg) {
  const std::size_t n = a.order();
  if (b.size() != n) throw InvalidInput("cg_solve: rhs length mismatch");
  if (!(cfg.rel_tolerance > 0.0 && cfg.rel_tolerance < 1.0)) {
    throw InvalidInput("cg_solve: rel_tolerance must lie in (0, 1)");
  }
  const std::size_t max_iters = cfg.max_iters == 0 ? 10 * n : cfg.max_iters;

  CGResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (!std::isfinite(bnorm)) throw NumericalBreakdown("cg_solve: non-finite right-hand side");
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  std::vector<double> inv_diag(n, 1.0);
  if (cfg.preconditioner == Preconditioner::jacobi) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) throw NumericalBreakdown("cg_solve: non-positive diagonal entry");
      inv_diag[i] = 1.0 / d[i];
    }
  }

  const double target = cfg.rel_tolerance * bnorm;
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);

  auto& x = res.x;
  std::size_t it = 0;
  while (it < max_iters) {
    a.multiply(p, ap);
    const double curvature = dot(p, ap);
    if (std::isnan(curvature)) throw NumericalBreakdown("cg_solve: NaN encountered");
    if (!(curvature > 0.0)) throw NumericalBreakdown("cg_solve: non-positive curvature");
    const double step = rz / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    ++it;

    double rnorm = norm(r);
    if (std::isnan(rnorm)) throw NumericalBreakdown("cg_solve: NaN encountered");
    if (rnorm <= target) {
      // The recurred residual drifts; only stop once the true one agrees.
      rnorm = true_residual(a, x, b, r);
      if (rnorm <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      p = z;
      rz = dot(r, z);
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  res.iterations = it;
  res.residual = true_residual(a, x, b, r) / bnorm;
  res.converged = res.residual <= cfg.rel_tolerance;
  return res;
}

double power_iteration(const SparseSymMatrix& a, std::size_t iters, std::uint64_t seed,
                       bool* converged) {
  const std::size_t n = a.order();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  std::vector<double> v(n), w(n);
  for (auto& e : v) e = unif(rng);
  double vn = norm(v);
  for (auto& e : v) e /= vn;

  double estimate = 0.0, previous = 0.0;
  for (std::size_t k = 0; k < std::max<std::size_t>(iters, 1); ++k) {
    a.multiply(v, w);
    previous = estimate;
    estimate = dot(v, w);  // Rayleigh quotient, v normalized
    const double wn = norm(w);
    if (!(wn > 0.0) || !std::isfinite(wn)) break;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
  }
  if (converged != nullptr) {
    *converged = std::isfinite(estimate) && estimate > 0.0 &&
                 std::abs(estimate - previous) <= 1e-3 * std::abs(estimate);
  }
  return estimate;
}

LogDetResult logdet_rla(const SparseSymMatrix& a, const LogDetConfig& cfg) {
  if (cfg.probes < 1 || cfg.taylor_terms < 1) throw InvalidInput("logdet: probes and terms must be >= 1");
  if (cfg.exact_terms > 2) throw InvalidInput("logdet: exact_terms must be 0, 1 or 2");
  if (!(cfg.eig_margin > 1.0)) throw InvalidInput("logdet: eig_margin must exceed 1");
  const std::size_t n = a.order();
  LogDetResult res;
  if (n == 0) return res;

  for (double d : a.diagonal()) {
    if (!(d > 0.0)) throw NumericalBreakdown("logdet: non-positive diagonal, matrix is not positive definite");
  }
  bool converged = false;
  const double lambda = power_iteration(a, cfg.power_iters, cfg.seed, &converged);
  const double gershgorin = a.gershgorin_bound();
  if (!(lambda > 0.0)) throw NumericalBreakdown("logdet: non-positive eigenvalue estimate");
  double alpha = cfg.eig_margin * lambda;
  if (!converged || !(alpha > 0.0)) {
    res.power_converged = false;
    alpha = gershgorin;
  }
  // Gershgorin is a guaranteed bound and is exact for diagonal matrices.
  alpha = std::min(alpha, gershgorin);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw NumericalBreakdown("logdet: matrix is not positive definite");
  res.alpha = alpha;

  const std::size_t k = cfg.probes;
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> z(n * k), w(n * k), aw(n * k);
  for (std::size_t idx = 0; idx < n * k; idx += 64) {
    std::uint64_t bits = rng();
    for (std::size_t b = 0; b < 64 && idx + b < n * k; ++b) z[idx + b] = ((bits >> b) & 1U) ? 1.0 : -1.0;
  }
  w = z;
  std::vector<double> per_probe(k, 0.0);
  const double inv_alpha = 1.0 / alpha;
  double exact_part = 0.0;
  if (cfg.exact_terms >= 1) {
    double trace_c = 0.0;
    for (double d : a.diagonal()) trace_c += 1.0 - d * inv_alpha;
    exact_part -= trace_c;
  }
  if (cfg.exact_terms >= 2 && cfg.taylor_terms >= 2) {
    // tr(C^2) = ||C||_F^2 with C = I - A/alpha.
    const auto off = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bool has_diag = false;
      for (std::size_t p = off[i]; p < off[i + 1]; ++p) {
        double c = -vals[p] * inv_alpha;
        if (cols[p] == i) {
          c += 1.0;
          has_diag = true;
        }
        frob += c * c;
      }
      if (!has_diag) frob += 1.0;
    }
    exact_part -= 0.5 * frob;
  }
  const std::size_t skip = std::min(cfg.exact_terms, cfg.taylor_terms);
  for (std::size_t term = 1; term <= cfg.taylor_terms; ++term) {
    a.multiply_block(w, k, aw);
    for (std::size_t i = 0; i < n * k; ++i) w[i] -= aw[i] * inv_alpha;  // w <- C w
    if (term <= skip) continue;
    const double inv_term = 1.0 / static_cast<double>(term);
    for (std::size_t i = 0; i < n; ++i) {
      const double* zi = z.data() + i * k;
      const double* wi = w.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) per_probe[c] -= zi[c] * wi[c] * inv_term;
    }
  }

  double mean = 0.0;
  for (double s : per_probe) mean += s;
  mean /= static_cast<double>(k);
  double var = 0.0;
  if (k > 1) {
    for (double s : per_probe) var += (s - mean) * (s - mean);
    var /= static_cast<double>(k - 1);
  }
  res.estimate = static_cast<double>(n) * std::log(alpha) + exact_part + mean;
  res.std_error = std::sqrt(var / static_cast<double>(k));
  if (!std::isfinite(res.estimate)) throw NumericalBreakdown("logdet: non-finite estimate");
  return res;
}

}  // namespace sparsegp
