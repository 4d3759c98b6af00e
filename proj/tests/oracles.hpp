#pragma once

// Dense reference computations used as independent oracles in tests.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "sparsegp/assembly.hpp"
#include "sparsegp/kernel.hpp"
#include "sparsegp/sparse_matrix.hpp"

namespace oracle {

using sparsegp::Point;

inline Eigen::MatrixXd dense(const sparsegp::SparseSymMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.order(), a.order());
  const auto off = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t p = off[i]; p < off[i + 1]; ++p) m(i, cols[p]) = vals[p];
  return m;
}

inline sparsegp::SparseSymMatrix from_dense(const Eigen::MatrixXd& m) {
  sparsegp::SparseSymMatrix a(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j)
      if (m(i, j) != 0.0) a.insert(i, j, m(i, j));
  a.finalize();
  return a;
}

/// Brute-force double loop over composed_kernel_eval, dust entries zeroed.
inline Eigen::MatrixXd gram(const sparsegp::Dataset& ds, const sparsegp::CoreKernelSpec& core,
                            const sparsegp::SparsityKernelSpec& spec) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = sparsegp::composed_kernel_eval(core, spec, ds.point(i), ds.point(j));
      k(i, j) = std::abs(v) < sparsegp::kDustThreshold ? 0.0 : v;
    }
  }
  return k;
}

inline double logdet(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  const Eigen::MatrixXd l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
}

/// Random sparse symmetric, strictly diagonally dominant matrix.
inline Eigen::MatrixXd random_sparse_spd(std::size_t n, double density, std::uint64_t seed,
                                         double min_margin = 0.2, double max_margin = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0),
      margin(min_margin, max_margin);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (unit(rng) < density) a(i, j) = a(j, i) = sym(rng);
  for (Eigen::Index i = 0; i < m; ++i) a(i, i) = a.row(i).cwiseAbs().sum() + margin(rng);
  return a;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& e : v) e = normal(rng);
  return v;
}

inline sparsegp::Dataset uniform_dataset(std::size_t n, std::size_t dim, std::uint64_t seed,
                                         double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords(n * dim), y(n);
  for (auto& c : coords) c = u(rng);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(6.0 * coords[i * dim]) + 0.1 * normal(rng);
  return sparsegp::Dataset(dim, std::move(coords), std::move(y));
}

/// Random valid sparsity kernel over [0,1]^dim.
inline sparsegp::SparsityKernelSpec random_spec(std::size_t dim, std::size_t n1, std::size_t n2,
                                                std::uint64_t seed, double rmin = 0.1,
                                                double rmax = 0.4, double base_radius = -1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  sparsegp::SparsityKernelSpec spec;
  spec.base_radius = base_radius > 0 ? base_radius : 0.2 + 0.6 * u(rng);
  spec.sums.resize(n1);
  for (auto& f : spec.sums) {
    for (std::size_t j = 0; j < n2; ++j) {
      sparsegp::BumpParams b;
      b.amplitude = 0.5 + u(rng);
      b.shape = 0.2 + 2.0 * u(rng);
      b.radius = rmin + (rmax - rmin) * u(rng);
      b.center.resize(dim);
      for (auto& c : b.center) c = u(rng);
      f.push_back(b);
    }
  }
  return spec;
}

/// Dense Eq.-4-style posterior: mean and variance per query.
struct DensePosterior {
  std::vector<double> mean, variance;
};

inline DensePosterior posterior(const sparsegp::Dataset& ds, const sparsegp::CoreKernelSpec& core,
                                const sparsegp::SparsityKernelSpec& spec, double noise, double m0,
                                const std::vector<Point>& queries) {
  const Eigen::MatrixXd k = gram(ds, core, spec);
  const auto n = k.rows();
  Eigen::MatrixXd a = k;
  for (Eigen::Index i = 0; i < n; ++i)
    a(i, i) += ds.has_point_noise() ? ds.noise[static_cast<std::size_t>(i)] : noise;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = ds.y[static_cast<std::size_t>(i)] - m0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd w = ldlt.solve(r);
  DensePosterior out;
  for (const auto& q : queries) {
    Eigen::VectorXd kappa(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = sparsegp::composed_kernel_eval(core, spec, q, ds.point(i));
      kappa(i) = std::abs(v) < sparsegp::kDustThreshold ? 0.0 : v;
    }
    out.mean.push_back(m0 + kappa.dot(w));
    out.variance.push_back(sparsegp::composed_kernel_eval(core, spec, q, q) -
                           kappa.dot(ldlt.solve(kappa)));
  }
  return out;
}

/// Dense marginal log-likelihood without the constant term.
inline double log_likelihood(const sparsegp::Dataset& ds, const sparsegp::CoreKernelSpec& core,
                             const sparsegp::SparsityKernelSpec& spec, double noise, double m0) {
  Eigen::MatrixXd a = gram(ds, core, spec);
  const auto n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    a(i, i) += ds.has_point_noise() ? ds.noise[static_cast<std::size_t>(i)] : noise;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = ds.y[static_cast<std::size_t>(i)] - m0;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return -0.5 * r.dot(llt.solve(r)) - 0.5 * logdet(a);
}

}  // namespace oracle
