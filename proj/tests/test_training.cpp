#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sparsegp/data_io.hpp"
#include "sparsegp/errors.hpp"
#include "sparsegp/training.hpp"

using namespace sparsegp;

namespace {

LikelihoodConfig exact_logdet() {
  LikelihoodConfig cfg;
  cfg.cg.rel_tolerance = 1e-12;
  cfg.logdet_override = [](const SparseSymMatrix& a) { return oracle::logdet(oracle::dense(a)); };
  return cfg;
}

/// 1D dataset with two well separated clusters, normalized to [0, 1].
Dataset two_cluster_1d(std::size_t per_cluster, std::uint64_t seed) {
  const auto raw = generate_synthetic(two_cluster_spec(1, per_cluster, 1.0, 20.0), seed);
  return Normalizer::fit(raw).apply(raw);
}

HyperparamVector feasible_init(const Dataset& ds) {
  SparsityKernelSpec spec;
  spec.base_radius = 0.2;
  spec.sums = {{BumpParams{1.0, 1.0, 0.12, {0.05}}}, {BumpParams{1.0, 1.0, 0.12, {0.95}}}};
  double mean = 0.0;
  for (double v : ds.y) mean += v;
  return HyperparamVector::from_specs(spec, {}, 0.05, mean / static_cast<double>(ds.size()));
}

}  // namespace

TEST_CASE("hyperparameter layout") {
  HyperLayout l{2, 2, 4, CoreKind::none};
  CHECK(l.size() == 3 + 8 * 5);
  HyperLayout se{3, 2, 4, CoreKind::squared_exponential};
  CHECK(se.size() == 5 + 8 * 6);

  const auto ds = oracle::uniform_dataset(30, 2, 1);
  const auto h = HyperparamVector::initial(ds, {2, 2, 2, CoreKind::squared_exponential});
  const auto names = h.names();
  REQUIRE(names.size() == h.size());
  CHECK(names.front() == "noise_variance");
  CHECK(names[3] == "base_radius");
  CHECK(names[4] == "a[0][0]");
  CHECK(names.back() == "prior_mean");
  CHECK(h.role(0) == ParamRole::positive);
  CHECK(h.role(4 + 3) == ParamRole::location);
  CHECK(h.location_axis(4 + 4) == 1);
  CHECK(h.role(h.size() - 1) == ParamRole::mean);

  const DomainBox box = ds.bounding_box();
  const auto spec = h.sparsity_spec();
  CHECK(spec.base_radius == doctest::Approx(0.5 * box.diameter()));
  for (const auto& f : spec.sums) {
    for (const auto& b : f) {
      CHECK(b.amplitude == 1.0);
      CHECK(b.shape == 1.0);
      CHECK(b.radius == doctest::Approx(box.diameter() / 2.0));
      for (std::size_t k = 0; k < 2; ++k) {
        CHECK(b.center[k] > box.lower[k]);
        CHECK(b.center[k] < box.upper[k]);
      }
    }
  }
  // Round trip through the packed form.
  CHECK(HyperparamVector::from_specs(spec, h.core_spec(), h.noise_variance(), h.prior_mean()) == h);
}

TEST_CASE("hyperparameter JSON document") {
  const auto ds = oracle::uniform_dataset(30, 3, 2);
  const auto h = HyperparamVector::initial(ds, {3, 2, 3, CoreKind::squared_exponential});
  const auto doc = to_json(h);
  CHECK(doc["schema_version"] == kHyperparamSchemaVersion);
  const auto back = hyperparams_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back == h);

  auto wrong = doc;
  wrong["schema_version"] = 99;
  CHECK_THROWS_AS(hyperparams_from_json(wrong), InvalidInput);
  auto bad = doc;
  bad["values"][0] = -1.0;
  CHECK_THROWS_AS(hyperparams_from_json(bad), InvalidInput);
  CHECK_THROWS_AS(hyperparams_from_json(nlohmann::json::object()), InvalidInput);
}

TEST_CASE("marginal_log_likelihood scalar cases") {
  // The point lies outside the only bump, so K = 0 and K + V = [[1]].
  SparsityKernelSpec spec;
  spec.base_radius = 1.0;
  spec.sums = {{BumpParams{1.0, 1.0, 0.1, {5.0}}}};
  const auto h = HyperparamVector::from_specs(spec, {}, 1.0, 0.0);
  CHECK(marginal_log_likelihood(build_model(Dataset(1, {0.0}, {0.0}), h)).value == 0.0);
  CHECK(marginal_log_likelihood(build_model(Dataset(1, {0.0}, {2.0}), h)).value ==
        doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("marginal_log_likelihood against the dense oracle") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const std::size_t n = seed == 0 ? 50 : 150 * seed;
    const auto ds = oracle::uniform_dataset(n, 2, 60 + seed);
    const auto spec = oracle::random_spec(2, 2, 2, 70 + seed, 0.3, 0.6, 0.5);
    const CoreKernelSpec core = seed == 1 ? CoreKernelSpec{CoreKind::squared_exponential, 1.0, 0.3} : CoreKernelSpec{};
    const double noise = 0.1;
    const double m0 = 0.05;
    const auto h = HyperparamVector::from_specs(spec, core, noise, m0);
    const auto model = build_model(ds, h, {64, 2});
    const double ref = oracle::log_likelihood(ds, core, spec, noise, m0);

    const auto exact = marginal_log_likelihood(model, exact_logdet());
    CHECK(std::abs(exact.value - ref) <= 1e-8 * std::abs(ref));
    const auto rla = marginal_log_likelihood(model);
    CHECK(rla.cg_converged);
    CHECK(std::abs(rla.data_fit - exact.data_fit) <= 1e-6 * std::abs(exact.data_fit));
  }
}

TEST_CASE("randomized likelihood within 2% on well-conditioned N=50 problems") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ds = oracle::uniform_dataset(50, 2, 160 + seed);
    const auto spec = oracle::random_spec(2, 2, 2, 170 + seed, 0.3, 0.6, 0.5);
    const double noise = 1.0;
    const auto model = build_model(ds, HyperparamVector::from_specs(spec, {}, noise, 0.0));
    const double ref = oracle::log_likelihood(ds, {}, spec, noise, 0.0);
    const double cond = oracle::condition_number(oracle::dense(model.system_matrix()));
    REQUIRE(cond < 20.0);
    LikelihoodConfig cfg;
    cfg.logdet.seed = seed;
    const auto rla = marginal_log_likelihood(model, cfg);
    CHECK(std::abs(rla.value - ref) <= 0.02 * std::abs(ref));
  }
}

TEST_CASE("augmented_objective") {
  CHECK(augmented_objective(-3.0, 1.0) == -3.0);
  CHECK(augmented_objective(10.0, 0.0) == 20.0);
  CHECK(augmented_objective(-100.0, 0.25) == -175.0);
  CHECK(augmented_objective(10.0, 2.3) == 10.0);   // s clamped to 1
  CHECK(augmented_objective(10.0, -0.5) == 20.0);  // s clamped to 0
  for (double s : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    const double v = augmented_objective(7.0, s);
    CHECK(v >= 7.0);
    CHECK(v <= 14.0);
  }
}

TEST_CASE("constraint_satisfied") {
  CHECK(constraint_satisfied(0.01, 0.05));
  CHECK_FALSE(constraint_satisfied(0.05, 0.05));
  CHECK_FALSE(constraint_satisfied(2.3, 0.9));
  CHECK_FALSE(constraint_satisfied(2.3, 1.0));
  CHECK(constraint_satisfied(0.99, 1.0));
}

TEST_CASE("mcmc_train single iteration") {
  const auto ds = two_cluster_1d(50, 1);
  const auto init = HyperparamVector::initial(ds, {1, 2, 2, CoreKind::none});
  MCMCConfig cfg;
  cfg.iterations = 1;
  cfg.seed = 3;
  const auto res = mcmc_train(ds, init, cfg);
  REQUIRE(res.trace.records.size() == 1);
  const auto& rec = res.trace.records[0];
  REQUIRE(rec.log_likelihood.has_value());
  const double better = std::max(res.trace.initial_log_likelihood, *rec.log_likelihood);
  CHECK(res.trace.best_log_likelihood == better);
  CHECK(res.model.hyperparams == res.trace.best);
}

TEST_CASE("mcmc_train improves the likelihood on two clusters") {
  const auto ds = two_cluster_1d(100, 2);
  const auto init = HyperparamVector::initial(ds, {1, 2, 2, CoreKind::none});
  MCMCConfig cfg;
  cfg.iterations = 160;
  cfg.seed = 11;
  cfg.resources = {100, 2};
  const auto res = mcmc_train(ds, init, cfg);
  CHECK(res.trace.records.size() == 160);
  CHECK(res.trace.best_log_likelihood > res.trace.initial_log_likelihood);
  double best = res.trace.initial_log_likelihood;
  for (const auto& rec : res.trace.records) {
    CHECK(rec.best_log_likelihood >= best);
    best = rec.best_log_likelihood;
    if (rec.accepted) CHECK(*rec.log_likelihood <= res.trace.best_log_likelihood);
  }

  // Same seed, same trace.
  MCMCConfig shorter = cfg;
  shorter.iterations = 20;
  const auto a = mcmc_train(ds, init, shorter);
  const auto b = mcmc_train(ds, init, shorter);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(a.trace.records[i].hyperparams == b.trace.records[i].hyperparams);
    CHECK(a.trace.records[i].log_likelihood == b.trace.records[i].log_likelihood);
    CHECK(a.trace.records[i].accepted == b.trace.records[i].accepted);
  }
}

TEST_CASE("mcmc_train with zero proposal scale never moves") {
  const auto ds = two_cluster_1d(30, 4);
  const auto init = HyperparamVector::initial(ds, {1, 1, 2, CoreKind::squared_exponential});
  MCMCConfig cfg;
  cfg.iterations = 5;
  cfg.proposal_scale = 0.0;
  const auto res = mcmc_train(ds, init, cfg);
  for (const auto& rec : res.trace.records) CHECK(rec.hyperparams == init.values());
  CHECK(res.trace.best == init);
}

TEST_CASE("constrained training keeps every state feasible") {
  const auto ds = two_cluster_1d(100, 5);
  const auto init = feasible_init(ds);
  MCMCConfig cfg;
  cfg.iterations = 60;
  cfg.seed = 5;
  cfg.objective = Objective::constrained;
  cfg.sparsity_requirement = 0.3;
  const auto res = mcmc_train(ds, init, cfg);
  std::size_t accepted = 0;
  for (const auto& rec : res.trace.records) {
    if (rec.accepted) {
      ++accepted;
      CHECK(constraint_satisfied(rec.s_bound, 0.3));
    }
    if (!rec.feasible) CHECK_FALSE(rec.log_likelihood.has_value());
  }
  CHECK(accepted > 0);
  CHECK(constraint_satisfied(sparsity_upper_bound(res.trace.best.sparsity_spec(), training_domain(ds)), 0.3));

  cfg.sparsity_requirement = 0.01;
  CHECK_THROWS_AS(mcmc_train(ds, init, cfg), ConstraintViolation);
}

TEST_CASE("augmented training records the augmented objective") {
  const auto ds = two_cluster_1d(40, 6);
  MCMCConfig cfg;
  cfg.iterations = 10;
  cfg.objective = Objective::augmented;
  const auto res = mcmc_train(ds, feasible_init(ds), cfg);
  for (const auto& rec : res.trace.records) {
    REQUIRE(rec.objective.has_value());
    CHECK(*rec.objective == augmented_objective(*rec.log_likelihood, rec.s_bound));
  }
}

TEST_CASE("trace records survive JSON") {
  TraceRecord rec;
  rec.iteration = 4;
  rec.hyperparams = {0.1, 0.2, 1.0 / 3.0};
  rec.log_likelihood = -12.5;
  rec.objective = -20.0;
  rec.s_bound = 0.25;
  rec.accepted = true;
  rec.best_log_likelihood = -10.0;
  const auto back = trace_record_from_json(nlohmann::json::parse(to_json(rec).dump()));
  CHECK(back.hyperparams == rec.hyperparams);
  CHECK(back.log_likelihood == rec.log_likelihood);
  CHECK_FALSE(back.empirical_s.has_value());
  CHECK(back.accepted);
}

TEST_CASE("posterior_predict special cases") {
  SparsityKernelSpec spec;
  spec.base_radius = 0.3;
  spec.sums = {{BumpParams{1.0, 1.0, 0.5, {0.0}}, BumpParams{1.0, 1.0, 0.5, {2.0}}}};
  const Dataset ds(1, {0.0, 0.1}, {1.0, 2.0});
  const auto h = HyperparamVector::from_specs(spec, {}, 0.01, 0.7);
  const auto model = build_model(ds, h);

  // Inside a bump but out of range of every data point: the prior.
  const std::vector<Point> far{{2.0}};
  const auto p = posterior_predict(model, far);
  CHECK(p.mean[0] == 0.7);
  CHECK(p.variance[0] == composed_kernel_eval({}, spec, far[0], far[0]));
  CHECK(p.cg_iterations[0] == 0);

  // Nearly noise-free interpolation of a single point.
  const Dataset single(1, {0.0}, {1.5});
  const auto h1 = HyperparamVector::from_specs(spec, {}, 1e-8, 0.0);
  const auto m1 = build_model(single, h1);
  const auto q = posterior_predict(m1, std::vector<Point>{{0.0}});
  CHECK(q.mean[0] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(q.variance[0] < 1e-7);
}

TEST_CASE("posterior_predict against the dense oracle") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = oracle::uniform_dataset(50, 2, 80 + seed);
    const auto spec = oracle::random_spec(2, 2, 2, 90 + seed, 0.3, 0.6, 0.6);
    const CoreKernelSpec core = seed == 2 ? CoreKernelSpec{CoreKind::squared_exponential, 1.0, 0.4} : CoreKernelSpec{};
    const auto h = HyperparamVector::from_specs(spec, core, 0.05, -0.1);
    const auto model = build_model(ds, h, {16, 2});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> queries(10, Point(2));
    for (auto& q : queries) q = {u(rng), u(rng)};
    const auto got = posterior_predict(model, queries);
    const auto ref = oracle::posterior(ds, core, spec, 0.05, -0.1, queries);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      CHECK(got.mean[q] == doctest::Approx(ref.mean[q]).epsilon(1e-5));
      CHECK(std::abs(got.raw_variance[q] - ref.variance[q]) <= 1e-5 * std::max(1e-3, std::abs(ref.variance[q])));
      CHECK(got.raw_variance[q] >= -1e-6);
      CHECK(got.variance[q] >= 0.0);
    }
  }
}

TEST_CASE("shrinking noise drives the posterior mean onto the data") {
  std::vector<double> coords, y;
  for (int i = 0; i < 20; ++i) {
    coords.push_back(0.05 * i);
    y.push_back(std::cos(3.0 * 0.05 * i));
  }
  const Dataset ds(1, coords, y);
  SparsityKernelSpec spec;
  spec.base_radius = 0.3;
  spec.sums = {{BumpParams{1.0, 1.0, 2.0, {0.5}}}};
  std::vector<Point> at;
  for (double c : coords) at.push_back({c});

  std::vector<double> previous(20, INFINITY);
  for (double noise : {1e-2, 1e-4, 1e-6}) {
    const auto model = build_model(ds, HyperparamVector::from_specs(spec, {}, noise, 0.0));
    CGConfig cg;
    cg.rel_tolerance = 1e-12;
    const auto p = posterior_predict(model, at, cg);
    for (std::size_t i = 0; i < 20; ++i) {
      const double err = std::abs(p.mean[i] - y[i]);
      CHECK(err < previous[i]);
      previous[i] = err;
    }
  }
}
