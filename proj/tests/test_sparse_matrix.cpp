#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "sparsegp/errors.hpp"
#include "sparsegp/sparse_matrix.hpp"

using namespace sparsegp;

TEST_CASE("finalize builds symmetric CSR") {
  SparseSymMatrix a(3);
  a.finalize();
  CHECK(a.nnz() == 0);
  const auto eye = a.with_added_diagonal(std::vector<double>{1.0, 1.0, 1.0});
  CHECK(eye.nnz() == 3);
  CHECK(eye.at(1, 1) == 1.0);

  SparseSymMatrix b(2);
  b.insert(0, 1, 0.5);
  b.finalize();
  CHECK(b.nnz() == 2);
  CHECK(b.at(1, 0) == 0.5);
  CHECK(b.at(0, 1) == 0.5);
  CHECK(b.at(0, 0) == 0.0);
}

TEST_CASE("finalize is idempotent") {
  SparseSymMatrix a(4);
  a.insert(0, 0, 2.0);
  a.insert(3, 1, -1.0);
  a.insert(2, 2, 1.0);
  a.finalize();
  const SparseSymMatrix copy = a;
  a.finalize();
  CHECK(a == copy);
  CHECK_THROWS_AS(a.insert(0, 1, 1.0), std::logic_error);
}

TEST_CASE("duplicate and conflicting entries are integrity errors") {
  SparseSymMatrix dup(3);
  dup.insert(0, 1, 1.0);
  dup.insert(0, 1, 1.0);
  CHECK_THROWS_AS(dup.finalize(), IntegrityError);

  SparseSymMatrix diag(3);
  diag.insert(2, 2, 1.0);
  diag.insert(2, 2, 1.0);
  CHECK_THROWS_AS(diag.finalize(), IntegrityError);

  SparseSymMatrix conflict(3);
  conflict.insert(0, 2, 1.0);
  conflict.insert(2, 0, 1.5);
  CHECK_THROWS_AS(conflict.finalize(), IntegrityError);

  SparseSymMatrix mirrored(3);
  mirrored.insert(0, 2, 1.0);
  mirrored.insert(2, 0, 1.0);
  CHECK_NOTHROW(mirrored.finalize());
  CHECK(mirrored.nnz() == 2);

  SparseSymMatrix small(2);
  CHECK_THROWS_AS(small.insert(0, 2, 1.0), InvalidInput);
}

TEST_CASE("spmv small cases") {
  SparseSymMatrix eye(3);
  for (std::size_t i = 0; i < 3; ++i) eye.insert(i, i, 1.0);
  eye.finalize();
  CHECK(spmv(eye, std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});

  SparseSymMatrix d(2);
  d.insert(0, 0, 2.0);
  d.insert(1, 1, 3.0);
  d.finalize();
  CHECK(spmv(d, std::vector<double>{1, 1}) == std::vector<double>{2, 3});
  CHECK_THROWS_AS(spmv(d, std::vector<double>{1, 1, 1}), InvalidInput);
}

TEST_CASE("spmv against dense products") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 5 + 5 * seed;
    const Eigen::MatrixXd m = oracle::random_sparse_spd(n, 0.3, seed);
    const SparseSymMatrix a = oracle::from_dense(m);
    CHECK(oracle::dense(a) == m);

    const auto v = oracle::random_vector(n, seed + 100);
    const Eigen::VectorXd ref = m * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
    const auto got = spmv(a, v);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - ref(i)) <= 1e-14 * std::max(1.0, std::abs(ref(i))) * 10);

    // Unit vectors reproduce columns exactly.
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> e(n, 0.0);
      e[i] = 1.0;
      const auto col = spmv(a, e);
      for (std::size_t r = 0; r < n; ++r) CHECK(col[r] == m(r, i));
    }

    // The block product agrees column by column.
    const std::size_t k = 3;
    std::vector<double> x(n * k), out(n * k);
    for (std::size_t i = 0; i < n * k; ++i) x[i] = static_cast<double>((i * 7) % 5) - 2.0;
    a.multiply_block(x, k, out);
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = x[i * k + c];
      const auto single = spmv(a, col);
      for (std::size_t i = 0; i < n; ++i) CHECK(out[i * k + c] == single[i]);
    }
  }
}

TEST_CASE("with_added_diagonal fills missing diagonal entries") {
  SparseSymMatrix a(3);
  a.insert(0, 2, 4.0);
  a.insert(1, 1, 1.0);
  a.finalize();
  const auto b = a.with_added_diagonal(std::vector<double>{0.5, 0.5, 0.5});
  Eigen::MatrixXd expected(3, 3);
  expected << 0.5, 0, 4, 0, 1.5, 0, 4, 0, 0.5;
  CHECK(oracle::dense(b) == expected);
  CHECK(b.nnz() == 5);
}

TEST_CASE("matrix market round trip") {
  const Eigen::MatrixXd m = oracle::random_sparse_spd(20, 0.2, 42);
  const SparseSymMatrix a = oracle::from_dense(m);
  std::stringstream ss;
  write_matrix_market(a, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real symmetric", 0) == 0);
  const SparseSymMatrix back = read_matrix_market(ss);
  CHECK(back == a);

  std::stringstream general("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n1 2 2.0\n2 1 2.0\n");
  const auto g = read_matrix_market(general);
  CHECK(g.at(0, 1) == 2.0);
  CHECK(g.nnz() == 3);

  std::stringstream bad("not a matrix\n");
  CHECK_THROWS_AS(read_matrix_market(bad), InvalidInput);
}
