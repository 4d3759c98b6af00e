#pragma once

// Symmetric sparse matrix: triplet accumulation during assembly, then sealed
// into compressed sparse row form with both triangles stored.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sparsegp {

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;
  explicit SparseSymMatrix(std::size_t n);

  std::size_t order() const { return n_; }
  bool finalized() const { return finalized_; }

  /// Stored entries of the full symmetric matrix (both triangles) once finalized.
  std::size_t nnz() const { return finalized_ ? values_.size() : 0; }

  /// Queue an entry for insertion. Either triangle may be given; finalize mirrors.
  /// Throws std::logic_error when called after finalize.
  void insert(std::size_t row, std::size_t col, double value);
  void insert(std::span<const Triplet> entries);
  std::size_t pending() const { return triplets_.size(); }

  /// Seal pending triplets into CSR. Idempotent. Throws IntegrityError when the
  /// same position is inserted twice or the two triangles disagree.
  SparseSymMatrix& finalize();

  /// Copy with `diag` added to the diagonal, creating diagonal entries where missing.
  SparseSymMatrix with_added_diagonal(std::span<const double> diag) const;

  double at(std::size_t row, std::size_t col) const;
  std::vector<double> diagonal() const;

  /// Maximum absolute row sum; an upper bound on the spectral radius.
  double gershgorin_bound() const;

  void multiply(std::span<const double> v, std::span<double> out) const;
  std::vector<double> multiply(std::span<const double> v) const;

  /// out = A * X for `k` right-hand sides stored row-major (X[i * k + c]).
  void multiply_block(std::span<const double> x, std::size_t k, std::span<double> out) const;

  std::span<const std::size_t> row_offsets() const { return offsets_; }
  std::span<const std::uint32_t> col_indices() const { return cols_; }
  std::span<const double> values() const { return values_; }

  bool operator==(const SparseSymMatrix& other) const;

 private:
  void require_finalized() const;

  std::size_t n_ = 0;
  bool finalized_ = false;
  std::vector<Triplet> triplets_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

std::vector<double> spmv(const SparseSymMatrix& a, std::span<const double> v);

// Matrix Market coordinate format, "real symmetric": lower triangle, 1-based.
void write_matrix_market(const SparseSymMatrix& a, std::ostream& out);
void write_matrix_market(const SparseSymMatrix& a, const std::string& path);
SparseSymMatrix read_matrix_market(std::istream& in);
SparseSymMatrix read_matrix_market(const std::string& path);

}  // namespace sparsegp
