#include "sparsegp/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sparsegp/errors.hpp"

namespace sparsegp {

SparseSymMatrix::SparseSymMatrix(std::size_t n) : n_(n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("matrix order too large");
}

void SparseSymMatrix::insert(std::size_t row, std::size_t col, double value) {
  if (finalized_) throw std::logic_error("insert after finalize");
  if (row >= n_ || col >= n_) {
    throw InvalidInput("entry (" + std::to_string(row) + "," + std::to_string(col) +
                       ") outside matrix of order " + std::to_string(n_));
  }
  triplets_.push_back({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col), value});
}

void SparseSymMatrix::insert(std::span<const Triplet> entries) {
  if (finalized_) throw std::logic_error("insert after finalize");
  for (const auto& t : entries) {
    if (t.row >= n_ || t.col >= n_) throw InvalidInput("triplet outside matrix");
  }
  triplets_.insert(triplets_.end(), entries.begin(), entries.end());
}

SparseSymMatrix& SparseSymMatrix::finalize() {
  if (finalized_) return *this;

  // Canonical upper-triangle form; `mirrored` remembers the orientation given.
  struct Upper {
    std::uint32_t row, col;
    bool mirrored;
    double value;
  };
  std::vector<Upper> upper;
  upper.reserve(triplets_.size());
  for (const auto& t : triplets_) {
    if (t.row <= t.col) upper.push_back({t.row, t.col, false, t.value});
    else upper.push_back({t.col, t.row, true, t.value});
  }
  std::vector<Triplet>().swap(triplets_);

  std::sort(upper.begin(), upper.end(), [](const Upper& a, const Upper& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.mirrored < b.mirrored;
  });

  std::size_t kept = 0;
  for (std::size_t k = 0; k < upper.size(); ++k) {
    if (kept > 0 && upper[kept - 1].row == upper[k].row && upper[kept - 1].col == upper[k].col) {
      const Upper& prev = upper[kept - 1];
      const std::string where =
          "(" + std::to_string(prev.row) + "," + std::to_string(prev.col) + ")";
      if (prev.row == prev.col || prev.mirrored == upper[k].mirrored) {
        throw IntegrityError("duplicate entry at " + where);
      }
      if (prev.value != upper[k].value) throw IntegrityError("asymmetric entries at " + where);
      continue;
    }
    upper[kept++] = upper[k];
  }
  upper.resize(kept);

  offsets_.assign(n_ + 1, 0);
  for (const auto& u : upper) {
    ++offsets_[u.row + 1];
    if (u.row != u.col) ++offsets_[u.col + 1];
  }
  for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];

  cols_.resize(offsets_[n_]);
  values_.resize(offsets_[n_]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Scanning in (row, col) order fills every CSR row with ascending columns.
  for (const auto& u : upper) {
    cols_[cursor[u.row]] = u.col;
    values_[cursor[u.row]++] = u.value;
    if (u.row != u.col) {
      cols_[cursor[u.col]] = u.row;
      values_[cursor[u.col]++] = u.value;
    }
  }
  finalized_ = true;
  return *this;
}

void SparseSymMatrix::require_finalized() const {
  if (!finalized_) throw std::logic_error("matrix not finalized");
}

SparseSymMatrix SparseSymMatrix::with_added_diagonal(std::span<const double> diag) const {
  require_finalized();
  if (diag.size() != n_) throw InvalidInput("diagonal length mismatch");
  SparseSymMatrix out(n_);
  out.offsets_.assign(n_ + 1, 0);
  out.cols_.reserve(cols_.size() + n_);
  out.values_.reserve(values_.size() + n_);
  for (std::size_t i = 0; i < n_; ++i) {
    bool placed = false;
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
      const std::uint32_t c = cols_[p];
      if (!placed && c >= i) {
        if (c == i) {
          out.cols_.push_back(c);
          out.values_.push_back(values_[p] + diag[i]);
          placed = true;
          continue;
        }
        out.cols_.push_back(static_cast<std::uint32_t>(i));
        out.values_.push_back(diag[i]);
        placed = true;
      }
      out.cols_.push_back(c);
      out.values_.push_back(values_[p]);
    }
    if (!placed) {
      out.cols_.push_back(static_cast<std::uint32_t>(i));
      out.values_.push_back(diag[i]);
    }
    out.offsets_[i + 1] = out.cols_.size();
  }
  out.finalized_ = true;
  return out;
}

double SparseSymMatrix::at(std::size_t row, std::size_t col) const {
  require_finalized();
  if (row >= n_ || col >= n_) throw InvalidInput("index out of range");
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[row]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[row + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(col));
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

std::vector<double> SparseSymMatrix::diagonal() const {
  std::vector<double> d(n_);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

double SparseSymMatrix::gershgorin_bound() const {
  require_finalized();
  double best = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) s += std::abs(values_[p]);
    best = std::max(best, s);
  }
  return best;
}

void SparseSymMatrix::multiply(std::span<const double> v, std::span<double> out) const {
  require_finalized();
  if (v.size() != n_ || out.size() != n_) throw InvalidInput("spmv: vector length mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) s += values_[p] * v[cols_[p]];
    out[i] = s;
  }
}

std::vector<double> SparseSymMatrix::multiply(std::span<const double> v) const {
  std::vector<double> out(n_);
  multiply(v, out);
  return out;
}

void SparseSymMatrix::multiply_block(std::span<const double> x, std::size_t k,
                                     std::span<double> out) const {
  require_finalized();
  if (x.size() != n_ * k || out.size() != n_ * k) throw InvalidInput("block spmv: size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    double* o = out.data() + i * k;
    std::fill(o, o + k, 0.0);
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
      const double a = values_[p];
      const double* xr = x.data() + static_cast<std::size_t>(cols_[p]) * k;
      for (std::size_t c = 0; c < k; ++c) o[c] += a * xr[c];
    }
  }
}

bool SparseSymMatrix::operator==(const SparseSymMatrix& other) const {
  return n_ == other.n_ && finalized_ == other.finalized_ && offsets_ == other.offsets_ &&
         cols_ == other.cols_ && values_ == other.values_ && triplets_.size() == other.triplets_.size();
}

std::vector<double> spmv(const SparseSymMatrix& a, std::span<const double> v) { return a.multiply(v); }

void write_matrix_market(const SparseSymMatrix& a, std::ostream& out) {
  if (!a.finalized()) throw std::logic_error("matrix not finalized");
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  std::size_t lower = 0;
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p)
      if (cols[p] <= i) ++lower;

  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.order() << ' ' << a.order() << ' ' << lower << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p)
      if (cols[p] <= i) out << i + 1 << ' ' << cols[p] + 1 << ' ' << vals[p] << '\n';
}

void write_matrix_market(const SparseSymMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  write_matrix_market(a, out);
}

SparseSymMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    throw InvalidInput("matrix market: missing banner");
  }
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(), ::tolower);
  if (format != "coordinate" || (field != "real" && field != "double")) {
    throw InvalidInput("matrix market: only real coordinate matrices are supported");
  }
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") throw InvalidInput("matrix market: unsupported symmetry " + symmetry);

  while (std::getline(in, line) && !line.empty() && line[0] == '%') {}
  std::istringstream size_line(line);
  std::size_t rows = 0, cols = 0, entries = 0;
  if (!(size_line >> rows >> cols >> entries) || rows != cols) {
    throw InvalidInput("matrix market: bad size line");
  }
  SparseSymMatrix a(rows);
  for (std::size_t k = 0; k < entries; ++k) {
    std::size_t i, j;
    double v;
    if (!(in >> i >> j >> v) || i < 1 || j < 1) throw InvalidInput("matrix market: bad entry");
    if (symmetric && j > i) throw InvalidInput("matrix market: symmetric file with upper entry");
    a.insert(i - 1, j - 1, v);
  }
  a.finalize();
  return a;
}

SparseSymMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open: " + path);
  return read_matrix_market(in);
}

}  // namespace sparsegp
