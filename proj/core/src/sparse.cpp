#include "rkform/sparse.hpp"

#include <algorithm>
#include <unordered_set>

#include "rkform/errors.hpp"

namespace rkform {

SparseMatrix::SparseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), offsets_(static_cast<std::size_t>(rows) + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw InvalidArgument("SparseMatrix::from_triplets: index out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.cols_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::vector<int> counts(rows, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      m.values_.back() += t.value;
      continue;
    }
    m.cols_idx_.push_back(t.col);
    m.values_.push_back(t.value);
    ++counts[t.row];
  }
  for (int r = 0; r < rows; ++r) m.offsets_[r + 1] = m.offsets_[r] + counts[r];
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double SparseMatrix::coeff(int row, int col) const {
  const auto begin = cols_idx_.begin() + offsets_[row];
  const auto end = cols_idx_.begin() + offsets_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_idx_.begin())];
}

void SparseMatrix::multiply(const Vector& x, Vector& y) const {
  if (x.size() != cols_) throw InvalidArgument("SparseMatrix::multiply: size mismatch");
  y.resize(rows_);
  for (int r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) acc += values_[k] * x[cols_idx_[k]];
    y[r] = acc;
  }
}

Vector SparseMatrix::operator*(const Vector& x) const {
  Vector y;
  multiply(x, y);
  return y;
}

SparseMatrix SparseMatrix::block(int row0, int col0, int nrows, int ncols) const {
  std::vector<Triplet> t;
  for (int r = row0; r < row0 + nrows; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const int c = cols_idx_[k];
      if (c >= col0 && c < col0 + ncols) t.push_back({r - row0, c - col0, values_[k]});
    }
  }
  return from_triplets(nrows, ncols, std::move(t));
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  SparseMatrix m = *this;
  for (auto& v : m.values_) v *= alpha;
  return m;
}

SparseMatrix SparseMatrix::with_identity_rows(std::span<const int> rows) const {
  const std::unordered_set<int> marked(rows.begin(), rows.end());
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    if (marked.contains(r)) {
      t.push_back({r, r, 1.0});
      continue;
    }
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({r, cols_idx_[k], values_[k]});
  }
  return from_triplets(rows_, cols_, std::move(t));
}

SparseMatrix SparseMatrix::with_zero_rows(std::span<const int> rows) const {
  const std::unordered_set<int> marked(rows.begin(), rows.end());
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    if (marked.contains(r)) continue;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({r, cols_idx_[k], values_[k]});
  }
  return from_triplets(rows_, cols_, std::move(t));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, cols_idx_[k]) += values_[k];
  }
  return d;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.emplace_back(r, cols_idx_[k], values_[k]);
  }
  Eigen::SparseMatrix<double> m(rows_, cols_);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({r, cols_idx_[k], values_[k]});
  }
  return t;
}

SparseMatrix add(double alpha, const SparseMatrix& X, double beta, const SparseMatrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw InvalidArgument("add: shape mismatch");
  }
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(X.nnz() + Y.nnz()));
  for (auto tr : X.triplets()) t.push_back({tr.row, tr.col, alpha * tr.value});
  for (auto tr : Y.triplets()) t.push_back({tr.row, tr.col, beta * tr.value});
  return SparseMatrix::from_triplets(X.rows(), X.cols(), std::move(t));
}

SparseMatrix kron(const Eigen::MatrixXd& A, const SparseMatrix& B) {
  const int n = B.rows();
  const int m = B.cols();
  std::vector<Triplet> t;
  const auto bt = B.triplets();
  for (int i = 0; i < A.rows(); ++i) {
    for (int j = 0; j < A.cols(); ++j) {
      if (A(i, j) == 0.0) continue;
      for (const auto& e : bt) t.push_back({i * n + e.row, j * m + e.col, A(i, j) * e.value});
    }
  }
  return SparseMatrix::from_triplets(static_cast<int>(A.rows()) * n,
                                     static_cast<int>(A.cols()) * m, std::move(t));
}

void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, std::span<const int> rows,
                     std::span<const double> values) {
  if (rows.size() != values.size()) throw InvalidArgument("apply_dirichlet: size mismatch");
  for (int r : rows) {
    if (r < 0 || r >= matrix.rows()) throw InvalidArgument("apply_dirichlet: row out of range");
  }
  matrix = matrix.with_identity_rows(rows);
  for (std::size_t k = 0; k < rows.size(); ++k) rhs[rows[k]] = values[k];
}

}  // namespace rkform
