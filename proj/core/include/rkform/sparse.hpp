#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace rkform {

using Vector = Eigen::VectorXd;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique in
/// every row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols);

  /// Duplicate entries are summed; explicit zeros are kept.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }
  std::span<const int> row_offsets() const { return offsets_; }
  std::span<const int> col_indices() const { return cols_idx_; }
  std::span<const double> values() const { return values_; }

  double coeff(int row, int col) const;

  /// y = this * x
  void multiply(const Vector& x, Vector& y) const;
  Vector operator*(const Vector& x) const;

  SparseMatrix block(int row0, int col0, int nrows, int ncols) const;
  SparseMatrix scaled(double alpha) const;
  /// Replace each listed row by the corresponding identity row.
  SparseMatrix with_identity_rows(std::span<const int> rows) const;
  /// Zero each listed row.
  SparseMatrix with_zero_rows(std::span<const int> rows) const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;
  std::vector<Triplet> triplets() const;

 private:
  int rows_{0};
  int cols_{0};
  std::vector<int> offsets_{0};
  std::vector<int> cols_idx_;
  std::vector<double> values_;
};

/// alpha * X + beta * Y
SparseMatrix add(double alpha, const SparseMatrix& X, double beta, const SparseMatrix& Y);

/// Dense (small) left factor times sparse right factor: A (x) B.
SparseMatrix kron(const Eigen::MatrixXd& A, const SparseMatrix& B);

/// Zero each row in `rows`, place 1 on its diagonal and set the rhs entry to
/// the prescribed value. Columns are left untouched.
void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, std::span<const int> rows,
                     std::span<const double> values);

}  // namespace rkform
