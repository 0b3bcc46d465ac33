#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rkform/expr.hpp"
#include "rkform/sparse.hpp"
#include "rkform/tableau.hpp"

namespace rkform {

/// Sparse LU factorization (COLAMD ordering, partial pivoting). Immutable
/// after construction; solve() may be called concurrently.
class DirectSolver {
 public:
  explicit DirectSolver(const SparseMatrix& matrix);
  ~DirectSolver();
  DirectSolver(const DirectSolver&) = delete;
  DirectSolver& operator=(const DirectSolver&) = delete;

  Vector solve(const Vector& rhs) const;
  int size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_;
};

/// One-shot factor-and-solve. Throws SingularMatrix.
Vector lu_solve(const SparseMatrix& matrix, const Vector& rhs);

/// y = Op(x)
using LinearMap = std::function<void(const Vector& x, Vector& y)>;

struct GmresResult {
  Vector x;
  int iterations{0};
  double relative_residual{0.0};
  /// Relative residual after each iteration, starting with the initial one.
  std::vector<double> history;
};

/// Right-preconditioned, unrestarted GMRES with modified Gram-Schmidt,
/// started from zero. Converged when ||b - A x|| <= rtol ||b||. An empty
/// `preconditioner` means the identity. Throws MaxIterationsExceeded.
GmresResult gmres(const LinearMap& op, const Vector& rhs, const LinearMap& preconditioner,
                  double rtol, int max_iterations = 200);

/// Matrix-free stage operator (I (x) M + dt A (x) K) for Kronecker-structured
/// stage systems. M and K are n x n matrices over all fields of one stage.
/// Listed rows of each stage block act as identity rows (Dirichlet).
class KronOperator {
 public:
  KronOperator(Eigen::MatrixXd A, Constant dt, SparseMatrix mass, SparseMatrix stiffness,
               std::vector<int> dirichlet_rows = {});

  int size() const { return stages_ * block_; }
  int block_size() const { return block_; }
  int num_stages() const { return stages_; }
  const Eigen::MatrixXd& butcher_matrix() const { return A_; }
  double dt() const { return dt_.value(); }
  const SparseMatrix& mass() const { return M_; }
  const SparseMatrix& stiffness() const { return K_; }
  const std::vector<int>& dirichlet_rows() const { return bc_rows_; }

  void apply(const Vector& x, Vector& y) const;
  LinearMap as_map() const;
  /// The same operator as an assembled sparse matrix.
  SparseMatrix assemble() const;

 private:
  Eigen::MatrixXd A_;
  Constant dt_;
  SparseMatrix M_;
  SparseMatrix K_;
  std::vector<int> bc_rows_;
  int stages_;
  int block_;
};

enum class PcKind { None, BlockDiagonal, BlockLowerTriangular };

/// Stage-blocked preconditioner: per-stage direct solves of the diagonal
/// blocks, and for the lower-triangular variant forward substitution with
/// the strictly lower coupling blocks.
class BlockPreconditioner {
 public:
  static BlockPreconditioner identity(int size);

  PcKind kind() const { return kind_; }
  int num_blocks() const { return static_cast<int>(diag_.size()); }
  int block_size() const { return block_; }

  void apply(const Vector& x, Vector& y) const;
  LinearMap as_map() const;

 private:
  friend BlockPreconditioner make_block_pc(PcKind, std::vector<SparseMatrix>,
                                           std::vector<std::vector<SparseMatrix>>);
  PcKind kind_{PcKind::None};
  int block_{0};
  int size_{0};
  std::vector<std::shared_ptr<const DirectSolver>> diag_;
  // lower_[i][j], j < i
  std::vector<std::vector<SparseMatrix>> lower_;
};

BlockPreconditioner make_block_pc(PcKind kind, std::vector<SparseMatrix> diagonal_blocks,
                                  std::vector<std::vector<SparseMatrix>> lower_blocks);

/// Blocks M + A_ii dt K (Dirichlet rows replaced by identity rows).
BlockPreconditioner make_block_diag_pc(const SparseMatrix& M, const SparseMatrix& K,
                                       const ButcherTableau& tableau, double dt,
                                       std::span<const int> dirichlet_rows = {});

/// Diagonal blocks as above plus couplings A_ij dt K for j < i.
BlockPreconditioner make_block_lower_pc(const SparseMatrix& M, const SparseMatrix& K,
                                        const ButcherTableau& tableau, double dt,
                                        std::span<const int> dirichlet_rows = {});

/// Block preconditioner cut out of an assembled stage-major matrix.
BlockPreconditioner block_pc_from_matrix(const SparseMatrix& J, int num_stages, PcKind kind);

BlockPreconditioner block_pc_from_kron(const KronOperator& op, PcKind kind);

enum class LinearMethod { Direct, Gmres };

struct LinearSolverOptions {
  LinearMethod method{LinearMethod::Direct};
  PcKind pc{PcKind::BlockDiagonal};
  double rtol{1e-8};
  int max_iterations{200};
};

struct NewtonOptions {
  double atol{1e-10};
  double rtol{1e-8};
  int max_iterations{25};
  LinearSolverOptions linear{};
  /// Stage count used to block the Jacobian for block preconditioners.
  int num_stages{1};
};

struct NewtonResult {
  Vector x;
  int iterations{0};
  int linear_iterations{0};
  double residual_norm{0.0};
};

/// Newton's method without line search. Converged when ||F(x)||_2 <= atol or
/// <= rtol ||F(x0)||_2. Throws SolverDiverged when the residual grows three
/// iterations in a row, MaxIterationsExceeded otherwise.
NewtonResult newton_solve(const std::function<Vector(const Vector&)>& residual,
                          const std::function<SparseMatrix(const Vector&)>& jacobian,
                          Vector initial_guess, const NewtonOptions& options);

}  // namespace rkform
