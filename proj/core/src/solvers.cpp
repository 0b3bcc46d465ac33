#include "rkform/solvers.hpp"

#include <cmath>
#include <Eigen/SparseLU>

#include "rkform/errors.hpp"

namespace rkform {

struct DirectSolver::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

DirectSolver::DirectSolver(const SparseMatrix& matrix)
    : impl_(std::make_unique<Impl>()), n_(matrix.rows()) {
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("DirectSolver: matrix not square");
  const Eigen::SparseMatrix<double> m = matrix.to_eigen();
  impl_->lu.analyzePattern(m);
  impl_->lu.factorize(m);
  if (impl_->lu.info() != Eigen::Success) {
    throw SingularMatrix("DirectSolver: factorization failed: " + impl_->lu.lastErrorMessage());
  }
  if (n_ > 0 && !std::isfinite(impl_->lu.logAbsDeterminant())) {
    throw SingularMatrix("DirectSolver: singular matrix");
  }
}

DirectSolver::~DirectSolver() = default;

Vector DirectSolver::solve(const Vector& rhs) const {
  if (rhs.size() != n_) throw InvalidArgument("DirectSolver::solve: size mismatch");
  Vector x = impl_->lu.solve(rhs);
  if (!x.allFinite()) throw SingularMatrix("DirectSolver::solve: non-finite solution");
  return x;
}

Vector lu_solve(const SparseMatrix& matrix, const Vector& rhs) {
  return DirectSolver(matrix).solve(rhs);
}

GmresResult gmres(const LinearMap& op, const Vector& rhs, const LinearMap& preconditioner,
                  double rtol, int max_iterations) {
  const auto n = rhs.size();
  GmresResult result;
  result.x = Vector::Zero(n);
  const double beta = rhs.norm();
  result.history.push_back(beta == 0.0 ? 0.0 : 1.0);
  if (beta == 0.0) return result;

  const int m = max_iterations;
  std::vector<Vector> V;
  V.reserve(static_cast<std::size_t>(m) + 1);
  V.push_back(rhs / beta);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Vector cs = Vector::Zero(m);
  Vector sn = Vector::Zero(m);
  Vector g = Vector::Zero(m + 1);
  g[0] = beta;

  Vector z(n);
  Vector w(n);
  for (int k = 0; k < m; ++k) {
    if (preconditioner) {
      preconditioner(V[k], z);
    } else {
      z = V[k];
    }
    op(z, w);
    for (int j = 0; j <= k; ++j) {
      H(j, k) = w.dot(V[j]);
      w -= H(j, k) * V[j];
    }
    H(k + 1, k) = w.norm();

    for (int j = 0; j < k; ++j) {
      const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
      H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
      H(j, k) = t;
    }
    const double r = std::hypot(H(k, k), H(k + 1, k));
    cs[k] = r == 0.0 ? 1.0 : H(k, k) / r;
    sn[k] = r == 0.0 ? 0.0 : H(k + 1, k) / r;
    const double h_next = H(k + 1, k);
    H(k, k) = r;
    H(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const double rel = std::abs(g[k + 1]) / beta;
    result.history.push_back(rel);
    const bool breakdown = h_next <= 1e-14 * beta;
    if (rel <= rtol || breakdown) {
      const int dim = k + 1;
      const Vector y = H.topLeftCorner(dim, dim).triangularView<Eigen::Upper>().solve(g.head(dim));
      Vector combo = Vector::Zero(n);
      for (int j = 0; j < dim; ++j) combo += y[j] * V[j];
      if (preconditioner) {
        preconditioner(combo, result.x);
      } else {
        result.x = combo;
      }
      result.iterations = dim;
      result.relative_residual = rel;
      return result;
    }
    V.push_back(w / h_next);
  }
  throw MaxIterationsExceeded("gmres: no convergence in " + std::to_string(m) +
                              " iterations (relative residual " +
                              std::to_string(result.history.back()) + ")");
}

KronOperator::KronOperator(Eigen::MatrixXd A, Constant dt, SparseMatrix mass,
                           SparseMatrix stiffness, std::vector<int> dirichlet_rows)
    : A_(std::move(A)),
      dt_(std::move(dt)),
      M_(std::move(mass)),
      K_(std::move(stiffness)),
      bc_rows_(std::move(dirichlet_rows)),
      stages_(static_cast<int>(A_.rows())),
      block_(M_.rows()) {
  if (A_.rows() != A_.cols()) throw InvalidArgument("KronOperator: A must be square");
  if (M_.rows() != M_.cols() || K_.rows() != M_.rows() || K_.cols() != M_.cols()) {
    throw InvalidArgument("KronOperator: mass and stiffness shapes differ");
  }
}

void KronOperator::apply(const Vector& x, Vector& y) const {
  if (x.size() != size()) throw InvalidArgument("KronOperator::apply: size mismatch");
  y.setZero(size());
  const double dt = dt_.value();
  std::vector<Vector> Kx(stages_);
  Vector tmp;
  for (int j = 0; j < stages_; ++j) K_.multiply(x.segment(j * block_, block_), Kx[j]);
  for (int i = 0; i < stages_; ++i) {
    M_.multiply(x.segment(i * block_, block_), tmp);
    for (int j = 0; j < stages_; ++j) {
      if (A_(i, j) != 0.0) tmp += (dt * A_(i, j)) * Kx[j];
    }
    for (int r : bc_rows_) tmp[r] = x[i * block_ + r];
    y.segment(i * block_, block_) = tmp;
  }
}

LinearMap KronOperator::as_map() const {
  return [this](const Vector& x, Vector& y) { apply(x, y); };
}

SparseMatrix KronOperator::assemble() const {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(stages_, stages_);
  SparseMatrix full = add(1.0, kron(I, M_), dt_.value(), kron(A_, K_));
  std::vector<int> rows;
  for (int i = 0; i < stages_; ++i) {
    for (int r : bc_rows_) rows.push_back(i * block_ + r);
  }
  return full.with_identity_rows(rows);
}

BlockPreconditioner BlockPreconditioner::identity(int size) {
  BlockPreconditioner pc;
  pc.kind_ = PcKind::None;
  pc.size_ = size;
  pc.block_ = size;
  return pc;
}

void BlockPreconditioner::apply(const Vector& x, Vector& y) const {
  if (x.size() != size_) throw InvalidArgument("BlockPreconditioner::apply: size mismatch");
  if (kind_ == PcKind::None) {
    y = x;
    return;
  }
  y.resize(size_);
  Vector rhs;
  Vector tmp;
  for (int i = 0; i < num_blocks(); ++i) {
    rhs = x.segment(i * block_, block_);
    if (kind_ == PcKind::BlockLowerTriangular) {
      for (int j = 0; j < i; ++j) {
        lower_[i][j].multiply(y.segment(j * block_, block_), tmp);
        rhs -= tmp;
      }
    }
    y.segment(i * block_, block_) = diag_[i]->solve(rhs);
  }
}

LinearMap BlockPreconditioner::as_map() const {
  return [this](const Vector& x, Vector& y) { apply(x, y); };
}

BlockPreconditioner make_block_pc(PcKind kind, std::vector<SparseMatrix> diagonal_blocks,
                                  std::vector<std::vector<SparseMatrix>> lower_blocks) {
  if (kind == PcKind::None) {
    int size = 0;
    for (const auto& d : diagonal_blocks) size += d.rows();
    return BlockPreconditioner::identity(size);
  }
  if (diagonal_blocks.empty()) throw InvalidArgument("make_block_pc: no blocks");
  BlockPreconditioner pc;
  pc.kind_ = kind;
  pc.block_ = diagonal_blocks.front().rows();
  pc.size_ = pc.block_ * static_cast<int>(diagonal_blocks.size());
  for (const auto& d : diagonal_blocks) {
    if (d.rows() != pc.block_) throw InvalidArgument("make_block_pc: unequal block sizes");
    pc.diag_.push_back(std::make_shared<const DirectSolver>(d));
  }
  if (kind == PcKind::BlockLowerTriangular) {
    if (lower_blocks.size() != diagonal_blocks.size()) {
      throw InvalidArgument("make_block_pc: missing lower coupling blocks");
    }
    pc.lower_ = std::move(lower_blocks);
  }
  return pc;
}

namespace {

BlockPreconditioner kron_block_pc(PcKind kind, const SparseMatrix& M, const SparseMatrix& K,
                                  const Eigen::MatrixXd& A, double dt,
                                  std::span<const int> dirichlet_rows) {
  const int s = static_cast<int>(A.rows());
  std::vector<SparseMatrix> diag;
  std::vector<std::vector<SparseMatrix>> lower(s);
  for (int i = 0; i < s; ++i) {
    if (A(i, i) < 0.0) throw InvalidArgument("block preconditioner: negative diagonal A_ii");
    diag.push_back(add(1.0, M, A(i, i) * dt, K).with_identity_rows(dirichlet_rows));
    if (kind == PcKind::BlockLowerTriangular) {
      for (int j = 0; j < i; ++j) {
        lower[i].push_back(K.scaled(A(i, j) * dt).with_zero_rows(dirichlet_rows));
      }
    }
  }
  return make_block_pc(kind, std::move(diag), std::move(lower));
}

}  // namespace

BlockPreconditioner make_block_diag_pc(const SparseMatrix& M, const SparseMatrix& K,
                                       const ButcherTableau& tableau, double dt,
                                       std::span<const int> dirichlet_rows) {
  return kron_block_pc(PcKind::BlockDiagonal, M, K, tableau.A(), dt, dirichlet_rows);
}

BlockPreconditioner make_block_lower_pc(const SparseMatrix& M, const SparseMatrix& K,
                                        const ButcherTableau& tableau, double dt,
                                        std::span<const int> dirichlet_rows) {
  return kron_block_pc(PcKind::BlockLowerTriangular, M, K, tableau.A(), dt, dirichlet_rows);
}

BlockPreconditioner block_pc_from_kron(const KronOperator& op, PcKind kind) {
  if (kind == PcKind::None) return BlockPreconditioner::identity(op.size());
  return kron_block_pc(kind, op.mass(), op.stiffness(), op.butcher_matrix(), op.dt(),
                       op.dirichlet_rows());
}

BlockPreconditioner block_pc_from_matrix(const SparseMatrix& J, int num_stages, PcKind kind) {
  if (kind == PcKind::None) return BlockPreconditioner::identity(J.rows());
  if (num_stages < 1 || J.rows() % num_stages != 0) {
    throw InvalidArgument("block_pc_from_matrix: size not divisible by stage count");
  }
  const int n = J.rows() / num_stages;
  std::vector<SparseMatrix> diag;
  std::vector<std::vector<SparseMatrix>> lower(num_stages);
  for (int i = 0; i < num_stages; ++i) {
    diag.push_back(J.block(i * n, i * n, n, n));
    if (kind == PcKind::BlockLowerTriangular) {
      for (int j = 0; j < i; ++j) lower[i].push_back(J.block(i * n, j * n, n, n));
    }
  }
  return make_block_pc(kind, std::move(diag), std::move(lower));
}

NewtonResult newton_solve(const std::function<Vector(const Vector&)>& residual,
                          const std::function<SparseMatrix(const Vector&)>& jacobian,
                          Vector initial_guess, const NewtonOptions& options) {
  NewtonResult result;
  result.x = std::move(initial_guess);
  Vector F = residual(result.x);
  const double initial_norm = F.norm();
  double norm = initial_norm;
  result.residual_norm = norm;
  if (norm <= options.atol) return result;

  int growth = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const SparseMatrix J = jacobian(result.x);
    Vector delta;
    if (options.linear.method == LinearMethod::Direct) {
      delta = lu_solve(J, -F);
    } else {
      const auto pc = block_pc_from_matrix(J, options.num_stages, options.linear.pc);
      const auto op = [&J](const Vector& x, Vector& y) { J.multiply(x, y); };
      auto solved = gmres(op, -F, pc.as_map(), options.linear.rtol, options.linear.max_iterations);
      result.linear_iterations += solved.iterations;
      delta = std::move(solved.x);
    }
    result.x += delta;
    F = residual(result.x);
    const double next = F.norm();
    growth = next > norm ? growth + 1 : 0;
    norm = next;
    result.iterations = it;
    result.residual_norm = norm;
    if (!std::isfinite(norm) || growth >= 3) {
      throw SolverDiverged("newton_solve: residual grew for 3 consecutive iterations");
    }
    if (norm <= options.atol || norm <= options.rtol * initial_norm) return result;
  }
  throw MaxIterationsExceeded("newton_solve: no convergence in " +
                              std::to_string(options.max_iterations) + " iterations");
}

}  // namespace rkform
