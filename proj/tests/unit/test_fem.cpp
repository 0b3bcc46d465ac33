#include <cmath>
#include <sstream>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "rkform/errors.hpp"
#include "rkform/experiments.hpp"
#include "rkform/fem.hpp"
#include "rkform/solvers.hpp"

using namespace rkform;

namespace {

SpacePtr space(double a, double b, int N, Family family, int k, bool periodic = false) {
  return std::make_shared<const FunctionSpace>(Mesh1D(a, b, N, periodic), family, k);
}

SparseMatrix mass(const SpacePtr& V) {
  Form F(1);
  F.add(trial(0) * test_function(0));
  return assemble_matrix(F, BlockLayout({V}));
}

SparseMatrix stiffness(const SpacePtr& V) {
  Form F(1);
  F.add(grad(trial(0)) * grad(test_function(0)));
  return assemble_matrix(F, BlockLayout({V}));
}

Eigen::VectorXd eigenvalues(const SparseMatrix& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.to_dense());
  return es.eigenvalues();
}

}  // namespace

TEST(Space, DofCounts) {
  EXPECT_EQ(space(0, 1, 5, Family::CG, 2)->dof_count(), 11);
  EXPECT_EQ(space(0, 1, 5, Family::CG, 2, true)->dof_count(), 10);
  EXPECT_EQ(space(0, 1, 5, Family::DG, 1)->dof_count(), 10);
  EXPECT_EQ(space(0, 1, 5, Family::DG, 0)->dof_count(), 5);
  EXPECT_THROW(space(0, 1, 5, Family::CG, 0), InvalidArgument);
  EXPECT_THROW(space(0, 1, 5, Family::DG, 5), InvalidArgument);
  EXPECT_THROW(Mesh1D(1, 0, 4), InvalidArgument);
  EXPECT_THROW(Mesh1D(0, 1, 0), InvalidArgument);
}

TEST(Space, BasisIsNodal) {
  for (int k = 0; k <= kMaxDegree; ++k) {
    const auto V = space(0, 1, 1, Family::DG, k);
    double total = 0.0;
    for (int j = 0; j <= k; ++j) {
      for (int m = 0; m <= k; ++m) {
        EXPECT_NEAR(V->basis(j, V->reference_nodes()[m]), j == m ? 1.0 : 0.0, 1e-14);
      }
      total += V->basis_derivative(j, 0.37);
    }
    EXPECT_NEAR(total, 0.0, 1e-12);  // derivatives of a partition of unity
  }
}

TEST(Space, BoundaryDofs) {
  const auto V = space(0, 2, 4, Family::CG, 3);
  EXPECT_EQ(V->boundary_dof(BoundaryLocation::LeftEnd), 0);
  EXPECT_EQ(V->boundary_dof(BoundaryLocation::RightEnd), 12);
  EXPECT_DOUBLE_EQ(V->dof_coordinates()[12], 2.0);
  EXPECT_THROW(space(0, 1, 4, Family::CG, 1, true)->boundary_dof(BoundaryLocation::LeftEnd),
               InvalidArgument);
}

TEST(Assembly, P1MassMatrix) {
  const auto M = mass(space(0, 1, 2, Family::CG, 1)).to_dense();
  const double h = 0.5;
  Eigen::MatrixXd expected(3, 3);
  expected << h / 3, h / 6, 0, h / 6, 2 * h / 3, h / 6, 0, h / 6, h / 3;
  EXPECT_LE((M - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, P1StiffnessMatrix) {
  const auto K = stiffness(space(0, 1, 4, Family::CG, 1)).to_dense();
  EXPECT_NEAR(K(0, 0), 4.0, 1e-13);
  EXPECT_NEAR(K(1, 1), 8.0, 1e-13);
  EXPECT_NEAR(K(1, 0), -4.0, 1e-13);
}

TEST(Assembly, MassSymmetricPositiveDefinite) {
  for (auto fam : {Family::CG, Family::DG}) {
    for (int k = fam == Family::CG ? 1 : 0; k <= kMaxDegree; ++k) {
      for (int N : {1, 3, 4}) {
        const auto M = mass(space(0, 1, N, fam, k));
        const Eigen::MatrixXd D = M.to_dense();
        EXPECT_LE((D - D.transpose()).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_GT(eigenvalues(M).minCoeff(), 0.0) << k << " " << N;
      }
    }
  }
}

TEST(Assembly, StiffnessKillsConstants) {
  for (int k = 1; k <= kMaxDegree; ++k) {
    const Eigen::MatrixXd K = stiffness(space(0, 1, 6, Family::CG, k)).to_dense();
    EXPECT_LE(K.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12) << k;
  }
}

TEST(Assembly, PeriodicStiffnessHasOneZeroMode) {
  for (int N : {4, 9, 16}) {
    const auto ev = eigenvalues(stiffness(space(0, 1, N, Family::CG, 1, true)));
    EXPECT_NEAR(ev[0], 0.0, 1e-10);
    EXPECT_GT(ev[1], 1e-6);
  }
}

TEST(Assembly, DgMassIsBlockDiagonal) {
  for (int k = 0; k <= 3; ++k) {
    const auto M = mass(space(0, 1, 5, Family::DG, k));
    const auto offsets = M.row_offsets();
    const auto cols = M.col_indices();
    for (int r = 0; r < M.rows(); ++r) {
      for (int p = offsets[r]; p < offsets[r + 1]; ++p) {
        EXPECT_EQ(cols[p] / (k + 1), r / (k + 1));
      }
    }
  }
}

TEST(Assembly, QuadratureExactness) {
  for (int k = 1; k <= kMaxDegree; ++k) {
    const BlockLayout layout({space(0, 1, 1, Family::CG, k)});
    const int exact_degree = 2 * assembly_quadrature_points(k) - 1;
    EXPECT_GE(exact_degree, 2 * k + 2);
    for (int m = 0; m <= exact_degree; ++m) {
      EXPECT_NEAR(assemble_functional(pow(coordinate(), m), layout, {}), 1.0 / (m + 1), 1e-13);
    }
  }
}

TEST(Assembly, ResidualOfMassFormIsRowSum) {
  const auto V = space(0, 1, 7, Family::CG, 2);
  const BlockLayout layout({V});
  Form F(1);
  F.add(field(0) * test_function(0));
  const Vector u = interpolate(constant(1.0), V).coefficients;
  AssemblyState state;
  state.fields = &u;
  const Vector r = assemble_residual(F, layout, state);
  const Eigen::VectorXd rows = mass(V).to_dense().rowwise().sum();
  EXPECT_LE((r - rows).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(assemble_residual(F, layout, {}), UnboundSymbol);
}

TEST(Assembly, RejectsNonlinearTrialTerms) {
  Form F(1);
  F.add(trial(0) * trial(0) * test_function(0));
  EXPECT_THROW(assemble_matrix(F, BlockLayout({space(0, 1, 2, Family::CG, 1)})), InvalidArgument);
}

TEST(Assembly, BbmResidualMatchesRefinedQuadrature) {
  BbmConfig config;
  config.N = 200;
  const auto V = space(0, config.length, config.N, Family::CG, 1, true);
  const Vector u = interpolate(bbm_solution(config, 0.0), V).coefficients;
  const Vector zero = Vector::Zero(u.size());
  AssemblyState state;
  state.fields = &u;
  state.rates = &zero;
  const Vector r = assemble_residual(bbm_form(), BlockLayout({V}), state);

  // Independent per-cell loop with four times the points.
  const auto rule = gauss_legendre_rule(4 * assembly_quadrature_points(1));
  const double h = V->mesh().h();
  Vector oracle = Vector::Zero(u.size());
  for (int cell = 0; cell < config.N; ++cell) {
    const int d0 = cell;
    const int d1 = (cell + 1) % config.N;
    const double ux = (u[d1] - u[d0]) / h;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q];
      const double uq = u[d0] * (1 - xi) + u[d1] * xi;
      const double f = ux + uq * ux;
      oracle[d0] += rule.weights[q] * h * f * (1 - xi);
      oracle[d1] += rule.weights[q] * h * f * xi;
    }
  }
  EXPECT_LE((r - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Functional, Integrals) {
  const auto V = space(0, 100, 50, Family::CG, 1, true);
  const BlockLayout layout({V});
  const Vector two = interpolate(constant(2.0), V).coefficients;
  AssemblyState s;
  s.fields = &two;
  EXPECT_NEAR(assemble_functional(field(0), layout, s), 200.0, 1e-11);
  EXPECT_THROW(assemble_functional(field(0) * test_function(0), layout, s), InvalidArgument);

  const double L = 10.0;
  const auto W = space(0, L, 2000, Family::CG, 1, true);
  const double kw = 2 * std::numbers::pi / L;
  const Vector u = interpolate(sin(constant(kw) * coordinate()), W).coefficients;
  AssemblyState sw;
  sw.fields = &u;
  const double I2 = assemble_functional(pow(field(0), 2) + pow(grad(field(0)), 2),
                                        BlockLayout({W}), sw);
  EXPECT_NEAR(I2, L / 2 * (1 + kw * kw), 1e-4);
}

TEST(Functional, WaveEnergyMatchesMassMatrices) {
  const Mesh1D mesh(0, 1, 10);
  auto Vu = std::make_shared<const FunctionSpace>(mesh, Family::DG, 1);
  auto Vs = std::make_shared<const FunctionSpace>(mesh, Family::CG, 2);
  const Vector u = interpolate(sin(constant(std::numbers::pi) * coordinate()), Vu).coefficients;
  const Vector s = interpolate(coordinate() * coordinate(), Vs).coefficients;
  Vector both(u.size() + s.size());
  both << u, s;
  AssemblyState st;
  st.fields = &both;
  const double E = assemble_functional(constant(0.5) * (pow(field(0), 2) + pow(field(1), 2)),
                                       BlockLayout({Vu, Vs}), st);
  const double oracle = 0.5 * (u.dot(mass(Vu) * u) + s.dot(mass(Vs) * s));
  EXPECT_NEAR(E, oracle, 1e-14);
}

TEST(Interpolate, ConstantsAndCoordinates) {
  const auto V = space(0, 1, 4, Family::CG, 1);
  const auto c = interpolate(constant(3.0), V);
  EXPECT_TRUE((c.coefficients.array() == 3.0).all());
  const auto x = interpolate(coordinate(), V);
  for (int d = 0; d < V->dof_count(); ++d) EXPECT_DOUBLE_EQ(x.coefficients[d], V->dof_coordinates()[d]);
  EXPECT_THROW(interpolate(field(0), V), UnboundSymbol);
}

TEST(ErrorNorm, PolynomialsAreReproduced) {
  for (int k = 1; k <= 3; ++k) {
    const auto V = space(0, 1, 3, Family::CG, k);
    const Expr p = pow(coordinate(), k) - constant(0.5) * coordinate();
    EXPECT_LE(errornorm(p, interpolate(p, V), Norm::L2), 1e-12);
    EXPECT_LE(errornorm(p, interpolate(p, V), Norm::H1), 1e-12);
  }
  const auto V = space(0, 1, 3, Family::CG, 1);
  EXPECT_EQ(errornorm(constant(0.0), FieldFunction(V), Norm::L2), 0.0);
}

TEST(ErrorNorm, SecondOrderForP1) {
  const Expr f = sin(constant(std::numbers::pi) * coordinate());
  const auto V32 = space(0, 1, 32, Family::CG, 1);
  const auto V64 = space(0, 1, 64, Family::CG, 1);
  const double ratio = errornorm(f, interpolate(f, V32), Norm::L2) /
                       errornorm(f, interpolate(f, V64), Norm::L2);
  EXPECT_GE(ratio, 3.8);
  EXPECT_LE(ratio, 4.2);
}

TEST(Dirichlet, BoundaryRowsTakePrescribedValues) {
  const auto V = space(0, 1, 8, Family::CG, 1);
  SparseMatrix K = add(1.0, stiffness(V), 1.0, mass(V));
  Vector rhs = Vector::Ones(V->dof_count());
  const std::vector<int> rows{V->boundary_dof(BoundaryLocation::LeftEnd),
                              V->boundary_dof(BoundaryLocation::RightEnd)};
  const std::vector<double> values{0.0, 2.5};
  apply_dirichlet(K, rhs, rows, values);
  const Vector x = lu_solve(K, rhs);
  EXPECT_NEAR(x[rows[0]], 0.0, 1e-14);
  EXPECT_NEAR(x[rows[1]], 2.5, 1e-14);
}

TEST(FieldCsv, TwoColumns) {
  const auto V = space(0, 1, 2, Family::CG, 1);
  std::ostringstream os;
  write_field_csv(os, interpolate(coordinate(), V));
  EXPECT_EQ(os.str(), "x,value\n0,0\n0.5,0.5\n1,1\n");
}
