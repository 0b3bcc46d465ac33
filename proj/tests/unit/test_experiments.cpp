#include <cmath>

#include <gtest/gtest.h>

#include "rkform/errors.hpp"
#include "rkform/experiments.hpp"

using namespace rkform;

TEST(Experiments, ParseScheme) {
  EXPECT_EQ(parse_scheme("radau:3"), make_collocation(CollocationFamily::RadauIIA, 3));
  EXPECT_EQ(parse_scheme("gauss"), make_collocation(CollocationFamily::GaussLegendre, 1));
  EXPECT_EQ(parse_scheme("lobatto-iiic:2"), make_lobatto_iiic(2));
  EXPECT_EQ(parse_scheme("qin-zhang"), make_named(NamedScheme::QinZhang));
  EXPECT_THROW(parse_scheme("radau:0"), InvalidArgument);
  EXPECT_THROW(parse_scheme("bogus"), InvalidArgument);
}

TEST(Experiments, TableauReportRows) {
  const Csv report = tableau_report(make_collocation(CollocationFamily::RadauIIA, 1));
  const std::string text = report.str();
  EXPECT_EQ(text.rfind("quantity,i,j,value\n", 0), 0u);
  EXPECT_NE(text.find("A,0,0,1\n"), std::string::npos);
  EXPECT_NE(text.find("b,0,,1\n"), std::string::npos);
  EXPECT_NE(text.find("R_inf,,,0\n"), std::string::npos);
  EXPECT_NE(text.find("order_conditions_passed,,,true\n"), std::string::npos);
}

TEST(Experiments, ObservedOrderOfExactPowerLaw) {
  const std::vector<double> h{0.1, 0.05, 0.025};
  const std::vector<double> e{std::pow(0.1, 3), std::pow(0.05, 3), std::pow(0.025, 3)};
  EXPECT_NEAR(observed_order(h, e), 3.0, 1e-12);
}

TEST(Experiments, HeatSpatialRatio) {
  // Small dt with a high-order method isolates the spatial error.
  const auto bt = make_collocation(CollocationFamily::RadauIIA, 3);
  for (int k = 1; k <= 2; ++k) {
    const auto coarse = run_heat(heat_exact_solution(), 8, k, bt, 0.01, 0.1);
    const auto fine = run_heat(heat_exact_solution(), 16, k, bt, 0.01, 0.1);
    const double expected = std::pow(2.0, k + 1);
    const double ratio = coarse.l2 / fine.l2;
    EXPECT_GE(ratio, 0.8 * expected) << k;
    EXPECT_LE(ratio, 1.2 * expected) << k;
    EXPECT_LT(fine.h1, coarse.h1);
  }
}

TEST(Experiments, HeatZeroSolutionStaysZero) {
  const auto r = run_heat(constant(0.0), 8, 2, make_collocation(CollocationFamily::GaussLegendre, 2),
                          0.1, 0.5);
  EXPECT_EQ(r.steps, 5);
  // Relative errors of a zero solution are reported as absolute.
  EXPECT_LE(r.l2, 1e-14);
  EXPECT_LE(r.bc_drift, 1e-14);
}

TEST(Experiments, HeatStudyTable) {
  const Csv table = heat_study(heat_exact_solution(), {4, 8}, 1,
                               make_collocation(CollocationFamily::RadauIIA, 1), {1.0}, 0.5);
  EXPECT_EQ(table.str().rfind("N,cfl,dt,l2,h1,bc_drift\n", 0), 0u);
  ASSERT_EQ(table.num_rows(), 2u);
  const std::size_t col = table.column("l2");
  EXPECT_LT(std::get<double>(table.row(1)[col]), std::get<double>(table.row(0)[col]));
  EXPECT_THROW(heat_study(heat_exact_solution(), {3}, 1,
                          make_collocation(CollocationFamily::RadauIIA, 1), {1.0}, 0.5),
               InvalidArgument);
}

TEST(Experiments, WaveGaussConservesEnergy) {
  const auto r = run_wave(6, 2, make_collocation(CollocationFamily::GaussLegendre, 2), 0.5, 2.0);
  EXPECT_EQ(r.steps, 4);
  EXPECT_NEAR(r.energy_ratio, 1.0, 1e-10);
}

TEST(Experiments, WaveBackwardEulerDissipates) {
  const auto r = run_wave(6, 2, make_collocation(CollocationFamily::RadauIIA, 1), 0.5, 10.0);
  EXPECT_LT(r.energy_ratio, 0.1);
}

TEST(Experiments, WaveDirkBlockLowerIsExact) {
  SolverConfig config;
  config.linear.method = LinearMethod::Gmres;
  config.linear.pc = PcKind::BlockLowerTriangular;
  const auto r = run_wave(6, 2, make_named(NamedScheme::QinZhang), 0.25, 1.0, config);
  EXPECT_EQ(r.max_linear_iterations, 1);
}

TEST(Experiments, BbmPreservesLinearAndQuadraticInvariants) {
  BbmConfig config;
  config.N = 100;
  config.dt_factor = 2.0;
  config.T = 4.0;
  config.report_times = {2.0, 4.0};
  const auto run = run_bbm(config, make_collocation(CollocationFamily::GaussLegendre, 1));
  ASSERT_EQ(run.records.size(), 3u);
  const auto& first = run.records.front();
  for (const auto& rec : run.records) {
    EXPECT_NEAR(rec.I1, first.I1, 1e-9 * std::abs(first.I1));
    EXPECT_NEAR(rec.I2, first.I2, 1e-9 * std::abs(first.I2));
  }
  EXPECT_EQ(run.records.back().t, 4.0);
}

TEST(Experiments, BbmExactSolutionIsSolitary) {
  BbmConfig config;
  const Expr u0 = bbm_solution(config, 0.0);
  SymbolBindings b;
  b.set_coord(config.peak);
  EXPECT_NEAR(evaluate(u0, b), 1.0, 1e-7);
  const double speed = 1.0 / (1.0 - config.c * config.c);
  const Expr u6 = bbm_solution(config, 6.0);
  b.set_coord(config.peak + 6.0 * speed);
  EXPECT_NEAR(evaluate(u6, b), 1.0, 1e-7);
}

TEST(Experiments, PrecondSingleStageBlockDiagonal) {
  const auto r = run_precond(64, 1, make_collocation(CollocationFamily::RadauIIA, 1),
                             PcChoice::BlockDiagonal, 1.0, 3);
  EXPECT_EQ(r.max_iterations, 1);
}

TEST(Experiments, PrecondDirkBlockLower) {
  const auto r = run_precond(64, 1, make_named(NamedScheme::AlexanderDIRK3),
                             PcChoice::BlockLowerTriangular, 1.0, 3);
  EXPECT_EQ(r.max_iterations, 1);
  EXPECT_EQ(r.stages, 3);
}

TEST(Experiments, PcNames) {
  for (auto pc : {PcChoice::BlockDiagonal, PcChoice::BlockLowerTriangular, PcChoice::None,
                  PcChoice::Direct}) {
    EXPECT_EQ(parse_pc(to_string(pc)), pc);
  }
  EXPECT_THROW(parse_pc("jacobi"), InvalidArgument);
}
