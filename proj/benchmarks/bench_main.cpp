#include <benchmark/benchmark.h>

#include "rkform/experiments.hpp"
#include "rkform/stepper.hpp"

using namespace rkform;

namespace {

std::pair<SparseMatrix, SparseMatrix> heat_pair(int N) {
  auto V = std::make_shared<const FunctionSpace>(Mesh1D(0, 1, N), Family::CG, 1);
  return mass_and_stiffness(heat_form(constant(0.0)), BlockLayout({V}));
}

void BM_TableauRadau(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_collocation(CollocationFamily::RadauIIA, s));
  }
}
BENCHMARK(BM_TableauRadau)->DenseRange(1, 8);

void BM_KronApply(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  auto [M, K] = heat_pair(N);
  const KronOperator op(make_collocation(CollocationFamily::RadauIIA, s).A(), Constant("dt", 0.01),
                        M, K, {0, N});
  const Vector x = Vector::LinSpaced(op.size(), 0.0, 1.0);
  Vector y;
  for (auto _ : state) {
    op.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * op.size());
}
BENCHMARK(BM_KronApply)->ArgsProduct({{256, 4096}, {1, 2, 3}});

void BM_AssembledApply(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  auto [M, K] = heat_pair(N);
  const KronOperator op(make_collocation(CollocationFamily::RadauIIA, s).A(), Constant("dt", 0.01),
                        M, K, {0, N});
  const SparseMatrix J = op.assemble();
  const Vector x = Vector::LinSpaced(op.size(), 0.0, 1.0);
  Vector y;
  for (auto _ : state) {
    J.multiply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * op.size());
}
BENCHMARK(BM_AssembledApply)->ArgsProduct({{256, 4096}, {1, 2, 3}});

void BM_BlockDiagonalPcApply(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  auto [M, K] = heat_pair(N);
  const auto bt = make_collocation(CollocationFamily::RadauIIA, 2);
  const auto pc = make_block_diag_pc(M, K, bt, 1.0 / N);
  const Vector x = Vector::LinSpaced(2 * M.rows(), 0.0, 1.0);
  Vector y;
  for (auto _ : state) {
    pc.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_BlockDiagonalPcApply)->Arg(256)->Arg(4096);

void BM_StageJacobianAssembly(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  auto V = std::make_shared<const FunctionSpace>(Mesh1D(0, 100, N, true), Family::CG, 1);
  const auto bt = make_collocation(CollocationFamily::GaussLegendre, 2);
  Constant t("t", 0.0);
  Constant dt("dt", 0.1);
  const auto problem = get_stage_form(bbm_form(), bt, {}, t, dt);
  const BlockLayout layout = BlockLayout({V}).with_stages(2);
  const CompiledForm jac(gateaux(problem.stage_form, stage_perturbations(1, 2)), layout);
  const Vector u = Vector::LinSpaced(layout.block_size(), 0.0, 1.0);
  const Vector k = Vector::LinSpaced(layout.size(), -1.0, 1.0);
  AssemblyState st;
  st.fields = &u;
  st.stages = &k;
  for (auto _ : state) benchmark::DoNotOptimize(jac.matrix(st));
}
BENCHMARK(BM_StageJacobianAssembly)->Arg(1000);

void BM_BbmStep(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  BbmConfig config;
  auto V = std::make_shared<const FunctionSpace>(Mesh1D(0, config.length, config.N, true),
                                                 Family::CG, 1);
  Constant t("t", 0.0);
  Constant dt("dt", 0.1 * (s == 1 ? 1.0 : 10.0));
  TimeStepper stepper(bbm_form(), make_collocation(CollocationFamily::GaussLegendre, s),
                      {interpolate(bbm_solution(config, 0.0), V)}, t, dt);
  for (auto _ : state) benchmark::DoNotOptimize(stepper.step());
}
BENCHMARK(BM_BbmStep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
