// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances and runtime budgets are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rkform/experiments.hpp"
#include "rkform/stepper.hpp"

using namespace rkform;

namespace {

struct Outcome {
  bool pass{true};
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void note(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += "[x] ";
  }
  o.detail += what + "; ";
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

SpacePtr scalar_space() {
  return std::make_shared<const FunctionSpace>(Mesh1D(0, 1, 1), Family::DG, 0);
}

// ---------------------------------------------------------------- 1
Outcome tableaux() {
  Outcome o;
  double worst_cond = 0.0, worst_identity = 0.0, worst_rinf = 0.0;
  for (int s = 1; s <= 5; ++s) {
    std::vector<ButcherTableau> ts{make_collocation(CollocationFamily::GaussLegendre, s),
                                   make_collocation(CollocationFamily::RadauIIA, s)};
    if (s >= 2) {
      ts.push_back(make_collocation(CollocationFamily::LobattoIIIA, s));
      ts.push_back(make_lobatto_iiic(s));
    }
    for (const auto& t : ts) {
      const auto report = check_order_conditions(t, t.order(), t.stage_order());
      worst_cond = std::max(worst_cond, report.max_residual());
      if (!report.passed) note(o, false, t.name() + " order conditions");
    }
    const auto radau = make_collocation(CollocationFamily::RadauIIA, s);
    worst_identity = std::max(worst_identity, max_abs(radau.A().row(s - 1).transpose() - radau.b()));
    worst_rinf = std::max(worst_rinf, std::abs(stability_at_infinity(radau)));
    if (s >= 2) {
      const auto iiic = make_lobatto_iiic(s);
      worst_identity = std::max(
          worst_identity, max_abs(iiic.A().col(0) - Eigen::VectorXd::Constant(s, iiic.b()[0])));
      worst_rinf = std::max(worst_rinf, std::abs(stability_at_infinity(iiic)));
    }
  }
  note(o, worst_cond <= 1e-10, "max B/C residual " + fmt("%.2e", worst_cond));
  note(o, worst_identity <= 1e-12, "row/column identities " + fmt("%.2e", worst_identity));
  note(o, worst_rinf <= 1e-12, "|R(inf)| " + fmt("%.2e", worst_rinf));
  return o;
}

// ---------------------------------------------------------------- 2
Outcome rewrite_equivalence() {
  Outcome o;
  auto V = std::make_shared<const FunctionSpace>(Mesh1D(0, 1, 16), Family::CG, 1);
  const Form F = heat_form(heat_exact_solution());
  const BlockLayout single({V});
  // Independent oracle: mass and stiffness assembled from hand-written forms.
  Form mass(1), stiff(1);
  mass.add(trial(0) * test_function(0));
  stiff.add(grad(trial(0)) * grad(test_function(0)));
  const Eigen::MatrixXd M = assemble_matrix(mass, single).to_dense();
  const Eigen::MatrixXd K = assemble_matrix(stiff, single).to_dense();
  const double dtv = 0.05;
  double worst = 0.0;
  for (const auto& bt : {make_collocation(CollocationFamily::RadauIIA, 1),
                         make_collocation(CollocationFamily::RadauIIA, 2),
                         make_collocation(CollocationFamily::GaussLegendre, 1),
                         make_collocation(CollocationFamily::GaussLegendre, 2),
                         make_lobatto_iiic(2)}) {
    Constant t("t", 0.3);
    Constant dt("dt", dtv);
    const auto problem = get_stage_form(F, bt, {}, t, dt);
    const BlockLayout layout = single.with_stages(bt.num_stages());
    const Vector u = Vector::Random(layout.block_size());
    const auto op = build_stage_operator(F, problem, layout, u, false);
    const int s = bt.num_stages();
    const int n = static_cast<int>(M.rows());
    Eigen::MatrixXd oracle(s * n, s * n);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        oracle.block(i * n, j * n, n, n) = (i == j ? M : Eigen::MatrixXd::Zero(n, n)) +
                                           dtv * bt.A()(i, j) * K;
      }
    }
    worst = std::max(worst, max_abs(op.assembled->to_dense() - oracle));
  }
  note(o, worst <= 1e-12, "max entry difference " + fmt("%.2e", worst));
  return o;
}

// ---------------------------------------------------------------- 3
std::vector<ButcherTableau> implemented_tableaux() {
  std::vector<ButcherTableau> out;
  for (int s = 1; s <= 5; ++s) {
    out.push_back(make_collocation(CollocationFamily::GaussLegendre, s));
    out.push_back(make_collocation(CollocationFamily::RadauIIA, s));
    if (s >= 2) {
      out.push_back(make_collocation(CollocationFamily::LobattoIIIA, s));
      out.push_back(make_lobatto_iiic(s));
    }
  }
  for (auto n : {NamedScheme::ForwardEuler, NamedScheme::ExplicitMidpoint, NamedScheme::RK4,
                 NamedScheme::SSP33, NamedScheme::QinZhang, NamedScheme::AlexanderDIRK2,
                 NamedScheme::AlexanderDIRK3}) {
    out.push_back(make_named(n));
  }
  return out;
}

Outcome linear_exactness() {
  Outcome o;
  const int n = 5;
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd R(n, n), S(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      R(i, j) = dist(gen);
      S(i, j) = dist(gen);
    }
  }
  const Eigen::MatrixXd L = -(R * R.transpose() + Eigen::MatrixXd::Identity(n, n)) + (S - S.transpose());
  Eigen::VectorXd u0(n);
  for (int i = 0; i < n; ++i) u0[i] = dist(gen);
  const double dtv = 0.1;
  Form F(n);
  for (int f = 0; f < n; ++f) {
    F.add(Dt(field(f)) * test_function(f));
    for (int g = 0; g < n; ++g) F.add(constant(-L(f, g)) * field(g) * test_function(f));
  }
  double worst = 0.0;
  for (const auto& bt : implemented_tableaux()) {
    const int s = bt.num_stages();
    // R(Z) = 1 + b^T (I - A (x) Z)^{-1} (1 (x) Z) applied to u0, formed densely.
    const Eigen::MatrixXd Z = dtv * L;
    Eigen::MatrixXd big = Eigen::MatrixXd::Identity(s * n, s * n);
    Eigen::VectorXd rhs(s * n);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) big.block(i * n, j * n, n, n) -= bt.A()(i, j) * Z;
      rhs.segment(i * n, n) = Z * u0;
    }
    const Eigen::VectorXd stages = big.fullPivLu().solve(rhs);
    Eigen::VectorXd expected = u0;
    for (int i = 0; i < s; ++i) expected += bt.b()[i] * stages.segment(i * n, n);

    std::vector<FieldFunction> initial;
    for (int f = 0; f < n; ++f) initial.push_back(interpolate(constant(u0[f]), scalar_space()));
    Constant t("t", 0.0);
    Constant dt("dt", dtv);
    TimeStepper stepper(F, bt, initial, t, dt);
    stepper.step();
    const double err = (stepper.state() - expected).cwiseAbs().maxCoeff();
    if (err > 1e-12) note(o, false, bt.name() + " " + fmt("%.2e", err));
    worst = std::max(worst, err);
  }
  note(o, worst <= 1e-12, "max deviation from R(dt L) u0 " + fmt("%.2e", worst));
  return o;
}

// ---------------------------------------------------------------- 4
Outcome ode_orders() {
  Outcome o;
  Form F(1);
  F.add(Dt(field(0)) * test_function(0) + field(0) * test_function(0));
  const std::vector<double> dts{0.1, 0.05, 0.025};
  for (const auto& bt : {make_collocation(CollocationFamily::GaussLegendre, 1),
                         make_collocation(CollocationFamily::GaussLegendre, 2),
                         make_collocation(CollocationFamily::RadauIIA, 1),
                         make_collocation(CollocationFamily::RadauIIA, 2),
                         make_named(NamedScheme::RK4), make_named(NamedScheme::QinZhang)}) {
    std::vector<double> errs;
    for (double h : dts) {
      Constant t("t", 0.0);
      Constant dt("dt", h);
      TimeStepper stepper(F, bt, {interpolate(constant(1.0), scalar_space())}, t, dt);
      stepper.advance_to(1.0);
      errs.push_back(std::abs(stepper.state()[0] - std::exp(-1.0)));
    }
    const double p = observed_order(dts, errs);
    note(o, std::abs(p - bt.order()) <= 0.2,
         bt.name() + " " + fmt("%.3f", p) + "/" + std::to_string(bt.order()));
  }
  return o;
}

// ---------------------------------------------------------------- 5
Outcome heat_orders() {
  Outcome o;
  const std::vector<int> Ns{8, 16, 32, 64, 128};
  std::vector<double> hs;
  for (int N : Ns) hs.push_back(1.0 / N);
  const Expr exact = heat_exact_solution();
  auto order = [&](const ButcherTableau& bt, double cfl) {
    std::vector<double> errs;
    for (int N : Ns) errs.push_back(run_heat(exact, N, 3, bt, cfl / N, 2.0).l2);
    return observed_order(hs, errs);
  };
  const double small_cfl = 1.0;
  const double large_cfl = 16.0;
  const double radau = order(make_collocation(CollocationFamily::RadauIIA, 3), small_cfl);
  note(o, radau >= 3.7, "RadauIIA(3) cfl 1 order " + fmt("%.3f", radau));
  const auto gl2 = make_collocation(CollocationFamily::GaussLegendre, 2);
  const double gl_small = order(gl2, small_cfl);
  const double gl_large = order(gl2, large_cfl);
  note(o, gl_small - gl_large >= 0.5,
       "GL(2) order cfl 1 " + fmt("%.3f", gl_small) + ", cfl 16 " + fmt("%.3f", gl_large));
  return o;
}

// ---------------------------------------------------------------- 6
Outcome wave_energy() {
  Outcome o;
  for (int s = 1; s <= 2; ++s) {
    for (double dt : {0.1, 0.5, 1.0}) {
      const auto r = run_wave(10, 2, make_collocation(CollocationFamily::GaussLegendre, s), dt, 10.0);
      note(o, std::abs(r.energy_ratio - 1.0) <= 1e-9,
           "GL(" + std::to_string(s) + ") dt " + fmt("%g", dt) + " |ratio-1| " +
               fmt("%.2e", std::abs(r.energy_ratio - 1.0)));
    }
  }
  for (const auto& bt : {make_collocation(CollocationFamily::RadauIIA, 1),
                         make_collocation(CollocationFamily::RadauIIA, 2), make_lobatto_iiic(2),
                         make_lobatto_iiic(3)}) {
    const auto r = run_wave(10, 2, bt, 0.5, 10.0);
    note(o, r.energy_ratio < 0.999, bt.name() + " ratio " + fmt("%.6f", r.energy_ratio));
  }
  return o;
}

// ---------------------------------------------------------------- 7
Outcome bbm() {
  Outcome o;
  struct Case {
    ButcherTableau bt;
    double factor;
    double i3_tol;
  };
  for (const auto& c : {Case{make_collocation(CollocationFamily::GaussLegendre, 1), 1.0, 2e-2},
                        Case{make_collocation(CollocationFamily::GaussLegendre, 2), 10.0, 5e-6}}) {
    BbmConfig config;
    config.dt_factor = c.factor;
    const auto run = run_bbm(config, c.bt);
    const auto& first = run.records.front();
    const auto& last = run.records.back();
    double drift12 = 0.0;
    for (const auto& rec : run.records) {
      drift12 = std::max({drift12, std::abs(rec.I1 / first.I1 - 1.0), std::abs(rec.I2 / first.I2 - 1.0)});
    }
    const double i3 = std::abs(last.I3 / first.I3 - 1.0);
    note(o, last.t == 18.0 && last.rel_l2 <= 5e-3,
         c.bt.name() + " error " + fmt("%.4f%%", 100.0 * last.rel_l2));
    note(o, drift12 <= 1e-9, c.bt.name() + " I1/I2 drift " + fmt("%.2e", drift12));
    note(o, i3 <= c.i3_tol, c.bt.name() + " I3 ratio " + fmt("%.7f", last.I3 / first.I3));
    // Informational only: int u^2 + u^3/3, the cubic functional conserved by the equation.
    const Expr hamiltonian = pow(field(0), 2) + constant(1.0 / 3.0) * pow(field(0), 3);
    const auto V = run.final_field->space;
    const BlockLayout layout({V});
    const Vector u0 = interpolate(bbm_solution(config, 0.0), V).coefficients;
    const Vector& uT = run.final_field->coefficients;
    AssemblyState s0, sT;
    s0.fields = &u0;
    sT.fields = &uT;
    o.detail += "info " + c.bt.name() + " int u^2+u^3/3 ratio " +
                fmt("%.9f", assemble_functional(hamiltonian, layout, sT) /
                                assemble_functional(hamiltonian, layout, s0)) + "; ";
  }
  return o;
}

// ---------------------------------------------------------------- 8
Outcome dirk_substitution() {
  Outcome o;
  const auto bt = make_named(NamedScheme::QinZhang);
  SolverConfig krylov;
  krylov.linear.method = LinearMethod::Gmres;
  krylov.linear.pc = PcKind::BlockLowerTriangular;
  const auto iterative = run_wave(10, 2, bt, 0.5, 10.0, krylov);
  SolverConfig direct;
  direct.linear.method = LinearMethod::Direct;
  const auto exact = run_wave(10, 2, bt, 0.5, 10.0, direct);
  note(o, iterative.max_linear_iterations == 1 && iterative.avg_linear_iterations == 1.0,
       "GMRES iterations per step max " + std::to_string(iterative.max_linear_iterations));
  const double diff = (iterative.final_state - exact.final_state).cwiseAbs().maxCoeff();
  note(o, diff <= 1e-10, "difference from direct solve " + fmt("%.2e", diff));
  return o;
}

// ---------------------------------------------------------------- 9
Outcome mesh_independence() {
  Outcome o;
  const auto bt = make_collocation(CollocationFamily::RadauIIA, 2);
  const double cfl = 1.0;
  const int steps = 5;
  std::string counts;
  double at64 = 0.0, at1024 = 0.0;
  for (int N : {64, 256, 1024}) {
    const auto r = run_precond(N, 1, bt, PcChoice::BlockDiagonal, cfl, steps, 1e-8);
    counts += "N=" + std::to_string(N) + ":" + fmt("%.2f", r.avg_iterations) + " ";
    if (N == 64) at64 = r.avg_iterations;
    if (N == 1024) at1024 = r.avg_iterations;
  }
  note(o, at1024 <= 2.0 * at64 && at1024 <= 25.0, "average iterations " + counts);
  return o;
}

// ---------------------------------------------------------------- 10
Outcome jacobian_check() {
  Outcome o;
  auto V = std::make_shared<const FunctionSpace>(Mesh1D(0, 100, 16, true), Family::CG, 1);
  const auto bt = make_collocation(CollocationFamily::GaussLegendre, 2);
  Constant t("t", 0.0);
  Constant dt("dt", 0.7);
  const auto problem = get_stage_form(bbm_form(), bt, {}, t, dt);
  const BlockLayout layout = BlockLayout({V}).with_stages(bt.num_stages());
  const Form jac = gateaux(problem.stage_form, stage_perturbations(1, bt.num_stages()));
  std::mt19937 gen(7);
  std::normal_distribution<double> dist;
  Vector u(layout.block_size()), k(layout.size()), d(layout.size());
  for (auto& x : u) x = dist(gen);
  for (auto& x : k) x = dist(gen);
  for (auto& x : d) x = dist(gen);
  auto residual = [&](const Vector& kk) {
    AssemblyState s;
    s.fields = &u;
    s.stages = &kk;
    return assemble_residual(problem.stage_form, layout, s);
  };
  AssemblyState s;
  s.fields = &u;
  s.stages = &k;
  const Vector Jd = assemble_matrix(jac, layout, s) * d;
  const double h = 1e-7;
  const Vector fd = (residual(k + h * d) - residual(k - h * d)) / (2.0 * h);
  const double rel = (Jd - fd).norm() / Jd.norm();
  note(o, rel <= 1e-6, "relative error " + fmt("%.2e", rel));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "tableau correctness", 1.0, tableaux},
      {2, "rewrite equivalence", 1.0, rewrite_equivalence},
      {3, "linear exactness", 1.0, linear_exactness},
      {4, "ODE convergence orders", 1.0, ode_orders},
      {5, "heat convergence and order reduction", 120.0, heat_orders},
      {6, "wave energy", 60.0, wave_energy},
      {7, "BBM solitary wave", 600.0, bbm},
      {8, "DIRK forward substitution", 60.0, dirk_substitution},
      {9, "preconditioner mesh independence", 120.0, mesh_independence},
      {10, "Newton Jacobian check", 1.0, jacobian_check},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "[x] over time budget; ";
    }
    std::printf("%s %2d %s: %s(%.2f s, budget %g s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
