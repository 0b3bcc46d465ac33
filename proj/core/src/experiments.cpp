#include "rkform/experiments.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "rkform/errors.hpp"

namespace rkform {

ButcherTableau parse_scheme(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  int stages = 1;
  if (colon != std::string::npos) {
    try {
      stages = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("parse_scheme: bad stage count in '" + text + "'");
    }
  }
  return make_tableau(name, stages);
}

Csv tableau_report(const ButcherTableau& t) {
  Csv csv({"quantity", "i", "j", "value"});
  const std::string none;
  const int s = t.num_stages();
  csv.add_row({std::string("name"), none, none, t.name()});
  csv.add_row({std::string("class"), none, none, std::string(to_string(classify(t)))});
  csv.add_row({std::string("order"), none, none, static_cast<long>(t.order())});
  csv.add_row({std::string("stage_order"), none, none, static_cast<long>(t.stage_order())});
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) csv.add_row({std::string("A"), long{i}, long{j}, t.A()(i, j)});
  }
  for (int i = 0; i < s; ++i) csv.add_row({std::string("b"), long{i}, none, t.b()[i]});
  for (int i = 0; i < s; ++i) csv.add_row({std::string("c"), long{i}, none, t.c()[i]});
  const auto report = check_order_conditions(t, t.order(), t.stage_order());
  for (const auto& r : report.residuals) {
    csv.add_row({r.condition, none, none, r.residual});
  }
  csv.add_row({std::string("order_conditions_passed"), none, none,
               std::string(report.passed ? "true" : "false")});
  try {
    csv.add_row({std::string("R_inf"), none, none, stability_at_infinity(t)});
  } catch (const SingularMatrix&) {
    csv.add_row({std::string("R_inf"), none, none, std::string("undefined")});
  }
  csv.add_row({std::string("symplecticity_residual"), none, none, symplecticity_residual(t)});
  return csv;
}

Expr heat_exact_solution() {
  return exp(-time_symbol()) * sin(constant(std::numbers::pi) * coordinate());
}

Form heat_form(const Expr& exact) {
  const Expr u = field(0);
  const Expr v = test_function(0);
  const Expr f = diff_time(exact) - grad(grad(exact));
  Form F(1);
  F.add(Dt(u) * v);
  F.add(grad(u) * grad(v));
  F.add(-(f * v));
  return F;
}

namespace {

double relative(double err, double ref) { return ref > 0.0 ? err / ref : err; }

int step_count(double span, double dt) {
  const double ratio = span / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9) {
    throw InvalidArgument("step count is not an integer: span " + format_double(span) +
                          ", dt " + format_double(dt));
  }
  return static_cast<int>(n);
}

}  // namespace

HeatRun run_heat(const Expr& exact, int N, int degree, const ButcherTableau& tableau, double dt,
                 double T, const SolverConfig& solver) {
  const Mesh1D mesh(0.0, 1.0, N);
  auto V = std::make_shared<const FunctionSpace>(mesh, Family::CG, degree);
  Constant t("t", 0.0);
  Constant step("dt", dt);
  std::vector<BoundaryCondition> bcs{{0, BoundaryLocation::LeftEnd, exact},
                                     {0, BoundaryLocation::RightEnd, exact}};
  TimeStepper stepper(heat_form(exact), tableau, {interpolate(exact, V, 0.0)}, t, step, bcs,
                      solver);
  HeatRun run;
  run.N = N;
  run.dt = dt;
  run.cfl = dt * N;
  run.steps = step_count(T, dt);
  long linear_iterations = 0;
  stepper.advance_to(T, [&](double, const auto&, const StepStats& s) {
    linear_iterations += s.linear_iterations;
  });
  const FieldFunction& uh = stepper.fields().front();
  run.l2 = relative(errornorm(exact, uh, Norm::L2, T), exact_norm(exact, mesh, degree, Norm::L2, T));
  run.h1 = relative(errornorm(exact, uh, Norm::H1, T), exact_norm(exact, mesh, degree, Norm::H1, T));
  SymbolBindings b;
  b.set_time(T);
  for (auto loc : {BoundaryLocation::LeftEnd, BoundaryLocation::RightEnd}) {
    const int d = V->boundary_dof(loc);
    b.set_coord(V->dof_coordinates()[d]);
    run.bc_drift = std::max(run.bc_drift, std::abs(uh.coefficients[d] - evaluate(exact, b)));
  }
  run.avg_linear_iterations = run.steps ? static_cast<double>(linear_iterations) / run.steps : 0.0;
  return run;
}

Csv heat_study(const Expr& exact, const std::vector<int>& Ns, int degree,
               const ButcherTableau& tableau, const std::vector<double>& cfls, double T,
               const SolverConfig& solver) {
  Csv csv({"N", "cfl", "dt", "l2", "h1", "bc_drift"});
  for (double cfl : cfls) {
    for (int N : Ns) {
      const HeatRun r = run_heat(exact, N, degree, tableau, cfl / N, T, solver);
      csv.add_row({long{N}, cfl, r.dt, r.l2, r.h1, r.bc_drift});
    }
  }
  return csv;
}

double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) {
    throw InvalidArgument("observed_order: need at least two matching samples");
  }
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Form wave_form() {
  const Expr u = field(0);
  const Expr sigma = field(1);
  const Expr v = test_function(0);
  const Expr w = test_function(1);
  Form F(2);
  F.add(Dt(u) * v);
  F.add(grad(sigma) * v);
  F.add(Dt(sigma) * w);
  F.add(-(u * grad(w)));
  return F;
}

WaveRun run_wave(int N, int degree, const ButcherTableau& tableau, double dt, double T,
                 const SolverConfig& solver) {
  if (degree < 1) throw InvalidArgument("run_wave: degree must be >= 1");
  const Mesh1D mesh(0.0, 1.0, N);
  auto Vu = std::make_shared<const FunctionSpace>(mesh, Family::DG, degree - 1);
  auto Vs = std::make_shared<const FunctionSpace>(mesh, Family::CG, degree);
  const BlockLayout single({Vu, Vs});
  const Expr energy_density = constant(0.5) * (pow(field(0), 2) + pow(field(1), 2));
  auto energy = [&](const Vector& state) {
    AssemblyState s;
    s.fields = &state;
    return assemble_functional(energy_density, single, s);
  };

  Constant t("t", 0.0);
  Constant step("dt", dt);
  std::vector<FieldFunction> initial{
      interpolate(sin(constant(std::numbers::pi) * coordinate()), Vu), FieldFunction(Vs)};
  TimeStepper stepper(wave_form(), tableau, std::move(initial), t, step, {}, solver);
  const double e0 = energy(stepper.state());

  WaveRun run;
  run.dt = dt;
  run.steps = step_count(T, dt);
  long total = 0;
  stepper.advance_to(T, [&](double, const auto&, const StepStats& s) {
    total += s.linear_iterations;
    run.max_linear_iterations = std::max(run.max_linear_iterations, s.linear_iterations);
  });
  run.final_state = stepper.state();
  run.energy_ratio = energy(run.final_state) / e0;
  run.avg_linear_iterations = run.steps ? static_cast<double>(total) / run.steps : 0.0;
  return run;
}

Form bbm_form() {
  const Expr u = field(0);
  const Expr v = test_function(0);
  Form F(1);
  F.add(Dt(u) * v);
  F.add(grad(u) * v);
  F.add(u * grad(u) * v);
  F.add(grad(Dt(u)) * grad(v));
  return F;
}

Expr bbm_solution(const BbmConfig& config, double t) {
  const double c = config.c;
  const double amplitude = 3.0 * c * c / (1.0 - c * c);
  const double delta = -c * config.peak;
  const double speed = 1.0 / (1.0 - c * c);
  std::vector<Expr> images;
  for (int m = -1; m <= 1; ++m) {
    const Expr xi = coordinate() + constant(m * config.length - speed * t);
    const Expr arg = constant(0.5) * (constant(c) * xi + constant(delta));
    images.push_back(constant(amplitude) * pow(sech(arg), 2));
  }
  return sum(std::move(images));
}

std::vector<Expr> bbm_invariants() {
  const Expr u = field(0);
  const Expr ux = grad(u);
  return {u, pow(u, 2) + pow(ux, 2), pow(ux, 2) + constant(1.0 / 3.0) * pow(u, 3)};
}

BbmRun run_bbm(const BbmConfig& config, const ButcherTableau& tableau) {
  const Mesh1D mesh(0.0, config.length, config.N, true);
  auto V = std::make_shared<const FunctionSpace>(mesh, Family::CG, 1);
  const BlockLayout single({V});
  const auto invariants = bbm_invariants();
  const double dt = config.dt_factor * mesh.h();

  Constant t("t", 0.0);
  Constant step("dt", dt);
  TimeStepper stepper(bbm_form(), tableau, {interpolate(bbm_solution(config, 0.0), V)}, t, step,
                      {}, config.solver);

  BbmRun run;
  int newton_since = 0;
  auto record = [&](double time) {
    const Vector state = stepper.state();
    AssemblyState s;
    s.fields = &state;
    BbmRecord r;
    r.t = time;
    r.I1 = assemble_functional(invariants[0], single, s);
    r.I2 = assemble_functional(invariants[1], single, s);
    r.I3 = assemble_functional(invariants[2], single, s);
    const Expr exact = bbm_solution(config, time);
    r.rel_l2 = errornorm(exact, stepper.fields().front(), Norm::L2) /
               exact_norm(exact, mesh, 1, Norm::L2);
    r.newton_iterations = newton_since;
    newton_since = 0;
    run.records.push_back(r);
  };
  record(0.0);
  double current = 0.0;
  for (double target : config.report_times) {
    if (target > config.T + 1e-12) break;
    step_count(target - current, dt);
    stepper.advance_to(target, [&](double, const auto&, const StepStats& s) {
      newton_since = std::max(newton_since, s.newton_iterations);
      run.max_newton_iterations = std::max(run.max_newton_iterations, s.newton_iterations);
    });
    record(target);
    current = target;
  }
  if (current < config.T) {
    stepper.advance_to(config.T, [&](double, const auto&, const StepStats& s) {
      newton_since = std::max(newton_since, s.newton_iterations);
      run.max_newton_iterations = std::max(run.max_newton_iterations, s.newton_iterations);
    });
    record(config.T);
  }
  run.final_field = stepper.fields().front();
  return run;
}

PcChoice parse_pc(const std::string& name) {
  if (name == "blockdiag") return PcChoice::BlockDiagonal;
  if (name == "blocktri") return PcChoice::BlockLowerTriangular;
  if (name == "none") return PcChoice::None;
  if (name == "direct") return PcChoice::Direct;
  throw InvalidArgument("unknown preconditioner '" + name +
                        "' (expected blockdiag, blocktri, none or direct)");
}

std::string to_string(PcChoice pc) {
  switch (pc) {
    case PcChoice::BlockDiagonal:
      return "blockdiag";
    case PcChoice::BlockLowerTriangular:
      return "blocktri";
    case PcChoice::None:
      return "none";
    case PcChoice::Direct:
      return "direct";
  }
  return "?";
}

SolverConfig solver_config(PcChoice pc, double rtol) {
  SolverConfig solver;
  solver.linear.rtol = rtol;
  switch (pc) {
    case PcChoice::Direct:
      solver.linear.method = LinearMethod::Direct;
      break;
    case PcChoice::BlockDiagonal:
      solver.linear.method = LinearMethod::Gmres;
      solver.linear.pc = PcKind::BlockDiagonal;
      break;
    case PcChoice::BlockLowerTriangular:
      solver.linear.method = LinearMethod::Gmres;
      solver.linear.pc = PcKind::BlockLowerTriangular;
      break;
    case PcChoice::None:
      solver.linear.method = LinearMethod::Gmres;
      solver.linear.pc = PcKind::None;
      break;
  }
  return solver;
}

PrecondRun run_precond(int N, int degree, const ButcherTableau& tableau, PcChoice pc, double cfl,
                       int steps, double rtol) {
  const SolverConfig solver = solver_config(pc, rtol);
  const Expr exact = heat_exact_solution();
  const Mesh1D mesh(0.0, 1.0, N);
  auto V = std::make_shared<const FunctionSpace>(mesh, Family::CG, degree);
  Constant t("t", 0.0);
  Constant step("dt", cfl / N);
  std::vector<BoundaryCondition> bcs{{0, BoundaryLocation::LeftEnd, exact},
                                     {0, BoundaryLocation::RightEnd, exact}};
  const auto start = std::chrono::steady_clock::now();
  TimeStepper stepper(heat_form(exact), tableau, {interpolate(exact, V)}, t, step, bcs, solver);
  PrecondRun run;
  run.N = N;
  run.stages = tableau.num_stages();
  long total = 0;
  for (int n = 0; n < steps; ++n) {
    const StepStats s = stepper.step();
    total += s.linear_iterations;
    run.max_iterations = std::max(run.max_iterations, s.linear_iterations);
  }
  run.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.avg_iterations = steps ? static_cast<double>(total) / steps : 0.0;
  return run;
}

}  // namespace rkform
