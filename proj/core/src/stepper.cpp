#include "rkform/stepper.hpp"

#include <cmath>
#include <cstdio>

#include "rkform/errors.hpp"

namespace rkform {

namespace {

bool references_state(const Node& n) {
  return n.kind == NodeKind::Field || n.kind == NodeKind::TimeDeriv ||
         n.kind == NodeKind::Stage || n.kind == NodeKind::Time;
}

bool references_stage(const Node& n) { return n.kind == NodeKind::Stage; }

Vector concat(const std::vector<FieldFunction>& fields, const BlockLayout& layout) {
  Vector u(layout.block_size());
  for (int f = 0; f < layout.num_fields(); ++f) {
    u.segment(layout.offset(f), layout.space(f).dof_count()) = fields[f].coefficients;
  }
  return u;
}

struct BcRow {
  int row;        // in the stage-major system
  int block_row;  // inside one stage block
  double x;
  Expr value;
};

std::vector<BcRow> stage_bc_rows(const StageProblem& problem, const BlockLayout& layout) {
  std::vector<BcRow> rows;
  for (const auto& bc : problem.stage_bcs) {
    const auto& space = layout.space(bc.field);
    const int dof = space.boundary_dof(bc.location);
    rows.push_back({layout.index(bc.field, bc.stage, dof), layout.offset(bc.field) + dof,
                    space.dof_coordinates()[dof], bc.value});
  }
  return rows;
}

std::vector<int> block_rows(const std::vector<BcRow>& rows, const BlockLayout& layout) {
  std::vector<int> out;
  for (const auto& r : rows) {
    if (r.row < layout.block_size()) out.push_back(r.block_row);
  }
  return out;
}

std::vector<int> all_rows(const std::vector<BcRow>& rows) {
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(r.row);
  return out;
}

double bc_value(const BcRow& r, double t) {
  SymbolBindings b;
  b.set_time(t).set_coord(r.x);
  return evaluate(r.value, b);
}

}  // namespace

bool kronecker_eligible(const Form& semidiscrete) {
  const int nf = semidiscrete.num_fields();
  const Form M = gateaux(semidiscrete, field_perturbations(nf, true));
  const Form K = gateaux(semidiscrete, field_perturbations(nf, false));
  return !form_contains(M, references_state) && !form_contains(K, references_state);
}

std::pair<SparseMatrix, SparseMatrix> mass_and_stiffness(const Form& semidiscrete,
                                                         const BlockLayout& layout) {
  if (layout.num_stages() != 1) throw InvalidArgument("mass_and_stiffness: need a one-stage layout");
  const int nf = semidiscrete.num_fields();
  const Form M = gateaux(semidiscrete, field_perturbations(nf, true));
  const Form K = gateaux(semidiscrete, field_perturbations(nf, false));
  auto assemble = [&](const Form& f) {
    if (f.empty()) return SparseMatrix(layout.size(), layout.size());
    return assemble_matrix(f, layout);
  };
  return {assemble(M), assemble(K)};
}

int StageOperator::size() const { return kron ? kron->size() : assembled->rows(); }

LinearMap StageOperator::as_map() const {
  if (kron) return kron->as_map();
  const SparseMatrix* J = &*assembled;
  return [J](const Vector& x, Vector& y) { J->multiply(x, y); };
}

StageOperator build_stage_operator(const Form& semidiscrete, const StageProblem& problem,
                                   const BlockLayout& layout, const Vector& fields,
                                   bool prefer_kron) {
  const auto rows = stage_bc_rows(problem, layout);
  const Form jac = gateaux(problem.stage_form,
                           stage_perturbations(problem.num_fields(), problem.num_stages()));
  if (form_contains(jac, references_stage)) {
    throw InvalidArgument("build_stage_operator: stage form is nonlinear in the stages");
  }
  StageOperator op;
  if (prefer_kron && kronecker_eligible(semidiscrete)) {
    auto [M, K] = mass_and_stiffness(semidiscrete, layout.with_stages(1));
    op.kron.emplace(problem.tableau.A(), problem.dt, std::move(M), std::move(K),
                    block_rows(rows, layout));
    return op;
  }
  AssemblyState state;
  state.fields = &fields;
  state.time = problem.t.value();
  op.assembled = assemble_matrix(jac, layout, state).with_identity_rows(all_rows(rows));
  return op;
}

struct TimeStepper::Impl {
  Form semidiscrete;
  StageProblem problem;
  BlockLayout layout;
  SolverConfig config;
  std::vector<FieldFunction> fields;
  CompiledForm residual_form;
  CompiledForm jacobian_form;
  std::vector<BcRow> bcs;
  std::vector<int> bc_rows;
  bool linear;
  bool constant_jacobian;
  bool kron;
  Vector stages;

  // Reused while dt is unchanged (constant Jacobians only).
  std::optional<double> cached_dt;
  std::optional<SparseMatrix> cached_matrix;
  std::shared_ptr<const DirectSolver> cached_lu;
  std::optional<BlockPreconditioner> cached_pc;
  std::optional<KronOperator> kron_op;

  Impl(Form form, StageProblem p, BlockLayout l, SolverConfig c, std::vector<FieldFunction> f,
       Form jac)
      : semidiscrete(std::move(form)),
        problem(std::move(p)),
        layout(std::move(l)),
        config(c),
        fields(std::move(f)),
        residual_form(problem.stage_form, layout),
        jacobian_form(jac, layout),
        bcs(stage_bc_rows(problem, layout)),
        bc_rows(all_rows(bcs)),
        linear(!form_contains(jac, references_stage)),
        constant_jacobian(linear && !form_contains(jac, references_state)),
        kron(linear && config.linear.method == LinearMethod::Gmres && config.use_kron &&
             kronecker_eligible(semidiscrete)),
        stages(Vector::Zero(layout.size())) {}

  Vector stage_residual(const Vector& u, const Vector& k, double t) const {
    AssemblyState state;
    state.fields = &u;
    state.stages = &k;
    state.time = t;
    Vector r = residual_form.residual(state);
    for (const auto& bc : bcs) r[bc.row] = k[bc.row] - bc_value(bc, t);
    return r;
  }

  SparseMatrix stage_jacobian(const Vector& u, const Vector& k, double t) const {
    AssemblyState state;
    state.fields = &u;
    state.stages = &k;
    state.time = t;
    return jacobian_form.matrix(state).with_identity_rows(bc_rows);
  }

  void refresh_cache(double dt) {
    if (cached_dt && *cached_dt == dt) return;
    cached_dt = dt;
    cached_matrix.reset();
    cached_lu.reset();
    cached_pc.reset();
    kron_op.reset();
  }

  GmresResult run_gmres(const LinearMap& op, const Vector& rhs, const BlockPreconditioner& pc) const {
    return gmres(op, rhs, pc.as_map(), config.linear.rtol, config.linear.max_iterations);
  }

  // k solving the linear stage system; fills stats.
  Vector solve_linear(const Vector& u, double t, StepStats& stats) {
    const Vector zero = Vector::Zero(layout.size());
    Vector rhs = -stage_residual(u, zero, t);  // BC rows become g
    const bool cache = constant_jacobian;
    if (cache) refresh_cache(problem.dt.value());
    stats.newton_iterations = 1;

    if (kron) {
      if (!kron_op) {
        auto [M, K] = mass_and_stiffness(semidiscrete, layout.with_stages(1));
        kron_op.emplace(problem.tableau.A(), problem.dt, std::move(M), std::move(K),
                        block_rows(bcs, layout));
        cached_pc.reset();
      }
      if (!cached_pc) cached_pc = block_pc_from_kron(*kron_op, config.linear.pc);
      auto res = run_gmres(kron_op->as_map(), rhs, *cached_pc);
      stats.linear_iterations = res.iterations;
      stats.residual = res.relative_residual * rhs.norm();
      if (!cache) {
        kron_op.reset();
        cached_pc.reset();
      }
      return res.x;
    }

    SparseMatrix J = cache && cached_matrix ? *cached_matrix : stage_jacobian(u, zero, t);
    if (cache && !cached_matrix) cached_matrix = J;
    Vector k;
    if (config.linear.method == LinearMethod::Direct) {
      std::shared_ptr<const DirectSolver> lu = cache ? cached_lu : nullptr;
      if (!lu) lu = std::make_shared<const DirectSolver>(J);
      if (cache) cached_lu = lu;
      k = lu->solve(rhs);
    } else {
      std::optional<BlockPreconditioner> pc;
      if (cache && cached_pc) pc = cached_pc;
      if (!pc) pc = block_pc_from_matrix(J, layout.num_stages(), config.linear.pc);
      if (cache) cached_pc = pc;
      auto res = run_gmres([&J](const Vector& x, Vector& y) { J.multiply(x, y); }, rhs, *pc);
      stats.linear_iterations = res.iterations;
      k = std::move(res.x);
    }
    stats.residual = (J * k - rhs).norm();
    return k;
  }

  Vector solve_nonlinear(const Vector& u, double t, StepStats& stats) {
    NewtonOptions opts;
    opts.atol = config.atol;
    opts.rtol = config.rtol;
    opts.max_iterations = config.max_newton_iterations;
    opts.linear = config.linear;
    opts.num_stages = layout.num_stages();
    auto result = newton_solve([&](const Vector& k) { return stage_residual(u, k, t); },
                               [&](const Vector& k) { return stage_jacobian(u, k, t); },
                               Vector::Zero(layout.size()), opts);
    stats.newton_iterations = result.iterations;
    stats.linear_iterations = result.linear_iterations;
    stats.residual = result.residual_norm;
    return std::move(result.x);
  }
};

TimeStepper::TimeStepper(const Form& semidiscrete, const ButcherTableau& tableau,
                         std::vector<FieldFunction> initial, Constant t, Constant dt,
                         std::vector<BoundaryCondition> bcs, SolverConfig config) {
  if (static_cast<int>(initial.size()) != semidiscrete.num_fields()) {
    throw MismatchedFieldCount("TimeStepper: one initial field per unknown is required");
  }
  std::vector<SpacePtr> spaces;
  for (const auto& f : initial) spaces.push_back(f.space);
  BlockLayout layout(spaces, tableau.num_stages());
  StageProblem problem = get_stage_form(semidiscrete, tableau, bcs, t, dt);
  Form jac = gateaux(problem.stage_form,
                     stage_perturbations(problem.num_fields(), problem.num_stages()));
  impl_ = std::make_unique<Impl>(semidiscrete, std::move(problem), std::move(layout), config,
                                 std::move(initial), std::move(jac));
}

TimeStepper::~TimeStepper() = default;
TimeStepper::TimeStepper(TimeStepper&&) noexcept = default;
TimeStepper& TimeStepper::operator=(TimeStepper&&) noexcept = default;

StepStats TimeStepper::step() {
  Impl& m = *impl_;
  const double dt = m.problem.dt.value();
  if (!(dt > 0.0)) throw InvalidArgument("TimeStepper::step: dt must be positive");
  const double t = m.problem.t.value();
  const Vector u = concat(m.fields, m.layout);

  StepStats stats;
  stats.linear = m.linear;
  stats.kron = m.kron;
  Vector k = m.linear ? m.solve_linear(u, t, stats) : m.solve_nonlinear(u, t, stats);

  const auto& b = m.problem.tableau.b();
  const int n = m.layout.block_size();
  Vector increment = Vector::Zero(n);
  for (int i = 0; i < m.layout.num_stages(); ++i) increment += b[i] * k.segment(i * n, n);
  const Vector next = u + dt * increment;

  for (int f = 0; f < m.layout.num_fields(); ++f) {
    m.fields[f].coefficients = next.segment(m.layout.offset(f), m.layout.space(f).dof_count());
  }
  m.stages = std::move(k);
  m.problem.t.assign(t + dt);
  stats.t = t + dt;
  return stats;
}

const std::vector<FieldFunction>& TimeStepper::advance_to(double T, const Callback& callback) {
  const double t0 = time();
  const double dt = impl_->problem.dt.value();
  if (T < t0) throw InvalidArgument("advance_to: T is before the current time");
  const double ratio = (T - t0) / dt;
  const double count = std::round(ratio);
  if (std::abs(ratio - count) > 1e-9) {
    throw InvalidArgument("advance_to: (T - t) / dt is not an integer");
  }
  for (long n = 0; n < static_cast<long>(count); ++n) {
    const StepStats stats = step();
    if (callback) callback(stats.t, impl_->fields, stats);
  }
  return impl_->fields;
}

const std::vector<FieldFunction>& TimeStepper::fields() const { return impl_->fields; }
Vector TimeStepper::state() const { return concat(impl_->fields, impl_->layout); }
const Vector& TimeStepper::last_stages() const { return impl_->stages; }
const StageProblem& TimeStepper::problem() const { return impl_->problem; }
const BlockLayout& TimeStepper::layout() const { return impl_->layout; }
double TimeStepper::time() const { return impl_->problem.t.value(); }
bool TimeStepper::is_linear() const { return impl_->linear; }
bool TimeStepper::uses_kron() const { return impl_->kron; }

void write_telemetry_csv(std::ostream& os, const std::vector<StepStats>& stats,
                         const std::vector<std::string>& extra_names,
                         const std::vector<std::vector<double>>& extra_values) {
  os << "t,newton_iterations,linear_iterations,residual";
  for (const auto& name : extra_names) os << ',' << name;
  os << '\n';
  char buf[64];
  for (std::size_t r = 0; r < stats.size(); ++r) {
    const auto& s = stats[r];
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf << ',' << s.newton_iterations << ',' << s.linear_iterations;
    std::snprintf(buf, sizeof buf, ",%.17g", s.residual);
    os << buf;
    if (r < extra_values.size()) {
      for (double v : extra_values[r]) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        os << buf;
      }
    }
    os << '\n';
  }
}

}  // namespace rkform
