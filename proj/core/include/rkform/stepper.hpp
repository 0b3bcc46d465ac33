#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "rkform/fem.hpp"
#include "rkform/form.hpp"
#include "rkform/solvers.hpp"
#include "rkform/tableau.hpp"

namespace rkform {

struct SolverConfig {
  /// Linear solves: direct LU or GMRES with a block preconditioner.
  LinearSolverOptions linear{};
  /// Newton tolerances on the 2-norm of the stage residual.
  double atol{1e-10};
  double rtol{1e-8};
  int max_newton_iterations{25};
  /// With GMRES, use the matrix-free Kronecker operator when the form allows.
  bool use_kron{true};
};

struct StepStats {
  double t{0.0};  // time at the end of the step
  bool linear{false};
  bool kron{false};
  int newton_iterations{0};
  int linear_iterations{0};
  double residual{0.0};
};

/// True when the semidiscrete form is affine in (u, Dt(u)) with mass and
/// stiffness parts free of t, so the stage system is I (x) M + dt A (x) K.
bool kronecker_eligible(const Form& semidiscrete);

/// Mass (derivative with respect to Dt(u)) and stiffness (with respect to u)
/// matrices of a semidiscrete form over a one-stage layout.
std::pair<SparseMatrix, SparseMatrix> mass_and_stiffness(const Form& semidiscrete,
                                                         const BlockLayout& layout);

/// The linear stage operator with Dirichlet stage rows as identity rows.
struct StageOperator {
  std::optional<KronOperator> kron;
  std::optional<SparseMatrix> assembled;

  int size() const;
  LinearMap as_map() const;
};

/// Matrix-free Kronecker operator when `prefer_kron` is set and the form
/// qualifies, otherwise the assembled stage Jacobian at `fields`.
/// Throws InvalidArgument when the stage form is nonlinear in the stages.
StageOperator build_stage_operator(const Form& semidiscrete, const StageProblem& problem,
                                   const BlockLayout& layout, const Vector& fields,
                                   bool prefer_kron = true);

/// Advances a set of fields with one Runge-Kutta method. The stage problem
/// is built once; `t` and `dt` are read at every step.
class TimeStepper {
 public:
  using Callback =
      std::function<void(double t, const std::vector<FieldFunction>& fields, const StepStats&)>;

  TimeStepper(const Form& semidiscrete, const ButcherTableau& tableau,
              std::vector<FieldFunction> initial, Constant t, Constant dt,
              std::vector<BoundaryCondition> bcs = {}, SolverConfig config = {});
  ~TimeStepper();
  TimeStepper(TimeStepper&&) noexcept;
  TimeStepper& operator=(TimeStepper&&) noexcept;

  /// One step. On failure the fields and t are left unchanged.
  StepStats step();

  /// Steps until t reaches T. (T - t) / dt must be an integer to within 1e-9.
  const std::vector<FieldFunction>& advance_to(double T, const Callback& callback = {});

  const std::vector<FieldFunction>& fields() const;
  /// All fields concatenated in layout order.
  Vector state() const;
  /// Stage vector of the last successful step (stage-major).
  const Vector& last_stages() const;
  const StageProblem& problem() const;
  const BlockLayout& layout() const;
  double time() const;
  bool is_linear() const;
  bool uses_kron() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Per-step CSV: t,newton_iterations,linear_iterations,residual plus the
/// named extra columns.
void write_telemetry_csv(std::ostream& os, const std::vector<StepStats>& stats,
                         const std::vector<std::string>& extra_names = {},
                         const std::vector<std::vector<double>>& extra_values = {});

}  // namespace rkform
