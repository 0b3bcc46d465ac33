#pragma once

#include <span>
#include <string>
#include <vector>

#include "rkform/expr.hpp"
#include "rkform/tableau.hpp"

namespace rkform {

enum class Measure { Cell };

struct FormTerm {
  Expr integrand;
  Measure measure{Measure::Cell};
};

/// Sum of cell integrals over `num_fields` unknown fields. Every integrand
/// must be linear in the test functions.
class Form {
 public:
  explicit Form(int num_fields);

  /// Append a cell integral. Throws InvalidArgument if the integrand is not
  /// linear in test functions, MismatchedFieldCount for out-of-range fields.
  Form& add(const Expr& integrand);

  const std::vector<FormTerm>& terms() const { return terms_; }
  int num_fields() const { return num_fields_; }
  bool empty() const { return terms_.empty(); }

  Form operator+(const Form& other) const;

 private:
  int num_fields_;
  std::vector<FormTerm> terms_;
};

bool is_test_reference(const Node& n);
bool is_trial_reference(const Node& n);

/// Directional derivative of every term; terms whose derivative vanishes
/// are dropped. The result is not test-checked against `num_fields` for
/// directions, only for tests.
Form gateaux(const Form& form, const std::vector<Perturbation>& perturbations);

/// Perturbations mapping every field(f) to trial(f) (or Dt(field(f)) when
/// `rates` is set), for linearising semidiscrete forms.
std::vector<Perturbation> field_perturbations(int num_fields, bool rates);

/// Perturbations mapping every stage(f, i) to trial(f, i).
std::vector<Perturbation> stage_perturbations(int num_fields, int num_stages);

bool form_contains(const Form& form, const std::function<bool(const Node&)>& pred);

std::string to_sexpr(const Form& form);

enum class BoundaryLocation { LeftEnd, RightEnd };

/// Strong Dirichlet condition u_f = value(t, x) at one end of the interval.
struct BoundaryCondition {
  BoundaryCondition(int field, BoundaryLocation location, Expr value);

  int field;
  BoundaryLocation location;
  Expr value;
};

/// Dirichlet condition on the stage unknown k_{field, stage}; `value` is in
/// terms of t (the start of the step), x and the step-size parameter.
struct StageBoundaryCondition {
  int field;
  int stage;
  BoundaryLocation location;
  Expr value;
};

/// The coupled variational problem for all Runge-Kutta stages.
struct StageProblem {
  Form stage_form;
  std::vector<StageBoundaryCondition> stage_bcs;
  ButcherTableau tableau;
  Constant t;
  Constant dt;

  int num_fields() const { return stage_form.num_fields(); }
  int num_stages() const { return tableau.num_stages(); }
};

/// Rewrite a semidiscrete form into the stage form: per stage i, Dt(u_f)
/// becomes k_{f,i}, u_f becomes u_f + dt sum_j A_ij k_{f,j}, v_f becomes
/// v_{f,i} and t becomes t + c_i dt; the copies are summed in stage order.
/// Each boundary condition u_f = g yields k_{f,i} = dg/dt(t + c_i dt).
StageProblem get_stage_form(const Form& form, const ButcherTableau& tableau,
                            std::span<const BoundaryCondition> bcs, Constant t, Constant dt);

}  // namespace rkform
