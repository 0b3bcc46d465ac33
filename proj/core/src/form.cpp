#include "rkform/form.hpp"

#include <sstream>

#include "rkform/errors.hpp"

namespace rkform {

bool is_test_reference(const Node& n) {
  return n.kind == NodeKind::Test || n.kind == NodeKind::StageTest;
}

bool is_trial_reference(const Node& n) { return n.kind == NodeKind::Trial; }

Form::Form(int num_fields) : num_fields_(num_fields) {
  if (num_fields < 1) throw InvalidArgument("Form: num_fields must be >= 1");
}

Form& Form::add(const Expr& integrand) {
  if (integrand.is_zero()) return *this;
  if (homogeneous_degree(integrand, is_test_reference) != 1) {
    throw InvalidArgument("Form::add: integrand is not linear in the test functions: " +
                          to_sexpr(integrand));
  }
  const bool out_of_range = contains(integrand, [this](const Node& n) {
    return n.field >= num_fields_;
  });
  if (out_of_range) throw MismatchedFieldCount("Form::add: integrand references unknown field");
  terms_.push_back({integrand, Measure::Cell});
  return *this;
}

Form Form::operator+(const Form& other) const {
  if (other.num_fields_ != num_fields_) {
    throw MismatchedFieldCount("Form::operator+: field counts differ");
  }
  Form out = *this;
  out.terms_.insert(out.terms_.end(), other.terms_.begin(), other.terms_.end());
  return out;
}

Form gateaux(const Form& form, const std::vector<Perturbation>& perturbations) {
  Form out(form.num_fields());
  for (const auto& term : form.terms()) {
    out.add(gateaux(term.integrand, perturbations));
  }
  return out;
}

std::vector<Perturbation> field_perturbations(int num_fields, bool rates) {
  std::vector<Perturbation> out;
  for (int f = 0; f < num_fields; ++f) {
    out.push_back({rates ? Dt(field(f)) : field(f), trial(f)});
  }
  return out;
}

std::vector<Perturbation> stage_perturbations(int num_fields, int num_stages) {
  std::vector<Perturbation> out;
  for (int i = 0; i < num_stages; ++i) {
    for (int f = 0; f < num_fields; ++f) out.push_back({stage(f, i), trial(f, i)});
  }
  return out;
}

bool form_contains(const Form& form, const std::function<bool(const Node&)>& pred) {
  for (const auto& term : form.terms()) {
    if (contains(term.integrand, pred)) return true;
  }
  return false;
}

std::string to_sexpr(const Form& form) {
  std::ostringstream os;
  os << "(form";
  for (const auto& term : form.terms()) os << " (dx " << to_sexpr(term.integrand) << ')';
  os << ')';
  return os.str();
}

BoundaryCondition::BoundaryCondition(int field_id, BoundaryLocation loc, Expr g)
    : field(field_id), location(loc), value(std::move(g)) {
  const bool has_refs = !collect_refs(value).empty();
  if (has_refs) {
    throw InvalidArgument("BoundaryCondition: value may only depend on t and x");
  }
}

StageProblem get_stage_form(const Form& form, const ButcherTableau& tableau,
                            std::span<const BoundaryCondition> bcs, Constant t, Constant dt) {
  const int s = tableau.num_stages();
  const int nf = form.num_fields();
  const auto& A = tableau.A();
  const auto& c = tableau.c();
  const Expr step = parameter(dt);

  for (const auto& bc : bcs) {
    if (bc.field < 0 || bc.field >= nf) {
      throw MismatchedFieldCount("get_stage_form: boundary condition on field " +
                                 std::to_string(bc.field) + " but the form has " +
                                 std::to_string(nf) + " fields");
    }
  }

  auto shifted_time = [&](int i) {
    return c[i] == 0.0 ? time_symbol() : time_symbol() + constant(c[i]) * step;
  };

  Form stage_form(nf);
  for (int i = 0; i < s; ++i) {
    const auto rule = [&](const Expr& e) -> std::optional<Expr> {
      const Node& n = e.node();
      switch (n.kind) {
        case NodeKind::TimeDeriv:
          return stage(n.field, i);
        case NodeKind::Field: {
          std::vector<Expr> terms{e};
          for (int j = 0; j < s; ++j) {
            if (A(i, j) != 0.0) terms.push_back(product({constant(A(i, j)), step, stage(n.field, j)}));
          }
          return sum(std::move(terms));
        }
        case NodeKind::Test:
          return stage_test(n.field, i);
        case NodeKind::Time:
          return shifted_time(i);
        case NodeKind::Stage:
        case NodeKind::StageTest:
          throw InvalidArgument("get_stage_form: semidiscrete form already contains stages");
        default:
          return std::nullopt;
      }
    };
    for (const auto& term : form.terms()) stage_form.add(replace(term.integrand, rule));
  }

  std::vector<StageBoundaryCondition> stage_bcs;
  for (const auto& bc : bcs) {
    const Expr rate = diff_time(bc.value);
    for (int i = 0; i < s; ++i) {
      const int stage_index = i;
      Expr value = replace(rate, [&](const Expr& e) -> std::optional<Expr> {
        if (e.kind() == NodeKind::Time) return shifted_time(stage_index);
        return std::nullopt;
      });
      stage_bcs.push_back({bc.field, i, bc.location, std::move(value)});
    }
  }

  return StageProblem{std::move(stage_form), std::move(stage_bcs), tableau, std::move(t),
                      std::move(dt)};
}

}  // namespace rkform
