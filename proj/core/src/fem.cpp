#include "rkform/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "rkform/errors.hpp"

namespace rkform {

Mesh1D::Mesh1D(double a, double b, int cells, bool periodic)
    : a_(a), b_(b), n_(cells), periodic_(periodic) {
  if (!(b > a)) throw InvalidArgument("Mesh1D: need b > a");
  if (cells < 1) throw InvalidArgument("Mesh1D: need at least one cell");
}

FunctionSpace::FunctionSpace(Mesh1D mesh, Family family, int degree)
    : mesh_(mesh), family_(family), degree_(degree) {
  const int min_degree = family == Family::CG ? 1 : 0;
  if (degree < min_degree || degree > kMaxDegree) {
    throw InvalidArgument("FunctionSpace: unsupported degree " + std::to_string(degree));
  }
  const int N = mesh_.num_cells();
  if (family == Family::CG) {
    dof_count_ = mesh_.periodic() ? N * degree : N * degree + 1;
  } else {
    dof_count_ = N * (degree + 1);
  }
  if (degree == 0) {
    nodes_ = {0.5};
  } else {
    for (int m = 0; m <= degree; ++m) nodes_.push_back(static_cast<double>(m) / degree);
  }
  coords_.assign(dof_count_, 0.0);
  std::vector<bool> seen(dof_count_, false);
  for (int cell = 0; cell < N; ++cell) {
    for (int j = 0; j <= degree; ++j) {
      const int d = dof(cell, j);
      if (seen[d]) continue;
      seen[d] = true;
      coords_[d] = mesh_.vertex(cell) + nodes_[j] * mesh_.h();
    }
  }
}

int FunctionSpace::dof(int cell, int j) const {
  if (family_ == Family::DG) return cell * (degree_ + 1) + j;
  const int d = cell * degree_ + j;
  return mesh_.periodic() ? d % dof_count_ : d;
}

double FunctionSpace::basis(int j, double xi) const {
  double v = 1.0;
  for (int m = 0; m <= degree_; ++m) {
    if (m != j) v *= (xi - nodes_[m]) / (nodes_[j] - nodes_[m]);
  }
  return v;
}

double FunctionSpace::basis_derivative(int j, double xi) const {
  double total = 0.0;
  for (int p = 0; p <= degree_; ++p) {
    if (p == j) continue;
    double term = 1.0 / (nodes_[j] - nodes_[p]);
    for (int m = 0; m <= degree_; ++m) {
      if (m != j && m != p) term *= (xi - nodes_[m]) / (nodes_[j] - nodes_[m]);
    }
    total += term;
  }
  return total;
}

int FunctionSpace::boundary_dof(BoundaryLocation location) const {
  if (mesh_.periodic()) throw InvalidArgument("boundary_dof: periodic mesh has no boundary");
  if (degree_ == 0) throw InvalidArgument("boundary_dof: DG0 has no boundary node");
  if (location == BoundaryLocation::LeftEnd) return dof(0, 0);
  return dof(mesh_.num_cells() - 1, degree_);
}

FieldFunction::FieldFunction(SpacePtr s, Vector c) : space(std::move(s)), coefficients(std::move(c)) {
  if (!space) throw InvalidArgument("FieldFunction: null space");
  if (coefficients.size() != space->dof_count()) {
    throw InvalidArgument("FieldFunction: coefficient length does not match the space");
  }
}

FieldFunction::FieldFunction(SpacePtr s)
    : FieldFunction(s, Vector::Zero(s ? s->dof_count() : 0)) {}

BlockLayout::BlockLayout(std::vector<SpacePtr> spaces, int num_stages)
    : spaces_(std::move(spaces)), stages_(num_stages) {
  if (spaces_.empty()) throw InvalidArgument("BlockLayout: no spaces");
  if (num_stages < 1) throw InvalidArgument("BlockLayout: need at least one stage");
  for (const auto& s : spaces_) {
    if (!s) throw InvalidArgument("BlockLayout: null space");
    if (!(s->mesh() == spaces_.front()->mesh())) {
      throw InvalidArgument("BlockLayout: all spaces must share one mesh");
    }
    offsets_.push_back(block_);
    block_ += s->dof_count();
  }
}

int BlockLayout::max_degree() const {
  int k = 0;
  for (const auto& s : spaces_) k = std::max(k, s->degree());
  return k;
}

// ceil((2k + 3) / 2) + 1
int assembly_quadrature_points(int degree) { return degree + 3; }

namespace {

// Flat postfix program for fast repeated evaluation.
enum class Op : std::uint8_t { Const, Time, Coord, Param, Slot, Sum, Prod, Neg, Pow, Fn };

struct Instr {
  Op op;
  int arg{0};
  double value{0.0};
  FunctionTag fn{};
};

struct Program {
  std::vector<Instr> code;
  std::vector<Constant> params;
  int max_stack{0};
};

double call(FunctionTag tag, double v) {
  switch (tag) {
    case FunctionTag::Sin:
      return std::sin(v);
    case FunctionTag::Cos:
      return std::cos(v);
    case FunctionTag::Exp:
      return std::exp(v);
    case FunctionTag::Sech:
      return 1.0 / std::cosh(v);
    case FunctionTag::Tanh:
      return std::tanh(v);
  }
  return 0.0;
}

class SlotTable {
 public:
  int slot(const RefKey& key) {
    auto [it, inserted] = slots_.try_emplace(key, static_cast<int>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }
  std::optional<int> find(const RefKey& key) const {
    auto it = slots_.find(key);
    if (it == slots_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<RefKey>& keys() const { return keys_; }
  int size() const { return static_cast<int>(keys_.size()); }

 private:
  std::map<RefKey, int> slots_;
  std::vector<RefKey> keys_;
};

void emit(const Expr& e, Program& p, SlotTable& slots, int& depth) {
  auto push = [&](Instr in) {
    p.code.push_back(in);
    p.max_stack = std::max(p.max_stack, depth);
  };
  if (auto key = ref_key(e)) {
    ++depth;
    push({Op::Slot, slots.slot(*key)});
    return;
  }
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Const:
      ++depth;
      push({Op::Const, 0, n.value});
      return;
    case NodeKind::Time:
      ++depth;
      push({Op::Time});
      return;
    case NodeKind::Coord:
      ++depth;
      push({Op::Coord});
      return;
    case NodeKind::Parameter:
      ++depth;
      p.params.push_back(*n.constant);
      push({Op::Param, static_cast<int>(p.params.size()) - 1});
      return;
    default:
      break;
  }
  for (const auto& c : n.children) emit(c, p, slots, depth);
  const int arity = static_cast<int>(n.children.size());
  depth -= arity - 1;
  switch (n.kind) {
    case NodeKind::Sum:
      push({Op::Sum, arity});
      return;
    case NodeKind::Product:
      push({Op::Prod, arity});
      return;
    case NodeKind::Negate:
      push({Op::Neg});
      return;
    case NodeKind::Power:
      push({Op::Pow, n.exponent});
      return;
    case NodeKind::Function:
      push({Op::Fn, 0, 0.0, n.function});
      return;
    default:
      throw UnsupportedExpression("assembly: cannot evaluate " + to_sexpr(e));
  }
}

Program compile(const Expr& e, SlotTable& slots) {
  Program p;
  int depth = 0;
  emit(e, p, slots, depth);
  return p;
}

double run(const Program& p, const double* slots, double t, double x, std::vector<double>& stack) {
  if (stack.size() < static_cast<std::size_t>(p.max_stack)) stack.resize(p.max_stack);
  double* top = stack.data();  // one past the last element
  for (const Instr& in : p.code) {
    switch (in.op) {
      case Op::Const:
        *top++ = in.value;
        break;
      case Op::Time:
        *top++ = t;
        break;
      case Op::Coord:
        *top++ = x;
        break;
      case Op::Param:
        *top++ = p.params[in.arg].value();
        break;
      case Op::Slot:
        *top++ = slots[in.arg];
        break;
      case Op::Sum: {
        double s = 0.0;
        for (int i = 0; i < in.arg; ++i) s += *--top;
        *top++ = s;
        break;
      }
      case Op::Prod: {
        double s = 1.0;
        for (int i = 0; i < in.arg; ++i) s *= *--top;
        *top++ = s;
        break;
      }
      case Op::Neg:
        top[-1] = -top[-1];
        break;
      case Op::Pow: {
        const double b = top[-1];
        double v = b;
        for (int i = 1; i < in.arg; ++i) v *= b;
        top[-1] = v;
        break;
      }
      case Op::Fn:
        top[-1] = call(in.fn, top[-1]);
        break;
    }
  }
  return top[-1];
}

bool is_basis_kind(NodeKind k) {
  return k == NodeKind::Test || k == NodeKind::StageTest || k == NodeKind::Trial;
}

// A test or trial reference (ignoring the derivative flag) and its slots.
struct Unit {
  NodeKind kind;
  int field;
  int stage;
  int value_slot{-1};
  int deriv_slot{-1};
};

std::vector<Unit> units_of(const Expr& e, const SlotTable& slots, bool trial) {
  std::vector<Unit> out;
  for (const auto& key : collect_refs(e)) {
    const bool is_trial = key.kind == NodeKind::Trial;
    if (!is_basis_kind(key.kind) || is_trial != trial) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const Unit& u) {
      return u.kind == key.kind && u.field == key.field && u.stage == key.stage;
    });
    if (it == out.end()) {
      out.push_back({key.kind, key.field, key.stage});
      it = out.end() - 1;
    }
    (key.deriv == 0 ? it->value_slot : it->deriv_slot) = *slots.find(key);
  }
  return out;
}

}  // namespace

struct CompiledForm::Impl {
  struct Term {
    Program program;
    std::vector<Unit> tests;
    std::vector<Unit> trials;
    bool bilinear{false};
  };

  BlockLayout layout;
  SlotTable slots;
  std::vector<Term> terms;
  QuadratureRule rule;
  // phi[f][q][j], dphi[f][q][j] (physical derivative)
  std::vector<std::vector<std::vector<double>>> phi;
  std::vector<std::vector<std::vector<double>>> dphi;

  explicit Impl(BlockLayout l) : layout(std::move(l)) {}

  int unit_index(const Unit& u, int cell, int j) const {
    const int dof = layout.space(u.field).dof(cell, j);
    const int stage = u.stage < 0 ? 0 : u.stage;
    return layout.index(u.field, stage, dof);
  }

  void setup(const Form& form) {
    if (form.num_fields() != layout.num_fields()) {
      throw MismatchedFieldCount("CompiledForm: form and layout field counts differ");
    }
    for (const auto& term : form.terms()) {
      Term t;
      t.program = compile(term.integrand, slots);
      t.tests = units_of(term.integrand, slots, false);
      t.trials = units_of(term.integrand, slots, true);
      t.bilinear = homogeneous_degree(term.integrand, is_trial_reference) == 1;
      for (const auto* list : {&t.tests, &t.trials}) {
        for (const auto& u : *list) {
          if (u.stage >= layout.num_stages()) {
            throw MismatchedFieldCount("CompiledForm: stage index outside the layout");
          }
        }
      }
      terms.push_back(std::move(t));
    }
    rule = gauss_legendre_rule(assembly_quadrature_points(layout.max_degree()));
    const double h = layout.mesh().h();
    for (int f = 0; f < layout.num_fields(); ++f) {
      const auto& space = layout.space(f);
      std::vector<std::vector<double>> p(rule.size()), d(rule.size());
      for (std::size_t q = 0; q < rule.size(); ++q) {
        for (int j = 0; j < space.dofs_per_cell(); ++j) {
          p[q].push_back(space.basis(j, rule.points[q]));
          d[q].push_back(space.basis_derivative(j, rule.points[q]) / h);
        }
      }
      phi.push_back(std::move(p));
      dphi.push_back(std::move(d));
    }
  }

  // Values of every coefficient slot at every quadrature point of `cell`;
  // basis slots are left at zero.
  void fill_cell(int cell, const AssemblyState& state, std::vector<std::vector<double>>& q_slots) const {
    q_slots.assign(rule.size(), std::vector<double>(slots.size(), 0.0));
    const auto& keys = slots.keys();
    for (int s = 0; s < slots.size(); ++s) {
      const RefKey& key = keys[s];
      if (is_basis_kind(key.kind)) continue;
      const Vector* source = nullptr;
      int base = 0;
      switch (key.kind) {
        case NodeKind::Field:
          source = state.fields;
          base = layout.offset(key.field);
          break;
        case NodeKind::TimeDeriv:
          source = state.rates;
          base = layout.offset(key.field);
          break;
        case NodeKind::Stage:
          source = state.stages;
          if (key.stage >= layout.num_stages()) {
            throw MismatchedFieldCount("assembly: stage index outside the layout");
          }
          base = layout.index(key.field, key.stage, 0);
          break;
        default:
          break;
      }
      if (source == nullptr) {
        throw UnboundSymbol("assembly: no coefficients bound for a " +
                            std::string(key.kind == NodeKind::Stage ? "stage" : "field") +
                            " reference");
      }
      const auto& space = layout.space(key.field);
      const auto& table = key.deriv == 0 ? phi[key.field] : dphi[key.field];
      for (std::size_t q = 0; q < rule.size(); ++q) {
        double v = 0.0;
        for (int j = 0; j < space.dofs_per_cell(); ++j) {
          v += table[q][j] * (*source)[base + space.dof(cell, j)];
        }
        q_slots[q][s] = v;
      }
    }
  }

  void set_unit(std::vector<double>& row, const Unit& u, std::size_t q, int j) const {
    if (u.value_slot >= 0) row[u.value_slot] = phi[u.field][q][j];
    if (u.deriv_slot >= 0) row[u.deriv_slot] = dphi[u.field][q][j];
  }

  static void clear_unit(std::vector<double>& row, const Unit& u) {
    if (u.value_slot >= 0) row[u.value_slot] = 0.0;
    if (u.deriv_slot >= 0) row[u.deriv_slot] = 0.0;
  }

  double x_at(int cell, std::size_t q) const {
    return layout.mesh().vertex(cell) + rule.points[q] * layout.mesh().h();
  }
};

CompiledForm::CompiledForm(const Form& form, BlockLayout layout)
    : impl_(std::make_unique<Impl>(std::move(layout))) {
  impl_->setup(form);
}

CompiledForm::~CompiledForm() = default;
CompiledForm::CompiledForm(CompiledForm&&) noexcept = default;
CompiledForm& CompiledForm::operator=(CompiledForm&&) noexcept = default;

const BlockLayout& CompiledForm::layout() const { return impl_->layout; }

bool CompiledForm::is_bilinear() const {
  for (const auto& t : impl_->terms) {
    if (!t.bilinear) return false;
  }
  return true;
}

Vector CompiledForm::residual(const AssemblyState& state) const {
  const Impl& m = *impl_;
  const auto& mesh = m.layout.mesh();
  const double h = mesh.h();
  Vector out = Vector::Zero(m.layout.size());
  std::vector<std::vector<double>> q_slots;
  std::vector<double> stack;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    m.fill_cell(cell, state, q_slots);
    for (std::size_t q = 0; q < m.rule.size(); ++q) {
      const double x = m.x_at(cell, q);
      const double w = m.rule.weights[q] * h;
      auto& row = q_slots[q];
      for (const auto& term : m.terms) {
        for (const auto& u : term.tests) {
          const int nb = m.layout.space(u.field).dofs_per_cell();
          for (int j = 0; j < nb; ++j) {
            m.set_unit(row, u, q, j);
            out[m.unit_index(u, cell, j)] += w * run(term.program, row.data(), state.time, x, stack);
          }
          Impl::clear_unit(row, u);
        }
      }
    }
  }
  return out;
}

SparseMatrix CompiledForm::matrix(const AssemblyState& state) const {
  const Impl& m = *impl_;
  for (const auto& t : m.terms) {
    if (!t.bilinear) {
      throw InvalidArgument("assemble_matrix: term is not linear in the trial functions");
    }
  }
  const auto& mesh = m.layout.mesh();
  const double h = mesh.h();
  std::vector<Triplet> triplets;
  std::vector<std::vector<double>> q_slots;
  std::vector<double> stack;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    m.fill_cell(cell, state, q_slots);
    for (const auto& term : m.terms) {
      for (const auto& u : term.tests) {
        const int nu = m.layout.space(u.field).dofs_per_cell();
        for (const auto& w : term.trials) {
          const int nw = m.layout.space(w.field).dofs_per_cell();
          for (int j = 0; j < nu; ++j) {
            for (int l = 0; l < nw; ++l) {
              double v = 0.0;
              for (std::size_t q = 0; q < m.rule.size(); ++q) {
                auto& row = q_slots[q];
                m.set_unit(row, u, q, j);
                m.set_unit(row, w, q, l);
                v += m.rule.weights[q] * run(term.program, row.data(), state.time, m.x_at(cell, q), stack);
                Impl::clear_unit(row, u);
                Impl::clear_unit(row, w);
              }
              triplets.push_back({m.unit_index(u, cell, j), m.unit_index(w, cell, l), v * h});
            }
          }
        }
      }
    }
  }
  const int n = m.layout.size();
  return SparseMatrix::from_triplets(n, n, std::move(triplets));
}

Vector assemble_residual(const Form& form, const BlockLayout& layout, const AssemblyState& state) {
  return CompiledForm(form, layout).residual(state);
}

SparseMatrix assemble_matrix(const Form& form, const BlockLayout& layout,
                             const AssemblyState& state) {
  return CompiledForm(form, layout).matrix(state);
}

double assemble_functional(const Expr& integrand, const BlockLayout& layout,
                           const AssemblyState& state) {
  const bool has_basis = contains(integrand, [](const Node& n) { return is_basis_kind(n.kind); });
  if (has_basis) throw InvalidArgument("assemble_functional: integrand has test or trial references");
  SlotTable slots;
  const Program program = compile(integrand, slots);
  const auto& mesh = layout.mesh();
  const QuadratureRule rule = gauss_legendre_rule(assembly_quadrature_points(layout.max_degree()));
  std::vector<double> row(slots.size());
  std::vector<double> stack;
  double total = 0.0;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q];
      for (int s = 0; s < slots.size(); ++s) {
        const RefKey& key = slots.keys()[s];
        const Vector* source = nullptr;
        int base = 0;
        if (key.kind == NodeKind::Field) {
          source = state.fields;
          base = layout.offset(key.field);
        } else if (key.kind == NodeKind::TimeDeriv) {
          source = state.rates;
          base = layout.offset(key.field);
        } else if (key.kind == NodeKind::Stage) {
          source = state.stages;
          base = layout.index(key.field, key.stage, 0);
        }
        if (source == nullptr) throw UnboundSymbol("assemble_functional: unbound reference");
        const auto& space = layout.space(key.field);
        double v = 0.0;
        for (int j = 0; j < space.dofs_per_cell(); ++j) {
          const double b = key.deriv == 0 ? space.basis(j, xi) : space.basis_derivative(j, xi) / mesh.h();
          v += b * (*source)[base + space.dof(cell, j)];
        }
        row[s] = v;
      }
      const double x = mesh.vertex(cell) + xi * mesh.h();
      total += rule.weights[q] * mesh.h() * run(program, row.data(), state.time, x, stack);
    }
  }
  return total;
}

FieldFunction interpolate(const Expr& e, SpacePtr space, double time) {
  Vector c(space->dof_count());
  SymbolBindings b;
  b.set_time(time);
  for (int d = 0; d < space->dof_count(); ++d) {
    b.set_coord(space->dof_coordinates()[d]);
    c[d] = evaluate(e, b);
  }
  return FieldFunction(std::move(space), std::move(c));
}

namespace {

double norm_integral(const Expr& u_exact, const Mesh1D& mesh, int degree, const FieldFunction* u_h,
                     Norm norm, double time) {
  const QuadratureRule rule = gauss_legendre_rule(2 * assembly_quadrature_points(degree));
  const Expr du = grad(u_exact);
  SymbolBindings b;
  b.set_time(time);
  const double h = mesh.h();
  double total = 0.0;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q];
      b.set_coord(mesh.vertex(cell) + xi * h);
      double e0 = evaluate(u_exact, b);
      double e1 = norm == Norm::H1 ? evaluate(du, b) : 0.0;
      if (u_h != nullptr) {
        const auto& space = *u_h->space;
        for (int j = 0; j < space.dofs_per_cell(); ++j) {
          const double c = u_h->coefficients[space.dof(cell, j)];
          e0 -= c * space.basis(j, xi);
          if (norm == Norm::H1) e1 -= c * space.basis_derivative(j, xi) / h;
        }
      }
      total += rule.weights[q] * h * (e0 * e0 + e1 * e1);
    }
  }
  return std::sqrt(total);
}

}  // namespace

double errornorm(const Expr& u_exact, const FieldFunction& u_h, Norm norm, double time) {
  return norm_integral(u_exact, u_h.space->mesh(), u_h.space->degree(), &u_h, norm, time);
}

double exact_norm(const Expr& u_exact, const Mesh1D& mesh, int degree, Norm norm, double time) {
  return norm_integral(u_exact, mesh, degree, nullptr, norm, time);
}

void write_field_csv(std::ostream& os, const FieldFunction& u) {
  os << "x,value\n";
  char buf[80];
  const auto& x = u.space->dof_coordinates();
  for (int d = 0; d < u.space->dof_count(); ++d) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x[d], u.coefficients[d]);
    os << buf;
  }
}

}  // namespace rkform
