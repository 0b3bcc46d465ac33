#include "rkform/expr.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rkform/errors.hpp"

namespace rkform {

namespace {

Expr make(Node node) { return Expr(std::make_shared<const Node>(std::move(node))); }

Expr make_ref(NodeKind kind, int field, int stage) {
  Node n;
  n.kind = kind;
  n.field = field;
  n.stage = stage;
  return make(std::move(n));
}

bool is_reference(NodeKind k) {
  switch (k) {
    case NodeKind::Field:
    case NodeKind::Test:
    case NodeKind::Stage:
    case NodeKind::StageTest:
    case NodeKind::Trial:
    case NodeKind::TimeDeriv:
      return true;
    default:
      return false;
  }
}

double sech_value(double v) { return 1.0 / std::cosh(v); }

double apply_function(FunctionTag tag, double v) {
  switch (tag) {
    case FunctionTag::Sin:
      return std::sin(v);
    case FunctionTag::Cos:
      return std::cos(v);
    case FunctionTag::Exp:
      return std::exp(v);
    case FunctionTag::Sech:
      return sech_value(v);
    case FunctionTag::Tanh:
      return std::tanh(v);
  }
  return 0.0;
}

const char* function_name(FunctionTag tag) {
  switch (tag) {
    case FunctionTag::Sin:
      return "sin";
    case FunctionTag::Cos:
      return "cos";
    case FunctionTag::Exp:
      return "exp";
    case FunctionTag::Sech:
      return "sech";
    case FunctionTag::Tanh:
      return "tanh";
  }
  return "?";
}

// f'(u) for the supported elementary functions.
Expr function_derivative(FunctionTag tag, const Expr& arg) {
  switch (tag) {
    case FunctionTag::Sin:
      return cos(arg);
    case FunctionTag::Cos:
      return -sin(arg);
    case FunctionTag::Exp:
      return exp(arg);
    case FunctionTag::Sech:
      return -(sech(arg) * tanh(arg));
    case FunctionTag::Tanh:
      return pow(sech(arg), 2);
  }
  throw UnsupportedExpression("function_derivative: unknown function");
}

// Derivative engine shared by grad, diff_time and gateaux. `leaf` handles
// every node that is not an arithmetic combination.
Expr differentiate(const Expr& e, const std::function<Expr(const Expr&)>& leaf) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Sum: {
      std::vector<Expr> terms;
      terms.reserve(n.children.size());
      for (const auto& c : n.children) terms.push_back(differentiate(c, leaf));
      return sum(std::move(terms));
    }
    case NodeKind::Product: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        Expr d = differentiate(n.children[i], leaf);
        if (d.is_zero()) continue;
        std::vector<Expr> factors = n.children;
        factors[i] = d;
        terms.push_back(product(std::move(factors)));
      }
      return sum(std::move(terms));
    }
    case NodeKind::Negate:
      return -differentiate(n.children[0], leaf);
    case NodeKind::Power: {
      const Expr& base = n.children[0];
      Expr d = differentiate(base, leaf);
      if (d.is_zero()) return constant(0.0);
      return product({constant(n.exponent), pow(base, n.exponent - 1), d});
    }
    case NodeKind::Function: {
      const Expr& arg = n.children[0];
      Expr d = differentiate(arg, leaf);
      if (d.is_zero()) return constant(0.0);
      return function_derivative(n.function, arg) * d;
    }
    default:
      return leaf(e);
  }
}

void sexpr(const Expr& e, std::ostringstream& os) {
  const Node& n = e.node();
  auto list = [&](const char* op) {
    os << '(' << op;
    for (const auto& c : n.children) {
      os << ' ';
      sexpr(c, os);
    }
    os << ')';
  };
  switch (n.kind) {
    case NodeKind::Const: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      os << buf;
      return;
    }
    case NodeKind::Time:
      os << 't';
      return;
    case NodeKind::Coord:
      os << 'x';
      return;
    case NodeKind::Parameter:
      os << n.constant->name();
      return;
    case NodeKind::Field:
      os << 'u' << n.field;
      return;
    case NodeKind::Test:
      os << 'v' << n.field;
      return;
    case NodeKind::Stage:
      os << 'k' << n.field << '_' << n.stage;
      return;
    case NodeKind::StageTest:
      os << 'v' << n.field << '_' << n.stage;
      return;
    case NodeKind::Trial:
      os << 'w' << n.field;
      if (n.stage >= 0) os << '_' << n.stage;
      return;
    case NodeKind::TimeDeriv:
      list("Dt");
      return;
    case NodeKind::SpatialDeriv:
      list("grad");
      return;
    case NodeKind::Sum:
      list("+");
      return;
    case NodeKind::Product:
      list("*");
      return;
    case NodeKind::Negate:
      list("-");
      return;
    case NodeKind::Power:
      os << "(^ ";
      sexpr(n.children[0], os);
      os << ' ' << n.exponent << ')';
      return;
    case NodeKind::Function:
      list(function_name(n.function));
      return;
  }
}

}  // namespace

Constant::Constant(std::string name, double value)
    : state_(std::make_shared<State>(State{std::move(name), value})) {}

Expr::Expr(double value) {
  Node n;
  n.kind = NodeKind::Const;
  n.value = value;
  node_ = std::make_shared<const Node>(std::move(n));
}

NodeKind Expr::kind() const { return node_->kind; }

bool Expr::is_const(double value) const {
  return node_->kind == NodeKind::Const && node_->value == value;
}

Expr constant(double value) { return Expr(value); }

Expr time_symbol() {
  Node n;
  n.kind = NodeKind::Time;
  return make(std::move(n));
}

Expr coordinate() {
  Node n;
  n.kind = NodeKind::Coord;
  return make(std::move(n));
}

Expr parameter(const Constant& c) {
  Node n;
  n.kind = NodeKind::Parameter;
  n.constant = c;
  return make(std::move(n));
}

Expr field(int id) { return make_ref(NodeKind::Field, id, -1); }
Expr test_function(int id) { return make_ref(NodeKind::Test, id, -1); }
Expr stage(int field, int stage_index) { return make_ref(NodeKind::Stage, field, stage_index); }
Expr stage_test(int field, int stage_index) {
  return make_ref(NodeKind::StageTest, field, stage_index);
}
Expr trial(int field, int stage_index) { return make_ref(NodeKind::Trial, field, stage_index); }

Expr Dt(const Expr& e) {
  if (e.kind() != NodeKind::Field) {
    throw NonFieldTimeDerivative(
        "Dt may only be applied to an unknown field; got " + to_sexpr(e) +
        " (expand derivatives of products by hand, e.g. 2*Dt(u)*u instead of Dt(u^2))");
  }
  Node n;
  n.kind = NodeKind::TimeDeriv;
  n.field = e->field;
  n.children = {e};
  return make(std::move(n));
}

Expr grad(const Expr& e) {
  return differentiate(e, [](const Expr& leaf) -> Expr {
    switch (leaf.kind()) {
      case NodeKind::Const:
      case NodeKind::Time:
      case NodeKind::Parameter:
        return constant(0.0);
      case NodeKind::Coord:
        return constant(1.0);
      case NodeKind::SpatialDeriv:
        throw UnsupportedExpression("grad: only first spatial derivatives of references");
      default: {
        Node n;
        n.kind = NodeKind::SpatialDeriv;
        n.children = {leaf};
        return make(std::move(n));
      }
    }
  });
}

Expr sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  double folded = 0.0;
  for (auto& t : terms) {
    if (t.kind() == NodeKind::Sum) {
      for (const auto& c : t->children) {
        if (c.kind() == NodeKind::Const) {
          folded += c->value;
        } else {
          flat.push_back(c);
        }
      }
    } else if (t.kind() == NodeKind::Const) {
      folded += t->value;
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (folded != 0.0) flat.push_back(constant(folded));
  if (flat.empty()) return constant(0.0);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = NodeKind::Sum;
  n.children = std::move(flat);
  return make(std::move(n));
}

Expr product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  double folded = 1.0;
  auto absorb = [&](const Expr& f) {
    if (f.kind() == NodeKind::Const) {
      folded *= f->value;
    } else if (f.kind() == NodeKind::Negate) {
      folded = -folded;
      flat.push_back(f->children[0]);
    } else {
      flat.push_back(f);
    }
  };
  for (const auto& f : factors) {
    if (f.kind() == NodeKind::Product) {
      for (const auto& c : f->children) absorb(c);
    } else {
      absorb(f);
    }
  }
  if (folded == 0.0) return constant(0.0);
  if (flat.empty()) return constant(folded);
  if (folded != 1.0) flat.insert(flat.begin(), constant(folded));
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = NodeKind::Product;
  n.children = std::move(flat);
  return make(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }

Expr operator-(const Expr& a) {
  switch (a.kind()) {
    case NodeKind::Const:
      return constant(-a->value);
    case NodeKind::Negate:
      return a->children[0];
    case NodeKind::Product:
      if (a->children.front().kind() == NodeKind::Const) {
        std::vector<Expr> factors = a->children;
        factors.front() = constant(-factors.front()->value);
        return product(std::move(factors));
      }
      break;
    default:
      break;
  }
  Node n;
  n.kind = NodeKind::Negate;
  n.children = {a};
  return make(std::move(n));
}

Expr pow(const Expr& base, int exponent) {
  if (exponent < 0) throw UnsupportedExpression("pow: exponent must be nonnegative");
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base.kind() == NodeKind::Const) return constant(std::pow(base->value, exponent));
  Node n;
  n.kind = NodeKind::Power;
  n.exponent = exponent;
  n.children = {base};
  return make(std::move(n));
}

Expr apply(FunctionTag tag, const Expr& arg) {
  if (arg.kind() == NodeKind::Const) return constant(apply_function(tag, arg->value));
  Node n;
  n.kind = NodeKind::Function;
  n.function = tag;
  n.children = {arg};
  return make(std::move(n));
}

Expr sin(const Expr& e) { return apply(FunctionTag::Sin, e); }
Expr cos(const Expr& e) { return apply(FunctionTag::Cos, e); }
Expr exp(const Expr& e) { return apply(FunctionTag::Exp, e); }
Expr sech(const Expr& e) { return apply(FunctionTag::Sech, e); }
Expr tanh(const Expr& e) { return apply(FunctionTag::Tanh, e); }

SymbolBindings& SymbolBindings::set_time(double t) {
  t_ = t;
  return *this;
}

SymbolBindings& SymbolBindings::set_coord(double x) {
  x_ = x;
  return *this;
}

SymbolBindings& SymbolBindings::set(const RefKey& key, double value) {
  refs_[key] = value;
  return *this;
}

double SymbolBindings::time() const {
  if (!t_) throw UnboundSymbol("time symbol t is unbound");
  return *t_;
}

double SymbolBindings::coord() const {
  if (!x_) throw UnboundSymbol("coordinate x is unbound");
  return *x_;
}

double SymbolBindings::reference(const RefKey& key) const {
  auto it = refs_.find(key);
  if (it == refs_.end()) {
    throw UnboundSymbol("unbound reference (field " + std::to_string(key.field) + ", stage " +
                        std::to_string(key.stage) + ")");
  }
  return it->second;
}

double evaluate(const Expr& e, const Bindings& b) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Const:
      return n.value;
    case NodeKind::Time:
      return b.time();
    case NodeKind::Coord:
      return b.coord();
    case NodeKind::Parameter:
      return n.constant->value();
    case NodeKind::Field:
    case NodeKind::Test:
    case NodeKind::Stage:
    case NodeKind::StageTest:
    case NodeKind::Trial:
    case NodeKind::TimeDeriv:
      return b.reference(RefKey{n.kind, n.field, n.stage, 0});
    case NodeKind::SpatialDeriv: {
      const Node& r = n.children[0].node();
      return b.reference(RefKey{r.kind, r.field, r.stage, 1});
    }
    case NodeKind::Sum: {
      double s = 0.0;
      for (const auto& c : n.children) s += evaluate(c, b);
      return s;
    }
    case NodeKind::Product: {
      double p = 1.0;
      for (const auto& c : n.children) {
        p *= evaluate(c, b);
        if (p == 0.0) break;
      }
      return p;
    }
    case NodeKind::Negate:
      return -evaluate(n.children[0], b);
    case NodeKind::Power: {
      const double base = evaluate(n.children[0], b);
      double p = base;
      for (int k = 1; k < n.exponent; ++k) p *= base;
      return p;
    }
    case NodeKind::Function:
      return apply_function(n.function, evaluate(n.children[0], b));
  }
  return 0.0;
}

Expr diff_time(const Expr& e) {
  return differentiate(e, [](const Expr& leaf) -> Expr {
    switch (leaf.kind()) {
      case NodeKind::Const:
      case NodeKind::Coord:
      case NodeKind::Parameter:
        return constant(0.0);
      case NodeKind::Time:
        return constant(1.0);
      default:
        throw UnsupportedExpression("diff_time: expression references unknowns: " +
                                    to_sexpr(leaf));
    }
  });
}

Expr gateaux(const Expr& e, const std::vector<Perturbation>& perturbations) {
  std::function<Expr(const Expr&)> leaf = [&](const Expr& node) -> Expr {
    if (node.kind() == NodeKind::SpatialDeriv) {
      return grad(differentiate(node->children[0], leaf));
    }
    for (const auto& p : perturbations) {
      if (structurally_equal(node, p.unknown)) return p.direction;
    }
    return constant(0.0);
  };
  return differentiate(e, leaf);
}

Expr replace(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& rule) {
  if (auto r = rule(e)) return *r;
  const Node& n = e.node();
  if (n.children.empty()) return e;
  std::vector<Expr> kids;
  kids.reserve(n.children.size());
  for (const auto& c : n.children) kids.push_back(replace(c, rule));
  switch (n.kind) {
    case NodeKind::Sum:
      return sum(std::move(kids));
    case NodeKind::Product:
      return product(std::move(kids));
    case NodeKind::Negate:
      return -kids[0];
    case NodeKind::Power:
      return pow(kids[0], n.exponent);
    case NodeKind::Function:
      return apply(n.function, kids[0]);
    case NodeKind::SpatialDeriv:
      return grad(kids[0]);
    case NodeKind::TimeDeriv:
      return Dt(kids[0]);
    default:
      return e;
  }
}

bool structurally_equal(const Expr& a, const Expr& b) {
  const Node& x = a.node();
  const Node& y = b.node();
  if (&x == &y) return true;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::Const:
      if (x.value != y.value) return false;
      break;
    case NodeKind::Parameter:
      if (!x.constant->same_as(*y.constant)) return false;
      break;
    case NodeKind::Power:
      if (x.exponent != y.exponent) return false;
      break;
    case NodeKind::Function:
      if (x.function != y.function) return false;
      break;
    default:
      if (x.field != y.field || x.stage != y.stage) return false;
  }
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!structurally_equal(x.children[i], y.children[i])) return false;
  }
  return true;
}

std::optional<RefKey> ref_key(const Expr& e) {
  const Node& n = e.node();
  if (is_reference(n.kind)) return RefKey{n.kind, n.field, n.stage, 0};
  if (n.kind == NodeKind::SpatialDeriv) {
    const Node& r = n.children[0].node();
    return RefKey{r.kind, r.field, r.stage, 1};
  }
  return std::nullopt;
}

std::set<RefKey> collect_refs(const Expr& e) {
  std::set<RefKey> out;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    if (auto key = ref_key(x)) {
      out.insert(*key);
      return;
    }
    for (const auto& c : x->children) walk(c);
  };
  walk(e);
  return out;
}

bool contains(const Expr& e, const std::function<bool(const Node&)>& pred) {
  if (pred(e.node())) return true;
  for (const auto& c : e->children) {
    if (contains(c, pred)) return true;
  }
  return false;
}

std::size_t count_nodes(const Expr& e, NodeKind kind) {
  std::size_t n = e.kind() == kind ? 1 : 0;
  for (const auto& c : e->children) n += count_nodes(c, kind);
  return n;
}

int homogeneous_degree(const Expr& e, const std::function<bool(const Node&)>& pred) {
  const Node& n = e.node();
  if (n.kind == NodeKind::SpatialDeriv || is_reference(n.kind)) {
    const Node& r = n.kind == NodeKind::SpatialDeriv ? n.children[0].node() : n;
    return pred(r) ? 1 : 0;
  }
  switch (n.kind) {
    case NodeKind::Sum: {
      int d = -2;
      for (const auto& c : n.children) {
        const int dc = homogeneous_degree(c, pred);
        if (dc < 0) return -1;
        if (d == -2) {
          d = dc;
        } else if (d != dc) {
          return -1;
        }
      }
      return d < 0 ? 0 : d;
    }
    case NodeKind::Product: {
      int d = 0;
      for (const auto& c : n.children) {
        const int dc = homogeneous_degree(c, pred);
        if (dc < 0) return -1;
        d += dc;
      }
      return d;
    }
    case NodeKind::Negate:
      return homogeneous_degree(n.children[0], pred);
    case NodeKind::Power: {
      const int d = homogeneous_degree(n.children[0], pred);
      return d < 0 ? -1 : d * n.exponent;
    }
    case NodeKind::Function:
      return homogeneous_degree(n.children[0], pred) == 0 ? 0 : -1;
    default:
      return 0;
  }
}

std::string to_sexpr(const Expr& e) {
  std::ostringstream os;
  sexpr(e, os);
  return os.str();
}

}  // namespace rkform
