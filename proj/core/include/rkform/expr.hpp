#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rkform {

/// A named scalar whose value can change after expressions referencing it
/// have been built. Copies share the same storage.
class Constant {
 public:
  Constant(std::string name, double value);

  double value() const { return state_->value; }
  void assign(double value) { state_->value = value; }
  const std::string& name() const { return state_->name; }
  bool same_as(const Constant& other) const { return state_ == other.state_; }

 private:
  struct State {
    std::string name;
    double value;
  };
  std::shared_ptr<State> state_;
};

enum class NodeKind : std::uint8_t {
  Const,
  Time,       // t
  Coord,      // x
  Parameter,  // mutable Constant handle
  Field,      // unknown field u_f
  Test,       // test function v_f
  Stage,      // stage unknown k_{f,i}
  StageTest,  // stage test function v_{f,i}
  Trial,      // direction symbol w_{f,i} used by Gateaux derivatives
  TimeDeriv,  // Dt(u_f)
  SpatialDeriv,
  Sum,
  Product,
  Negate,
  Power,
  Function,
};

enum class FunctionTag : std::uint8_t { Sin, Cos, Exp, Sech, Tanh };

struct Node;

/// Immutable, shareable expression handle.
class Expr {
 public:
  /// Constant expression.
  Expr(double value);  // NOLINT(google-explicit-constructor)
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  const Node* operator->() const { return node_.get(); }
  NodeKind kind() const;
  bool is_const(double value) const;
  bool is_zero() const { return is_const(0.0); }

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind{NodeKind::Const};
  double value{0.0};      // Const
  int field{-1};          // Field, Test, Stage, StageTest, Trial
  int stage{-1};          // Stage, StageTest, Trial (-1 when not stage-indexed)
  int exponent{0};        // Power
  FunctionTag function{}; // Function
  std::optional<Constant> constant;  // Parameter
  std::vector<Expr> children;
};

/// Identity of a terminal an evaluation can be asked about: the reference
/// kind (Field, Test, Stage, StageTest, Trial or TimeDeriv), its indices and
/// whether its spatial derivative is meant.
struct RefKey {
  NodeKind kind;
  int field;
  int stage;
  int deriv;

  auto operator<=>(const RefKey&) const = default;
};

// Terminals.
Expr constant(double value);
Expr time_symbol();
Expr coordinate();
Expr parameter(const Constant& c);
Expr field(int id);
Expr test_function(int id);
Expr stage(int field, int stage_index);
Expr stage_test(int field, int stage_index);
Expr trial(int field, int stage_index = -1);

/// Time derivative of an unknown field. Throws NonFieldTimeDerivative for
/// anything other than field(id).
Expr Dt(const Expr& e);

/// Spatial derivative d/dx. Pushed down to the terminals, so the resulting
/// tree only holds SpatialDeriv directly above a reference.
Expr grad(const Expr& e);

// Arithmetic with light simplification (constant folding, flattening).
Expr sum(std::vector<Expr> terms);
Expr product(std::vector<Expr> factors);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(FunctionTag tag, const Expr& arg);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr sech(const Expr& e);
Expr tanh(const Expr& e);

/// Values for the free symbols of an expression.
class Bindings {
 public:
  virtual ~Bindings() = default;
  virtual double time() const = 0;
  virtual double coord() const = 0;
  virtual double reference(const RefKey& key) const = 0;
};

/// Map-backed bindings; unbound lookups throw UnboundSymbol.
class SymbolBindings final : public Bindings {
 public:
  SymbolBindings& set_time(double t);
  SymbolBindings& set_coord(double x);
  SymbolBindings& set(const RefKey& key, double value);

  double time() const override;
  double coord() const override;
  double reference(const RefKey& key) const override;

 private:
  std::optional<double> t_;
  std::optional<double> x_;
  std::map<RefKey, double> refs_;
};

double evaluate(const Expr& e, const Bindings& bindings);

/// d/dt of an expression free of field and test references.
Expr diff_time(const Expr& e);

/// Maps an unknown terminal (field(f), Dt(field(f)), stage(f, i)) to the
/// direction in which it is perturbed.
struct Perturbation {
  Expr unknown;
  Expr direction;
};

/// Directional derivative of `e` with respect to the listed unknowns.
Expr gateaux(const Expr& e, const std::vector<Perturbation>& perturbations);

/// Rebuild `e` bottom-up. `rule` may return a replacement for a node; nodes
/// without a replacement are rebuilt from their (rewritten) children.
Expr replace(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& rule);

bool structurally_equal(const Expr& a, const Expr& b);

/// Key of a reference terminal (optionally wrapped in SpatialDeriv).
std::optional<RefKey> ref_key(const Expr& e);

/// Every reference terminal occurring in `e`.
std::set<RefKey> collect_refs(const Expr& e);

bool contains(const Expr& e, const std::function<bool(const Node&)>& pred);
std::size_t count_nodes(const Expr& e, NodeKind kind);

/// Polynomial degree of `e` in the references matched by `pred`, or -1 when
/// `e` is not homogeneous in them (mixed degrees, or a reference under a
/// nonlinear function).
int homogeneous_degree(const Expr& e, const std::function<bool(const Node&)>& pred);

/// Plain-text s-expression, e.g. (* 2 (grad u0) (grad v0)).
std::string to_sexpr(const Expr& e);

}  // namespace rkform
