#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rkform {

/// Runge-Kutta coefficients (A, b, c) with declared order p and stage order q.
///
/// Immutable after construction; the constructor checks shapes and the
/// consistency conditions sum(b) = 1 and A 1 = c.
class ButcherTableau {
 public:
  ButcherTableau(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c, int order,
                 int stage_order, std::string name);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& c() const { return c_; }
  int order() const { return order_; }
  int stage_order() const { return stage_order_; }
  const std::string& name() const { return name_; }
  int num_stages() const { return static_cast<int>(b_.size()); }

  /// Bitwise equality of every coefficient and the metadata.
  friend bool operator==(const ButcherTableau& x, const ButcherTableau& y);

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
  int order_;
  int stage_order_;
  std::string name_;
};

enum class CollocationFamily { GaussLegendre, RadauIIA, LobattoIIIA };

enum class NamedScheme {
  ForwardEuler,
  ExplicitMidpoint,
  RK4,
  SSP33,
  QinZhang,
  AlexanderDIRK2,
  AlexanderDIRK3,
};

enum class SchemeClass { Explicit, DiagonallyImplicit, FullyImplicit };

inline constexpr int kMaxStages = 8;

/// Collocation tableau: c from the family's nodes, A and b from integrals of
/// the Lagrange basis at those nodes.
ButcherTableau make_collocation(CollocationFamily family, int stages);

/// LobattoIIIC: Lobatto b and c; each row of A fixes A(i,0) = b(0) and
/// satisfies C(s-1).
ButcherTableau make_lobatto_iiic(int stages);

ButcherTableau make_named(NamedScheme scheme);

/// Parse "forward-euler", "qin-zhang", ... (case-insensitive, '_' or '-').
NamedScheme parse_named_scheme(std::string_view name);
CollocationFamily parse_family(std::string_view name);
std::string_view to_string(SchemeClass cls);

/// Tableau by family name ("gauss", "radau", "lobatto-iiia", "lobatto-iiic")
/// and stage count, or by scheme name when `stages` is ignored.
ButcherTableau make_tableau(std::string_view family_or_name, int stages);

struct ConditionResidual {
  std::string condition;  // "B(k)" or "C(m)"
  double residual;
};

struct OrderConditionReport {
  std::vector<ConditionResidual> residuals;
  bool passed;  // every residual <= 1e-10

  double max_residual() const;
};

/// Residuals of the simplifying conditions B(1..p) and C(1..q).
OrderConditionReport check_order_conditions(const ButcherTableau& t, int p, int q);

/// R(z) = 1 + z b^T (I - zA)^{-1} 1. Throws SingularMatrix at poles.
std::complex<double> stability_function(const ButcherTableau& t, std::complex<double> z);

/// |1 - b^T A^{-1} 1|. Throws SingularMatrix when A is singular.
double stability_at_infinity(const ButcherTableau& t);

SchemeClass classify(const ButcherTableau& t);

/// max_ij |b_i A_ij + b_j A_ji - b_i b_j|; zero for symplectic methods.
double symplecticity_residual(const ButcherTableau& t);

}  // namespace rkform
