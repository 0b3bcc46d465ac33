#include "rkform/tableau.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "rkform/errors.hpp"
#include "rkform/quadrature.hpp"

namespace rkform {

namespace {

constexpr double kStructuralTol = 1e-12;
constexpr double kOrderTol = 1e-10;
constexpr double kZeroTol = 1e-14;

std::string normalize(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '_' || ch == ' ') ch = '-';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

void require_stages(int stages, int min_stages, const char* what) {
  if (stages < min_stages || stages > kMaxStages) {
    throw InvalidArgument(std::string(what) + ": unsupported stage count " +
                          std::to_string(stages));
  }
}

// Collocation nodes on [-1, 1], ascending.
std::vector<double> gauss_nodes(int s) {
  return newton_roots([s](double x) { return legendre(s, x); }, chebyshev_guesses(s));
}

// Right Radau: roots of P_s - P_{s-1}, which include x = 1.
std::vector<double> radau_right_nodes(int s) {
  std::vector<double> guesses{1.0};
  for (int i = 1; i < s; ++i) {
    guesses.push_back(std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * s)));
  }
  return newton_roots(
      [s](double x) {
        const auto hi = legendre(s, x);
        const auto lo = legendre(s - 1, x);
        return LegendreValue{hi.p - lo.p, hi.dp - lo.dp};
      },
      guesses);
}

// Lobatto: roots of (x^2 - 1) P_n'(x) = n (x P_n - P_{n-1}), n = s - 1.
// The derivative of that product is n (n + 1) P_n.
std::vector<double> lobatto_nodes(int s) {
  const int n = s - 1;
  std::vector<double> guesses{-1.0, 1.0};
  for (int i = 1; i < n; ++i) guesses.push_back(std::cos(i * std::numbers::pi / n));
  return newton_roots(
      [n](double x) {
        const auto pn = legendre(n, x);
        const auto pm = legendre(n - 1, x);
        return LegendreValue{n * (x * pn.p - pm.p), n * (n + 1.0) * pn.p};
      },
      guesses);
}

double lagrange_basis(const Eigen::VectorXd& nodes, int j, double tau) {
  double v = 1.0;
  for (int m = 0; m < nodes.size(); ++m) {
    if (m != j) v *= (tau - nodes[m]) / (nodes[j] - nodes[m]);
  }
  return v;
}

// Integral of the j-th Lagrange basis function over [0, upper].
double integrate_basis(const Eigen::VectorXd& nodes, int j, double upper,
                       const QuadratureRule& rule) {
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    sum += rule.weights[q] * lagrange_basis(nodes, j, upper * rule.points[q]);
  }
  return upper * sum;
}

std::string family_name(CollocationFamily f) {
  switch (f) {
    case CollocationFamily::GaussLegendre:
      return "GaussLegendre";
    case CollocationFamily::RadauIIA:
      return "RadauIIA";
    case CollocationFamily::LobattoIIIA:
      return "LobattoIIIA";
  }
  return "?";
}

Eigen::VectorXd to_unit_interval(const std::vector<double>& x) {
  Eigen::VectorXd c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = 0.5 * (x[i] + 1.0);
  return c;
}

ButcherTableau from_rows(std::initializer_list<std::initializer_list<double>> a,
                         std::initializer_list<double> b, std::initializer_list<double> c,
                         int p, int q, std::string name) {
  const auto s = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(s, s);
  Eigen::Index i = 0;
  for (const auto& row : a) {
    Eigen::Index j = 0;
    for (double v : row) A(i, j++) = v;
    ++i;
  }
  Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.begin(), s);
  Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.begin(), s);
  return ButcherTableau(std::move(A), std::move(bv), std::move(cv), p, q, std::move(name));
}

}  // namespace

ButcherTableau::ButcherTableau(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c,
                               int order, int stage_order, std::string name)
    : A_(std::move(A)),
      b_(std::move(b)),
      c_(std::move(c)),
      order_(order),
      stage_order_(stage_order),
      name_(std::move(name)) {
  const auto s = b_.size();
  if (s < 1 || A_.rows() != s || A_.cols() != s || c_.size() != s) {
    throw InvalidArgument("ButcherTableau: inconsistent shapes");
  }
  if (order_ < 1 || stage_order_ < 0) {
    throw InvalidArgument("ButcherTableau: order must be >= 1 and stage order >= 0");
  }
  if (std::abs(b_.sum() - 1.0) > kStructuralTol) {
    throw InvalidArgument("ButcherTableau: weights do not sum to one");
  }
  if (((A_.rowwise().sum()) - c_).cwiseAbs().maxCoeff() > kStructuralTol) {
    throw InvalidArgument("ButcherTableau: row sums of A differ from c");
  }
}

bool operator==(const ButcherTableau& x, const ButcherTableau& y) {
  if (x.num_stages() != y.num_stages()) return false;
  return x.A_ == y.A_ && x.b_ == y.b_ && x.c_ == y.c_ && x.order_ == y.order_ &&
         x.stage_order_ == y.stage_order_ && x.name_ == y.name_;
}

ButcherTableau make_collocation(CollocationFamily family, int stages) {
  const int min_stages = family == CollocationFamily::LobattoIIIA ? 2 : 1;
  require_stages(stages, min_stages, "make_collocation");

  std::vector<double> x;
  int p = 0;
  switch (family) {
    case CollocationFamily::GaussLegendre:
      x = gauss_nodes(stages);
      p = 2 * stages;
      break;
    case CollocationFamily::RadauIIA:
      x = radau_right_nodes(stages);
      p = 2 * stages - 1;
      break;
    case CollocationFamily::LobattoIIIA:
      x = lobatto_nodes(stages);
      p = 2 * stages - 2;
      break;
  }
  Eigen::VectorXd c = to_unit_interval(x);
  // Endpoint nodes are exact by construction; remove Newton round-off.
  if (family != CollocationFamily::GaussLegendre) c[stages - 1] = 1.0;
  if (family == CollocationFamily::LobattoIIIA) c[0] = 0.0;

  const QuadratureRule rule = gauss_legendre_rule(stages + 2);
  Eigen::MatrixXd A(stages, stages);
  Eigen::VectorXd b(stages);
  for (int j = 0; j < stages; ++j) {
    b[j] = integrate_basis(c, j, 1.0, rule);
    for (int i = 0; i < stages; ++i) A(i, j) = integrate_basis(c, j, c[i], rule);
  }
  // The basis sums to one, so A 1 = c and sum(b) = 1; fold the quadrature
  // round-off into the largest entry of each row.
  auto absorb = [](auto&& row, double target) {
    Eigen::Index k;
    row.cwiseAbs().maxCoeff(&k);
    row(k) += target - row.sum();
  };
  absorb(b, 1.0);
  for (int i = 0; i < stages; ++i) absorb(A.row(i), c[i]);
  return ButcherTableau(std::move(A), std::move(b), std::move(c), p, stages,
                        family_name(family) + "(" + std::to_string(stages) + ")");
}

ButcherTableau make_lobatto_iiic(int stages) {
  require_stages(stages, 2, "make_lobatto_iiic");
  const ButcherTableau base = make_collocation(CollocationFamily::LobattoIIIA, stages);
  const Eigen::VectorXd& c = base.c();
  const Eigen::VectorXd& b = base.b();

  // Row system: first equation pins A(i,0) = b(0); the rest are C(s-1).
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(stages, stages);
  M(0, 0) = 1.0;
  for (int m = 1; m < stages; ++m) {
    for (int j = 0; j < stages; ++j) M(m, j) = std::pow(c[j], m - 1);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw SingularMatrix("make_lobatto_iiic: singular row system");

  Eigen::MatrixXd A(stages, stages);
  for (int i = 0; i < stages; ++i) {
    Eigen::VectorXd rhs(stages);
    rhs[0] = b[0];
    for (int m = 1; m < stages; ++m) rhs[m] = std::pow(c[i], m) / m;
    A.row(i) = lu.solve(rhs).transpose();
  }
  return ButcherTableau(std::move(A), b, c, 2 * stages - 2, stages - 1,
                        "LobattoIIIC(" + std::to_string(stages) + ")");
}

ButcherTableau make_named(NamedScheme scheme) {
  switch (scheme) {
    case NamedScheme::ForwardEuler:
      return from_rows({{0.0}}, {1.0}, {0.0}, 1, 1, "ForwardEuler");
    case NamedScheme::ExplicitMidpoint:
      return from_rows({{0.0, 0.0}, {0.5, 0.0}}, {0.0, 1.0}, {0.0, 0.5}, 2, 1,
                       "ExplicitMidpoint");
    case NamedScheme::RK4:
      return from_rows({{0, 0, 0, 0}, {0.5, 0, 0, 0}, {0, 0.5, 0, 0}, {0, 0, 1, 0}},
                       {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6}, {0, 0.5, 0.5, 1}, 4, 1, "RK4");
    case NamedScheme::SSP33:
      return from_rows({{0, 0, 0}, {1, 0, 0}, {0.25, 0.25, 0}}, {1.0 / 6, 1.0 / 6, 2.0 / 3},
                       {0, 1, 0.5}, 3, 1, "SSP33");
    case NamedScheme::QinZhang:
      return from_rows({{0.25, 0}, {0.5, 0.25}}, {0.5, 0.5}, {0.25, 0.75}, 2, 1, "QinZhang");
    case NamedScheme::AlexanderDIRK2: {
      // Root of g^2 - 2g + 1/2 in (0, 1).
      const double g = 1.0 - std::sqrt(2.0) / 2.0;
      return from_rows({{g, 0}, {1 - g, g}}, {1 - g, g}, {g, 1.0}, 2, 1, "AlexanderDIRK2");
    }
    case NamedScheme::AlexanderDIRK3: {
      // Root of g^3 - 3g^2 + 3g/2 - 1/6 in (1/6, 1/2).
      double g = 0.4358665215;
      for (int it = 0; it < 20; ++it) {
        const double f = ((g - 3.0) * g + 1.5) * g - 1.0 / 6.0;
        const double df = (3.0 * g - 6.0) * g + 1.5;
        g -= f / df;
      }
      const double tau = 0.5 * (1.0 + g);
      const double b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
      const double b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
      return from_rows({{g, 0, 0}, {tau - g, g, 0}, {b1, b2, g}}, {b1, b2, g}, {g, tau, 1.0}, 3,
                       1, "AlexanderDIRK3");
    }
  }
  throw InvalidArgument("make_named: unknown scheme");
}

NamedScheme parse_named_scheme(std::string_view name) {
  const std::string n = normalize(name);
  if (n == "forward-euler" || n == "forwardeuler") return NamedScheme::ForwardEuler;
  if (n == "explicit-midpoint" || n == "explicitmidpoint") return NamedScheme::ExplicitMidpoint;
  if (n == "rk4") return NamedScheme::RK4;
  if (n == "ssp33" || n == "ssp3") return NamedScheme::SSP33;
  if (n == "qin-zhang" || n == "qinzhang") return NamedScheme::QinZhang;
  if (n == "alexander-dirk2" || n == "alexanderdirk2") return NamedScheme::AlexanderDIRK2;
  if (n == "alexander-dirk3" || n == "alexanderdirk3") return NamedScheme::AlexanderDIRK3;
  throw InvalidArgument("unknown scheme name '" + std::string(name) + "'");
}

CollocationFamily parse_family(std::string_view name) {
  const std::string n = normalize(name);
  if (n == "gauss" || n == "gauss-legendre" || n == "gausslegendre" || n == "gl") {
    return CollocationFamily::GaussLegendre;
  }
  if (n == "radau" || n == "radau-iia" || n == "radauiia") return CollocationFamily::RadauIIA;
  if (n == "lobatto-iiia" || n == "lobattoiiia") return CollocationFamily::LobattoIIIA;
  throw InvalidArgument("unknown collocation family '" + std::string(name) + "'");
}

ButcherTableau make_tableau(std::string_view family_or_name, int stages) {
  const std::string n = normalize(family_or_name);
  if (n == "lobatto-iiic" || n == "lobattoiiic") return make_lobatto_iiic(stages);
  if (n.starts_with("gauss") || n == "gl" || n.starts_with("radau") || n == "lobatto-iiia" ||
      n == "lobattoiiia") {
    return make_collocation(parse_family(n), stages);
  }
  return make_named(parse_named_scheme(n));
}

std::string_view to_string(SchemeClass cls) {
  switch (cls) {
    case SchemeClass::Explicit:
      return "Explicit";
    case SchemeClass::DiagonallyImplicit:
      return "DiagonallyImplicit";
    case SchemeClass::FullyImplicit:
      return "FullyImplicit";
  }
  return "?";
}

double OrderConditionReport::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.residual);
  return m;
}

OrderConditionReport check_order_conditions(const ButcherTableau& t, int p, int q) {
  OrderConditionReport report;
  const auto& A = t.A();
  const auto& b = t.b();
  const auto& c = t.c();
  const int s = t.num_stages();
  for (int k = 1; k <= p; ++k) {
    double sum = 0.0;
    for (int i = 0; i < s; ++i) sum += b[i] * std::pow(c[i], k - 1);
    report.residuals.push_back({"B(" + std::to_string(k) + ")", std::abs(sum - 1.0 / k)});
  }
  for (int m = 1; m <= q; ++m) {
    double worst = 0.0;
    for (int i = 0; i < s; ++i) {
      double sum = 0.0;
      for (int j = 0; j < s; ++j) sum += A(i, j) * std::pow(c[j], m - 1);
      worst = std::max(worst, std::abs(sum - std::pow(c[i], m) / m));
    }
    report.residuals.push_back({"C(" + std::to_string(m) + ")", worst});
  }
  report.passed = report.max_residual() <= kOrderTol;
  return report;
}

std::complex<double> stability_function(const ButcherTableau& t, std::complex<double> z) {
  const int s = t.num_stages();
  const Eigen::MatrixXcd M =
      Eigen::MatrixXcd::Identity(s, s) - z * t.A().cast<std::complex<double>>();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) throw SingularMatrix("stability_function: I - zA is singular");
  const Eigen::VectorXcd y = lu.solve(Eigen::VectorXcd::Ones(s));
  return 1.0 + z * t.b().cast<std::complex<double>>().dot(y);
}

double stability_at_infinity(const ButcherTableau& t) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t.A());
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) {
    throw SingularMatrix("stability_at_infinity: A is singular, R(inf) undefined");
  }
  const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Ones(t.num_stages()));
  return std::abs(1.0 - t.b().dot(y));
}

SchemeClass classify(const ButcherTableau& t) {
  const auto& A = t.A();
  const int s = t.num_stages();
  bool strictly_lower = true;
  bool lower = true;
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) {
      if (std::abs(A(i, j)) > kZeroTol) {
        strictly_lower = false;
        if (j > i) lower = false;
      }
    }
  }
  if (strictly_lower) return SchemeClass::Explicit;
  if (lower) return SchemeClass::DiagonallyImplicit;
  return SchemeClass::FullyImplicit;
}

double symplecticity_residual(const ButcherTableau& t) {
  const auto& A = t.A();
  const auto& b = t.b();
  double worst = 0.0;
  for (int i = 0; i < t.num_stages(); ++i) {
    for (int j = 0; j < t.num_stages(); ++j) {
      worst = std::max(worst, std::abs(b[i] * A(i, j) + b[j] * A(j, i) - b[i] * b[j]));
    }
  }
  return worst;
}

}  // namespace rkform
