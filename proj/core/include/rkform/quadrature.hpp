#pragma once

#include <functional>
#include <vector>

namespace rkform {

/// Quadrature rule on the reference interval [0, 1]; weights sum to one.
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  /// Highest polynomial degree integrated exactly.
  int exactness() const { return 2 * static_cast<int>(points.size()) - 1; }
};

/// n-point Gauss-Legendre rule mapped to [0, 1].
QuadratureRule gauss_legendre_rule(int n);

/// Legendre polynomial P_n(x) and its derivative on [-1, 1].
struct LegendreValue {
  double p;
  double dp;
};
LegendreValue legendre(int n, double x);

/// Roots of a polynomial on (-1, 1) by Newton iteration with deflation.
///
/// `eval` returns (p, p') at x. `guesses` seeds one root each; previously
/// found roots are divided out so that every guess converges to a new root.
/// Results are sorted ascending.
std::vector<double> newton_roots(const std::function<LegendreValue(double)>& eval,
                                 std::vector<double> guesses, double tol = 1e-14,
                                 int max_iter = 100);

/// Chebyshev points cos((2i+1)pi/(2n)), i = 0..n-1, descending order.
std::vector<double> chebyshev_guesses(int n);

}  // namespace rkform
