#include "rkform/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rkform/errors.hpp"

namespace rkform {

LegendreValue legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = x;
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  // P_n'(x) from the three-term relation; valid away from x = +-1.
  double dp;
  if (std::abs(1.0 - x * x) > 1e-14) {
    dp = n * (x * p - p_prev) / (x * x - 1.0);
  } else {
    const double sign = (x > 0 || n % 2 == 1) ? 1.0 : -1.0;
    dp = sign * 0.5 * n * (n + 1.0);
  }
  return {p, dp};
}

std::vector<double> chebyshev_guesses(int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * n));
  }
  return g;
}

std::vector<double> newton_roots(const std::function<LegendreValue(double)>& eval,
                                 std::vector<double> guesses, double tol, int max_iter) {
  std::vector<double> roots;
  roots.reserve(guesses.size());
  for (double x : guesses) {
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
      const auto [p, dp] = eval(x);
      double deflate = 0.0;
      for (double r : roots) deflate += 1.0 / (x - r);
      const double delta = p / (dp - p * deflate);
      x -= delta;
      if (std::abs(delta) <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error("newton_roots: root iteration did not converge");
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre_rule: n must be >= 1");
  const auto roots = newton_roots([n](double x) { return legendre(n, x); }, chebyshev_guesses(n));
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = roots[i];
    const double dp = legendre(n, x).dp;
    // Weight on [-1, 1] is 2 / ((1 - x^2) P_n'(x)^2); halve for [0, 1].
    rule.points[i] = 0.5 * (x + 1.0);
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  // The weights sum to one exactly in exact arithmetic; remove the rounding.
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace rkform
