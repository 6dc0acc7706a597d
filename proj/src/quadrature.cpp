#include "ndstab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace ndstab {

namespace {

// Legendre P_n(x) and P_{n-1}(x) by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

}  // namespace

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  const auto n = static_cast<std::size_t>(order);
  QuadratureRule rule;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, pm] = legendre_pair(order, x);
      const double dp = order * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [pn, pm] = legendre_pair(order, x);
    const double dp = order * (x * pn - pm) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order) {
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be >= 1");
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * ref.size());
  rule.weights.reserve(rule.nodes.capacity());
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      rule.nodes.push_back(lo + 0.5 * width * (ref.nodes[i] + 1.0));
      rule.weights.push_back(0.5 * width * ref.weights[i]);
    }
  }
  return rule;
}

const QuadratureRule& default_basis_rule() {
  static const QuadratureRule rule = composite_gauss_legendre(0.0, std::numbers::pi, 20, 20);
  return rule;
}

std::vector<double> simpson_weights(std::size_t n, double h) {
  std::vector<double> w(n + 1, 0.0);
  if (n == 0) return w;
  if (n == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const std::size_t even = (n % 2 == 0) ? n : n - 3;
  if (even > 0) {
    for (std::size_t i = 0; i <= even; ++i) {
      const double c = (i == 0 || i == even) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      w[i] += c * h / 3.0;
    }
  }
  if (even != n) {
    constexpr double c38[4] = {1.0, 3.0, 3.0, 1.0};
    for (std::size_t i = 0; i < 4; ++i) w[even + i] += c38[i] * 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace ndstab
