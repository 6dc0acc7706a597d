#pragma once

#include <cstddef>
#include <vector>

namespace ndstab {

/// Nodes and weights of a quadrature rule on a fixed interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }

  template <typename F>
  [[nodiscard]] double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Gauss-Legendre rule with `order` points on [-1, 1].
QuadratureRule gauss_legendre(int order);

/// Composite Gauss-Legendre: `panels` equal panels of `order` points on [a, b].
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

/// Default rule used for basis inner products on [0, pi] (400 nodes).
const QuadratureRule& default_basis_rule();

/// Weights for composite Simpson on n equal intervals of width h (n + 1 nodes).
/// Odd n closes the last three intervals with the 3/8 rule; n = 1 is the
/// trapezoid rule and n = 0 returns a single zero weight.
std::vector<double> simpson_weights(std::size_t n, double h);

}  // namespace ndstab
