#pragma once

// Finite-difference assembly shared by the lifting BVP and the heat solver.
//
// Unknowns are the values at x_1 .. x_{m+1} (x_{m+1} = pi); x_0 carries a
// Dirichlet value. Interior rows i = 1..m read
//     scale * (-y_{i-1} + 2 y_i - y_{i+1}) / h^2 + shift * y_i
// and the last row is the nonlocal condition with second-order one-sided
// differences:
//     (-3 y_0 + 4 y_1 - y_2)/(2h) + (3 y_{m+1} - 4 y_m + y_{m-1})/(2h) + alpha y_{m+1} = 0.

#include <Eigen/Sparse>
#include <span>
#include <vector>

namespace ndstab::detail {

inline Eigen::SparseMatrix<double> assemble_nonlocal_system(int m, double h, double alpha, double scale,
                                                            double shift) {
  const int n = m + 1;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(3 * m + 5));
  const double off = -scale / (h * h);
  const double diag = 2.0 * scale / (h * h) + shift;
  for (int i = 0; i < m; ++i) {
    if (i > 0) entries.emplace_back(i, i - 1, off);
    entries.emplace_back(i, i, diag);
    entries.emplace_back(i, i + 1, off);
  }
  const int bc = m;
  const double inv2h = 1.0 / (2.0 * h);
  entries.emplace_back(bc, 0, 4.0 * inv2h);
  entries.emplace_back(bc, 1, -1.0 * inv2h);
  entries.emplace_back(bc, m - 2, 1.0 * inv2h);
  entries.emplace_back(bc, m - 1, -4.0 * inv2h);
  entries.emplace_back(bc, m, 3.0 * inv2h + alpha);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

/// Right-hand side contribution of the Dirichlet value y_0.
inline void add_dirichlet(Eigen::Ref<Eigen::VectorXd> rhs, int m, double h, double scale, double y0) {
  rhs[0] += scale * y0 / (h * h);
  rhs[m] += 3.0 * y0 / (2.0 * h);
}

/// Discrete value of y'(0) + y'(pi) + alpha y(pi) on the full node vector.
inline double nonlocal_residual(std::span<const double> y, double h, double alpha) {
  const std::size_t last = y.size() - 1;
  const double d0 = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  const double dpi = (3.0 * y[last] - 4.0 * y[last - 1] + y[last - 2]) / (2.0 * h);
  return d0 + dpi + alpha * y[last];
}

}  // namespace ndstab::detail
