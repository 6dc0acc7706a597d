#pragma once

// Reference computations for the tests. None of these call into the library:
// roots by plain bisection, quadrature by Golub-Welsch Gauss rules, matrix
// exponentials from Eigen's unsupported module, exact heat solutions.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

/// Root of cot(b pi) + alpha / (2 b) on (k + 1/2, k + 1) by bisection only.
inline double beta_bisect(int k, double alpha) {
  double lo = k + 0.5, hi = k + 1.0;
  auto f = [&](double b) { return std::cos(b * kPi) / std::sin(b * kPi) + alpha / (2.0 * b); };
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Gauss-Legendre nodes and weights on [a, b] from the Jacobi matrix.
inline std::pair<std::vector<double>, std::vector<double>> gauss(int n, double a, double b) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double v = i / std::sqrt(4.0 * i * i - 1.0);
    j(i, i - 1) = v;
    j(i - 1, i) = v;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    x[static_cast<std::size_t>(i)] = 0.5 * (b - a) * es.eigenvalues()(i) + 0.5 * (b + a);
    w[static_cast<std::size_t>(i)] = (b - a) * v0 * v0;
  }
  return {x, w};
}

/// Composite Gauss rule: `panels` panels of `n` points on [a, b].
template <typename F>
double integrate(F&& f, double a, double b, int panels = 50, int n = 12) {
  const double w = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const auto [x, wt] = gauss(n, a + p * w, a + (p + 1) * w);
    for (std::size_t i = 0; i < x.size(); ++i) acc += wt[i] * f(x[i]);
  }
  return acc;
}

/// Integral of f over [a, b] by a midpoint Riemann sum with n points.
template <typename F>
double riemann(F&& f, double a, double b, long n) {
  const double h = (b - a) / static_cast<double>(n);
  double acc = 0.0;
  for (long i = 0; i < n; ++i) acc += f(a + (static_cast<double>(i) + 0.5) * h);
  return acc * h;
}

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m, double s = 1.0) {
  return (s * m).exp();
}

/// Numerical rank by column-pivoted QR with a relative threshold.
inline int rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(rel_tol);
  return static_cast<int>(qr.rank());
}

/// Closed-form basis, written out independently of the library.
struct Basis {
  double c, alpha;
  std::vector<double> beta, c2;

  Basis(int pairs, double c_in, double alpha_in) : c(c_in), alpha(alpha_in) {
    for (int k = 0; k < pairs; ++k) {
      const double b = beta_bisect(k, alpha);
      beta.push_back(b);
      const double f = 2.0 * b;
      const double n = integrate([&](double x) { return std::sin(f * x) * (std::sin(f * x) + f / alpha * std::cos(f * x)); },
                                 0.0, kPi);
      c2.push_back(1.0 / n);
    }
  }

  [[nodiscard]] double phi(int j, double x) const {
    const int k = j / 2;
    const double m = 2.0 * k + 1.0;
    if (j % 2 == 0) return std::sin(m * x);
    const double delta = beta[static_cast<std::size_t>(k)] - k - 0.5;
    return (std::sin(2.0 * beta[static_cast<std::size_t>(k)] * x) - std::sin(m * x)) / (2.0 * delta);
  }

  [[nodiscard]] double psi(int j, double x) const {
    const int k = j / 2;
    const double m = 2.0 * k + 1.0;
    const double f = 2.0 * beta[static_cast<std::size_t>(k)];
    const double v2 = c2[static_cast<std::size_t>(k)] * (std::sin(f * x) + f / alpha * std::cos(f * x));
    if (j % 2 == 1) return 2.0 * (beta[static_cast<std::size_t>(k)] - k - 0.5) * v2;
    return 2.0 / kPi * (std::sin(m * x) - m / alpha * std::cos(m * x)) + v2;
  }

  /// <psi_i, phi_j'' + c phi_j> with phi_j'' from central differences.
  [[nodiscard]] Eigen::MatrixXd lambda(int d) const {
    Eigen::MatrixXd out(d, d);
    constexpr double h = 1e-4;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        out(i, j) = integrate(
            [&](double x) {
              const double dd = (phi(j, x + h) - 2.0 * phi(j, x) + phi(j, x - h)) / (h * h);
              return psi(i, x) * (dd + c * phi(j, x));
            },
            0.0, kPi);
      }
    }
    return out;
  }
};

}  // namespace oracle
