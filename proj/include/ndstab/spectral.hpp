#pragma once

// Spectrum and Riesz basis of the heat operator y'' + c y on (0, pi) with
//   y(0) = 0,   y'(0) + y'(pi) + alpha y(pi) = 0.
//
// Eigenvalues come in pairs: lambda_{2k} = c - (2k+1)^2 with eigenfunction
// sin((2k+1)x), and lambda_{2k+1} = c - 4 beta_k^2 with eigenfunction
// sin(2 beta_k x), where beta_k is the root of cot(beta pi) = -alpha / (2 beta)
// in (k + 1/2, k + 1). The eigenfunctions alone are not a basis; the pair
// (phi_j, psi_j) below is a Riesz basis with its bi-orthogonal system.

#include <span>
#include <vector>

#include "ndstab/quadrature.hpp"

namespace ndstab {

/// cot(beta pi) + alpha / (2 beta).
[[nodiscard]] double beta_residual(double beta, double alpha);

/// Root beta_k of cot(beta pi) = -alpha/(2 beta) in (k + 1/2, k + 1).
/// Throws SolverFailure if the residual does not reach 1e-12.
[[nodiscard]] double solve_beta(int k, double alpha);

class Spectrum {
 public:
  Spectrum(int count, double c, double alpha);

  [[nodiscard]] double c() const noexcept { return c_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(lambdas_.size()); }
  [[nodiscard]] std::span<const double> betas() const noexcept { return betas_; }
  [[nodiscard]] std::span<const double> lambdas() const noexcept { return lambdas_; }

  [[nodiscard]] double beta(int k) const;
  /// delta_k = beta_k - k - 1/2, always in (0, 1/2).
  [[nodiscard]] double delta(int k) const;
  [[nodiscard]] double lambda(int j) const;

 private:
  double c_;
  double alpha_;
  std::vector<double> betas_;
  std::vector<double> lambdas_;
};

/// First `count` eigenvalues (count >= 1).
[[nodiscard]] Spectrum eigenvalues(int count, double c, double alpha);

/// d = 2N + 2 for the least N with lambda_{2N+2} < -rho and lambda_{2N+3} < -rho.
/// Always even, so whole 2x2 Jordan blocks are kept.
[[nodiscard]] int choose_unstable_dim(double rho, double c, double alpha);

/// Normalisation C_{k2} making <sin(2 beta x), v_{k2}> = 1. Throws
/// IllConditionedBasis when the normalisation integral vanishes.
[[nodiscard]] double compute_c2(double beta_k, double alpha,
                                const QuadratureRule& rule = default_basis_rule());

struct TraceValue {
  double value = 0.0;
  bool degenerate = false;  ///< |value| < 1e-12: breaks the rank condition.
};

/// Closed-form evaluators for phi_j, psi_j and the derivatives needed
/// downstream. Immutable after construction.
class BasisPair {
 public:
  explicit BasisPair(Spectrum spectrum, const QuadratureRule& rule = default_basis_rule());

  [[nodiscard]] const Spectrum& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] int size() const noexcept { return spectrum_.size(); }
  [[nodiscard]] std::span<const double> c2() const noexcept { return c2_; }

  [[nodiscard]] double phi(int j, double x) const;
  [[nodiscard]] double phi_dd(int j, double x) const;
  [[nodiscard]] double psi(int j, double x) const;
  [[nodiscard]] double psi_d(int j, double x) const;

  /// l_j = psi_j'(0).
  [[nodiscard]] TraceValue trace_l(int j) const;

 private:
  void check_index(int j) const;

  Spectrum spectrum_;
  std::vector<double> c2_;
};

}  // namespace ndstab
