#pragma once

// Finite-dimensional proportional feedback design for the unstable block.
//
// With Lambda the matrix of A_0 on span{phi_0..phi_{d-1}}, L_j = psi_j'(0)
// and gains 0 < gamma_1 < ... < gamma_d:
//   B_k = (Lambda + gamma_k I)^{-1} L L^T (Lambda^T + gamma_k I)^{-1}
//   A   = (B_1 + ... + B_d)^{-1}
//   C   = -Lambda - sum_k gamma_k B_k A
//   u(U) = -sum_k <(Lambda^T + gamma_k I)^{-1} A U, L>.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ndstab/spectral.hpp"

namespace ndstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lambda_{ij} = <psi_i, phi_j'' + c phi_j> by quadrature. Throws
/// BasisInconsistency if the result is not the expected upper-bidiagonal
/// block pattern.
[[nodiscard]] Matrix build_lambda(const BasisPair& basis, int d,
                                  const QuadratureRule& rule = default_basis_rule());

/// L = (psi_0'(0), ..., psi_{d-1}'(0)).
[[nodiscard]] Vector build_trace_vector(const BasisPair& basis, int d);

/// gamma_k = rho + k, k = 1..d.
[[nodiscard]] std::vector<double> default_gammas(double rho, int d);

/// 2-norm condition number (infinite for a singular matrix).
[[nodiscard]] double condition_number(const Matrix& m);

/// Condition numbers above this are treated as singular.
inline constexpr double kSingularCondition = 1e12;

struct DesignSet {
  int d = 0;
  Matrix lambda;
  Vector L;
  std::vector<double> gammas;
  Matrix gram;  ///< L L^T
  std::vector<Matrix> b;
  Matrix sum_b;
  Matrix A;
  Matrix C;
  Vector gain;  ///< assembled feedback: u = gain . U
  double sum_b_min_sv = 0.0;
  double sum_b_max_sv = 0.0;

  [[nodiscard]] double sum_b_condition() const { return sum_b_max_sv / sum_b_min_sv; }
};

/// Throws RankConditionViolated when sum_k B_k is numerically singular and
/// GammaTooSmall when some Lambda + gamma_k I is.
[[nodiscard]] DesignSet build_design(const Matrix& lambda, const Vector& L, std::span<const double> gammas);

/// Full design for the nonlocal heat equation: d from choose_unstable_dim,
/// gammas from the default rule when `gammas` is empty.
[[nodiscard]] DesignSet build_design(const BasisPair& basis, double rho, std::span<const double> gammas = {});

struct KalmanResult {
  bool full_rank = false;
  int rank = 0;
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
};

/// Numerical rank of [L, Lambda L, ..., Lambda^{d-1} L].
[[nodiscard]] KalmanResult kalman_rank(const Matrix& lambda, const Vector& L, double rel_tol = 1e-10);

[[nodiscard]] Matrix kalman_matrix(const Matrix& lambda, const Vector& L);

struct DeterminantChain {
  double kalman_det = 0.0;
  double chain_det = 0.0;  ///< det[(Lambda+gamma_1)^{-1}L ... (Lambda+gamma_d)^{-1}L]
  bool kalman_nonzero = false;
  bool chain_nonzero = false;
  [[nodiscard]] bool agree() const noexcept { return kalman_nonzero == chain_nonzero; }
};

/// Evaluates both ends of the elementary-transformation chain that links
/// invertibility of sum B_k to the Kalman condition.
[[nodiscard]] DeterminantChain determinant_chain_check(const Matrix& lambda, const Vector& L,
                                                       std::span<const double> gammas, double rel_tol = 1e-10);
[[nodiscard]] DeterminantChain determinant_chain_check(const DesignSet& design);

/// First d modes of the lifting D_gamma(beta): (Lambda + gamma I)^{-1} L beta.
[[nodiscard]] Vector lifting_modes(const DesignSet& design, double gamma, double beta_value);
[[nodiscard]] Vector lifting_modes(const Matrix& lambda, const Vector& L, double gamma, double beta_value);

struct LiftingSolution {
  double h = 0.0;
  std::vector<double> x;
  std::vector<double> values;  ///< D at x_0 .. x_{m+1}, D(0) = 1
  Vector projections;          ///< <D, psi_i>, i < d
  double boundary_residual = 0.0;
};

/// Finite-difference solution of
///   -D'' - c D + 2 sum_{i,j<d} Lambda_ij <D, psi_j> phi_i + gamma D = 0,
///   D(0) = 1,  D'(0) + D'(pi) + alpha D(pi) = 0
/// on grid_m interior points. Throws GammaTooSmall if the discrete system is
/// singular.
[[nodiscard]] LiftingSolution solve_lifting_bvp(const BasisPair& basis, const Matrix& lambda, double gamma,
                                                int grid_m);

/// Assembled evaluation of the boundary feedback.
[[nodiscard]] double feedback_u(const DesignSet& design, const Vector& U);

/// Same feedback as a sum of the d terms u_k(U); the terms are returned in
/// `terms` when it is non-null.
[[nodiscard]] double feedback_u_terms(const DesignSet& design, const Vector& U, std::vector<double>* terms = nullptr);

/// max_k |(Lambda + gamma_k I)^{-1} L u_k(U) + B_k A U|, relative to the size
/// of the terms involved.
[[nodiscard]] double mode_identity_check(const DesignSet& design, const Vector& U);

/// <(Lambda + C) z, A z> + gamma_1 <A z, z>; nonpositive when the Lyapunov
/// inequality holds.
[[nodiscard]] double lyapunov_margin(const DesignSet& design, const Vector& z);

}  // namespace ndstab
