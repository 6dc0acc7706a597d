#include "ndstab/design.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "ndstab/error.hpp"
#include "nonlocal_fd.hpp"

namespace ndstab {

namespace {

Eigen::PartialPivLU<Matrix> shifted_lu(const Matrix& lambda, double gamma) {
  const Matrix shifted = lambda + gamma * Matrix::Identity(lambda.rows(), lambda.cols());
  if (condition_number(shifted) > kSingularCondition) {
    std::ostringstream msg;
    msg << "Lambda + gamma I is numerically singular for gamma=" << gamma;
    throw Error(ErrorCode::GammaTooSmall, msg.str());
  }
  return shifted.partialPivLu();
}

bool nonzero_by_svd(const Matrix& m, double rel_tol) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return false;
  return sv(sv.size() - 1) > rel_tol * sv(0);
}

}  // namespace

double condition_number(const Matrix& m) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

Matrix build_lambda(const BasisPair& basis, int d, const QuadratureRule& rule) {
  if (d < 1 || d > basis.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "build_lambda: basis not built through index " + std::to_string(d - 1));
  }
  const Spectrum& spec = basis.spectrum();
  const double c = spec.c();
  Matrix lambda(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      lambda(i, j) = rule.integrate([&](double x) { return basis.psi(i, x) * (basis.phi_dd(j, x) + c * basis.phi(j, x)); });
    }
  }

  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double v = lambda(i, j);
      bool ok = true;
      if (i == j) {
        const double expected = spec.lambda(i);
        ok = std::abs(v - expected) <= 1e-8 * std::max(1.0, std::abs(expected));
      } else if (i % 2 == 0 && j == i + 1) {
        const int k = i / 2;
        const double magnitude = 2.0 * spec.beta(k) + 2.0 * k + 1.0;
        ok = std::abs(std::abs(v) - magnitude) <= 1e-6 * magnitude;
      } else {
        ok = std::abs(v) <= 1e-8;
      }
      if (!ok) {
        std::ostringstream msg;
        msg << "build_lambda: entry (" << i << ", " << j << ") = " << v << " breaks the Jordan block pattern";
        throw Error(ErrorCode::BasisInconsistency, msg.str());
      }
    }
  }
  return lambda;
}

Vector build_trace_vector(const BasisPair& basis, int d) {
  Vector L(d);
  for (int j = 0; j < d; ++j) L(j) = basis.trace_l(j).value;
  return L;
}

std::vector<double> default_gammas(double rho, int d) {
  std::vector<double> g(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(k)] = rho + k + 1.0;
  return g;
}

DesignSet build_design(const Matrix& lambda, const Vector& L, std::span<const double> gammas) {
  const auto d = static_cast<int>(lambda.rows());
  if (lambda.cols() != d || L.size() != d) {
    throw Error(ErrorCode::InvalidArgument, "build_design: Lambda and L dimensions disagree");
  }
  if (static_cast<int>(gammas.size()) != d) {
    throw Error(ErrorCode::InvalidArgument, "build_design: need exactly d = " + std::to_string(d) + " gains, got " +
                                                std::to_string(gammas.size()));
  }
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    if (!(gammas[k] > 0.0) || (k > 0 && !(gammas[k] > gammas[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "build_design: gains must be positive and strictly increasing");
    }
  }

  DesignSet ds;
  ds.d = d;
  ds.lambda = lambda;
  ds.L = L;
  ds.gammas.assign(gammas.begin(), gammas.end());
  ds.gram = L * L.transpose();
  ds.sum_b = Matrix::Zero(d, d);
  std::vector<Eigen::PartialPivLU<Matrix>> lus;
  for (double g : gammas) {
    lus.push_back(shifted_lu(lambda, g));
    const Matrix inv = lus.back().inverse();
    Matrix bk = inv * ds.gram * inv.transpose();
    ds.sum_b += bk;
    ds.b.push_back(std::move(bk));
  }

  const Eigen::JacobiSVD<Matrix> svd(ds.sum_b);
  ds.sum_b_max_sv = svd.singularValues()(0);
  ds.sum_b_min_sv = svd.singularValues()(d - 1);
  if (!(ds.sum_b_min_sv > 0.0) || ds.sum_b_max_sv / ds.sum_b_min_sv > kSingularCondition) {
    std::ostringstream msg;
    msg << "sum of B_k is singular (sigma_min=" << ds.sum_b_min_sv << ", sigma_max=" << ds.sum_b_max_sv
        << "): the rank condition fails";
    throw RankConditionViolated(msg.str(), ds.sum_b_min_sv, ds.sum_b_max_sv);
  }
  const Matrix a = ds.sum_b.partialPivLu().inverse();
  ds.A = 0.5 * (a + a.transpose());

  Matrix weighted = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < ds.b.size(); ++k) weighted += ds.gammas[k] * ds.b[k];
  ds.C = -lambda - weighted * ds.A;

  ds.gain = Vector::Zero(d);
  for (const auto& lu : lus) ds.gain -= ds.A * lu.solve(L);
  return ds;
}

DesignSet build_design(const BasisPair& basis, double rho, std::span<const double> gammas) {
  const Spectrum& spec = basis.spectrum();
  const int d = choose_unstable_dim(rho, spec.c(), spec.alpha());
  const Matrix lambda = build_lambda(basis, d);
  const Vector L = build_trace_vector(basis, d);
  for (int j = 0; j < d; ++j) {
    if (basis.trace_l(j).degenerate) {
      throw Error(ErrorCode::RankCondition, "build_design: boundary trace l_" + std::to_string(j) + " vanishes");
    }
  }
  if (gammas.empty()) {
    const auto g = default_gammas(rho, d);
    return build_design(lambda, L, g);
  }
  return build_design(lambda, L, gammas);
}

Matrix kalman_matrix(const Matrix& lambda, const Vector& L) {
  const auto d = lambda.rows();
  Matrix k(d, d);
  Vector col = L;
  for (Eigen::Index j = 0; j < d; ++j) {
    k.col(j) = col;
    col = lambda * col;
  }
  return k;
}

KalmanResult kalman_rank(const Matrix& lambda, const Vector& L, double rel_tol) {
  const Matrix k = kalman_matrix(lambda, L);
  const Eigen::JacobiSVD<Matrix> svd(k);
  const auto& sv = svd.singularValues();
  KalmanResult r;
  r.max_singular_value = sv(0);
  r.min_singular_value = sv(sv.size() - 1);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(0) > 0.0 && sv(i) > rel_tol * sv(0)) ++r.rank;
  }
  r.full_rank = r.rank == lambda.rows();
  return r;
}

DeterminantChain determinant_chain_check(const Matrix& lambda, const Vector& L, std::span<const double> gammas,
                                         double rel_tol) {
  const auto d = lambda.rows();
  Matrix chain(d, static_cast<Eigen::Index>(gammas.size()));
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const Matrix shifted = lambda + gammas[k] * Matrix::Identity(d, d);
    chain.col(static_cast<Eigen::Index>(k)) = shifted.partialPivLu().solve(L);
  }
  const Matrix kalman = kalman_matrix(lambda, L);
  DeterminantChain r;
  r.kalman_det = kalman.determinant();
  r.chain_det = chain.determinant();
  r.kalman_nonzero = nonzero_by_svd(kalman, rel_tol);
  r.chain_nonzero = nonzero_by_svd(chain, rel_tol);
  return r;
}

DeterminantChain determinant_chain_check(const DesignSet& design) {
  return determinant_chain_check(design.lambda, design.L, design.gammas);
}

Vector lifting_modes(const Matrix& lambda, const Vector& L, double gamma, double beta_value) {
  return shifted_lu(lambda, gamma).solve(L) * beta_value;
}

Vector lifting_modes(const DesignSet& design, double gamma, double beta_value) {
  return lifting_modes(design.lambda, design.L, gamma, beta_value);
}

LiftingSolution solve_lifting_bvp(const BasisPair& basis, const Matrix& lambda, double gamma, int grid_m) {
  if (grid_m < 3) throw Error(ErrorCode::InvalidArgument, "solve_lifting_bvp: grid_m must be >= 3");
  const auto d = static_cast<int>(lambda.rows());
  const Spectrum& spec = basis.spectrum();
  const int m = grid_m;
  const int n = m + 1;
  const double h = std::numbers::pi / (m + 1);

  LiftingSolution sol;
  sol.h = h;
  sol.x.resize(static_cast<std::size_t>(m + 2));
  for (int i = 0; i <= m + 1; ++i) sol.x[static_cast<std::size_t>(i)] = i * h;
  sol.x.back() = std::numbers::pi;
  const std::vector<double> w = simpson_weights(static_cast<std::size_t>(m + 1), h);

  // Low-rank part: rows i < m carry 2 (Phi Lambda X)_i with X = Psi^T W D.
  Matrix phi_lambda = Matrix::Zero(n, d);
  Matrix psi_w = Matrix::Zero(d, n);
  Vector x0 = Vector::Zero(d);
  for (int a = 0; a < d; ++a) {
    x0(a) = w[0] * basis.psi(a, 0.0);
    for (int i = 1; i <= m + 1; ++i) {
      const double xi = sol.x[static_cast<std::size_t>(i)];
      psi_w(a, i - 1) = w[static_cast<std::size_t>(i)] * basis.psi(a, xi);
    }
  }
  Matrix phi = Matrix::Zero(n, d);
  for (int i = 1; i <= m; ++i) {
    for (int a = 0; a < d; ++a) phi(i - 1, a) = basis.phi(a, sol.x[static_cast<std::size_t>(i)]);
  }
  phi_lambda = 2.0 * phi * lambda;

  const Eigen::SparseMatrix<double> t = detail::assemble_nonlocal_system(m, h, spec.alpha(), 1.0, gamma - spec.c());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(t);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::GammaTooSmall, "solve_lifting_bvp: finite-difference operator is singular");
  }

  Vector rhs = Vector::Zero(n);
  detail::add_dirichlet(rhs, m, h, 1.0, 1.0);
  rhs -= phi_lambda * x0;

  const Vector y = lu.solve(rhs);
  const Matrix z = lu.solve(phi_lambda);
  const Matrix capacitance = Matrix::Identity(d, d) + psi_w * z;
  if (condition_number(capacitance) > kSingularCondition) {
    std::ostringstream msg;
    msg << "solve_lifting_bvp: discrete lifting problem is singular for gamma=" << gamma;
    throw Error(ErrorCode::GammaTooSmall, msg.str());
  }
  const Vector sol_d = y - z * capacitance.partialPivLu().solve(psi_w * y);

  sol.values.resize(static_cast<std::size_t>(m + 2));
  sol.values[0] = 1.0;
  for (int i = 0; i < n; ++i) sol.values[static_cast<std::size_t>(i + 1)] = sol_d(i);
  sol.projections = x0 + psi_w * sol_d;
  sol.boundary_residual = detail::nonlocal_residual(sol.values, h, spec.alpha());
  return sol;
}

double feedback_u(const DesignSet& design, const Vector& U) { return design.gain.dot(U); }

double feedback_u_terms(const DesignSet& design, const Vector& U, std::vector<double>* terms) {
  const Vector au = design.A * U;
  const auto d = design.d;
  double total = 0.0;
  if (terms) terms->clear();
  for (double g : design.gammas) {
    const Matrix shifted_t = design.lambda.transpose() + g * Matrix::Identity(d, d);
    const double uk = -shifted_t.partialPivLu().solve(au).dot(design.L);
    if (terms) terms->push_back(uk);
    total += uk;
  }
  return total;
}

double mode_identity_check(const DesignSet& design, const Vector& U) {
  std::vector<double> terms;
  (void)feedback_u_terms(design, U, &terms);
  const Vector au = design.A * U;
  double worst = 0.0;
  for (std::size_t k = 0; k < design.gammas.size(); ++k) {
    const Vector lhs = lifting_modes(design, design.gammas[k], terms[k]);
    const Vector rhs = -design.b[k] * au;
    const double scale = std::max({1.0, lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()});
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double lyapunov_margin(const DesignSet& design, const Vector& z) {
  const Vector az = design.A * z;
  return ((design.lambda + design.C) * z).dot(az) + design.gammas.front() * az.dot(z);
}

}  // namespace ndstab
