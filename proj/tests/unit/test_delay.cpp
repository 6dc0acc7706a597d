#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "ndstab/delay.hpp"
#include "ndstab/error.hpp"
#include "../support/oracles.hpp"

using namespace ndstab;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Vector vec1(double v) { return Vector::Constant(1, v); }

ControlHistory sampled(int dim, double h, int n, const std::function<Vector(double)>& f) {
  ControlHistory out(dim);
  for (int i = 0; i <= n; ++i) out.append(i * h, f(i * h));
  return out;
}

}  // namespace

TEST_CASE("mat_exp agrees with the oracle and the Parlett recurrence") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int dim : {1, 2, 3, 5}) {
    for (double s : {1e-3, 0.2, 1.0, 7.5}) {
      Matrix m(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = n(rng);
      const Matrix ref = oracle::expm(m, s);
      CHECK((mat_exp(m, s) - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
    }
  }
  Matrix t(3, 3);
  t << 1.0, -2.4, 0.5, 0.0, 0.05, 3.0, 0.0, 0.0, -4.0;
  for (double s : {-0.2, 0.1, 2.0}) {
    CHECK((mat_exp_triangular(t, s) - mat_exp(t, s)).norm() <= 1e-12 * mat_exp(t, s).norm());
  }
  CHECK((mat_exp(Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)).norm() <= 1e-15);
  Matrix rep(2, 2);
  rep << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_AS((void)mat_exp_triangular(rep), Error);
}

TEST_CASE("ControlHistory interpolates, is zero before 0 and refuses the future") {
  ControlHistory h(2);
  CHECK(h.empty());
  h.append(0.0, Eigen::Vector2d(1.0, 2.0));
  h.append(0.5, Eigen::Vector2d(3.0, 4.0));
  h.append(1.0, Eigen::Vector2d(5.0, 0.0));
  CHECK(h.size() == 3);
  CHECK(h.at(-0.1).isZero());
  CHECK(h.at(0.25).isApprox(Eigen::Vector2d(2.0, 3.0)));
  CHECK(h.at(1.0).isApprox(Eigen::Vector2d(5.0, 0.0)));
  CHECK(h.uniform_step().has_value());
  CHECK(*h.uniform_step() == doctest::Approx(0.5));
  try {
    (void)h.at(1.01);
    FAIL("expected a causality error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Causality);
  }
  CHECK_THROWS_AS(h.append(1.0, Eigen::Vector2d(0.0, 0.0)), Error);
  CHECK_THROWS_AS(h.append(2.0, Vector::Zero(3)), Error);
  CHECK(h.truncated(0.6).size() == 2);
  h.append(1.7, Eigen::Vector2d(0.0, 0.0));
  CHECK_FALSE(h.uniform_step().has_value());
}

TEST_CASE("lower limit of the delay window") {
  const DelayOperator lit(0.2, scalar(1.0), scalar(1.0));
  const DelayOperator cau(0.2, scalar(1.0), scalar(1.0), LowerLimit::Causal);
  CHECK(lit.lower_limit(0.1) == doctest::Approx(0.2));
  CHECK(lit.lower_limit(0.3) == doctest::Approx(0.2));
  CHECK(lit.lower_limit(1.0) == doctest::Approx(0.8));
  CHECK(cau.lower_limit(0.1) == doctest::Approx(0.0));
  CHECK(cau.lower_limit(1.0) == doctest::Approx(0.8));
}

TEST_CASE("kernel tabulation matches direct evaluation") {
  Matrix lam(2, 2), c(2, 2);
  lam << 1.0, -2.4, 0.0, 0.05;
  c << -1.0, 2.0, 0.3, 0.1;
  const DelayOperator op(0.2, lam, c, LowerLimit::Literal, 0.01);
  for (int j : {0, 3, 20}) {
    const Matrix* tab = op.tabulated(j * 0.01);
    REQUIRE(tab != nullptr);
    CHECK((*tab - oracle::expm(lam, j * 0.01 - 0.2) * c).norm() <= 1e-12);
  }
  CHECK(op.tabulated(0.005) == nullptr);
  CHECK((op.kernel(0.13) - oracle::expm(lam, 0.13 - 0.2) * c).norm() <= 1e-12);
}

TEST_CASE("T_tau of a constant input matches a Riemann-sum oracle (d = 1)") {
  const double tau = 0.2, lam = 0.7, cc = -1.3, t = 1.0;
  const auto f = [&](double s) { return std::exp((t - tau - s) * lam) * cc; };
  const double ref = oracle::riemann(f, t - tau, t, 1'000'000);
  // Aligned samples on a fine grid and irregular samples that take the fallback path.
  const ControlHistory fine = sampled(1, 1e-3, 1000, [](double) { return vec1(1.0); });
  ControlHistory coarse(1);
  for (double s : {0.0, 0.13, 0.41, 0.77, 1.0}) coarse.append(s, vec1(1.0));
  for (const ControlHistory* h : std::initializer_list<const ControlHistory*>{&fine, &coarse}) {
    for (double step : {0.0, 1e-3}) {
      const DelayOperator op(tau, scalar(lam), scalar(cc), LowerLimit::Literal, step);
      CHECK(std::abs(apply_T_tau(op, *h, t)(0) - ref) <= 1e-8);
    }
  }
  const double closed = cc * (std::exp(-tau * lam) * (std::exp(tau * lam) - 1.0)) / lam;
  CHECK(ref == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("T_tau window is empty before 2 tau for the literal limit") {
  const DelayOperator op(0.2, scalar(0.5), scalar(1.0));
  const ControlHistory h = sampled(1, 0.01, 100, [](double) { return vec1(1.0); });
  CHECK(apply_T_tau(op, h, 0.1).isZero());
  CHECK(apply_T_tau(op, h, 0.2).isZero());
  CHECK(apply_T_tau(op, h, 0.3)(0) > 0.0);
  const DelayOperator causal(0.2, scalar(0.5), scalar(1.0), LowerLimit::Causal);
  CHECK(apply_T_tau(causal, h, 0.1)(0) > 0.0);
}

TEST_CASE("T_tau is exact for polynomials of degree <= 3 times the kernel") {
  // With Lambda = 0 the kernel is the constant C, so Simpson integrates cubics exactly.
  const DelayOperator op(0.25, scalar(0.0), scalar(2.0), LowerLimit::Causal, 0.0);
  const ControlHistory h = sampled(1, 0.25 / 64, 64 * 8, [](double s) { return vec1(s * s * s - s); });
  const double t = 1.5, a = t - 0.25;
  const double exact = 2.0 * ((std::pow(t, 4) - std::pow(a, 4)) / 4.0 - (t * t - a * a) / 2.0);
  CHECK(apply_T_tau(op, h, t)(0) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("tau = 0 gives U = Y exactly") {
  Matrix lam(2, 2), c(2, 2);
  lam << 1.0, -2.4, 0.0, 0.05;
  c << -100.0, 500.0, -20.0, 100.0;
  ArtsteinSolver solver(0.0, lam, c, 1e-3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vector y = Eigen::Vector2d(n(rng), n(rng));
    CHECK((solver.step(y) - y).norm() == 0.0);
  }
}

TEST_CASE("Artstein solver satisfies the fixed point and matches the Neumann series") {
  Matrix lam(2, 2), c(2, 2);
  lam << 1.0, -2.4, 0.0, 0.05;
  c << -1.0, 2.0, 0.3, -0.5;
  const double dt = 1e-3, tau = 0.1;
  for (LowerLimit mode : {LowerLimit::Literal, LowerLimit::Causal}) {
    ArtsteinSolver solver(tau, lam, c, dt, mode);
    for (int i = 0; i <= 600; ++i) {
      const double t = i * dt;
      (void)solver.step(Eigen::Vector2d(std::sin(3.0 * t), std::cos(t) + t));
    }
    double worst = 0.0;
    for (int i = 0; i <= 600; i += 7) {
      worst = std::max(worst, artstein_residual(solver.op(), solver.u_history(), solver.y_history(), i * dt));
    }
    CHECK(worst <= 1e-12);
    for (double t : {0.15, 0.35, 0.6}) {
      const NeumannResult nr = neumann_U(solver.op(), solver.y_history(), t);
      CHECK(nr.converged);
      CHECK_FALSE(nr.divergence_warning);
      const std::size_t idx = static_cast<std::size_t>(std::lround(t / dt));
      CHECK((nr.value - solver.u_history().value(idx)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("Neumann terms decrease geometrically for a small delay") {
  const DelayOperator op(0.1, scalar(-0.5), scalar(0.8), LowerLimit::Causal, 0.001);
  const ControlHistory y = sampled(1, 0.001, 500, [](double s) { return vec1(1.0 + s); });
  const NeumannResult nr = neumann_U(op, y, 0.5);
  REQUIRE(nr.term_norms.size() >= 9);
  for (std::size_t j = 1; j <= 8; ++j) CHECK(nr.term_norms[j] < nr.term_norms[j - 1]);
  CHECK(nr.converged);
  CHECK(nr.tail_norm <= 1e-10);
}

TEST_CASE("Neumann evaluation never reads Y beyond t") {
  const DelayOperator op(0.1, scalar(-0.5), scalar(0.8), LowerLimit::Causal, 0.001);
  const ControlHistory y = sampled(1, 0.001, 300, [](double s) { return vec1(std::cos(s)); });
  const NeumannResult full = neumann_U(op, y, 0.2);
  const NeumannResult cut = neumann_U(op, y.truncated(0.2), 0.2);
  CHECK((full.value - cut.value).norm() == 0.0);
  CHECK_THROWS_AS((void)neumann_U(op, y, 0.5), Error);
}

TEST_CASE("transport target system holds along a solved predictor") {
  Matrix lam(2, 2), c(2, 2);
  lam << 1.0, -2.4, 0.0, 0.05;
  c << -1.0, 2.0, 0.3, -0.5;
  const double dt = 1e-3, tau = 0.1;
  ArtsteinSolver solver(tau, lam, c, dt);
  for (int i = 0; i <= 500; ++i) {
    const double t = i * dt;
    (void)solver.step(Eigen::Vector2d(std::exp(-t), std::sin(5.0 * t)));
  }
  for (double t : {0.2, 0.31, 0.5}) {
    CHECK(target_system_check(solver.op(), solver.u_history(), solver.y_history(), t) <= 1e-10);
  }
  // Kernel identities: Q(s, 0) = Gamma(s) C and Q depends only on s - r.
  CHECK((q_kernel(solver.op(), 0.07, 0.0) - gamma_kernel(solver.op(), 0.07) * c).norm() <= 1e-13);
  CHECK((q_kernel(solver.op(), 0.09, 0.03) - q_kernel(solver.op(), 0.06, 0.0)).norm() <= 1e-13);
  const TransportGrid g = transport_grid(solver.op(), solver.u_history(), 0.4);
  CHECK(g.r.size() == 101);
  CHECK((g.z.back() - solver.u_history().value(400)).norm() <= 1e-14);
}

TEST_CASE("ArtsteinSolver rejects a delay that is not a multiple of dt") {
  CHECK_THROWS_AS(ArtsteinSolver(0.15, scalar(1.0), scalar(1.0), 0.1), Error);
}
