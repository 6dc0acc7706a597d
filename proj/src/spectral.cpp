#include "ndstab/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "ndstab/error.hpp"

namespace ndstab {

namespace {

constexpr double kPi = std::numbers::pi;

double residual_slope(double beta, double alpha) {
  const double s = std::sin(beta * kPi);
  return -kPi / (s * s) - alpha / (2.0 * beta * beta);
}

}  // namespace

double beta_residual(double beta, double alpha) {
  return std::cos(beta * kPi) / std::sin(beta * kPi) + alpha / (2.0 * beta);
}

double solve_beta(int k, double alpha) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "solve_beta: k must be nonnegative");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "solve_beta: alpha must be positive");

  // The residual is +alpha/(2 beta) at k + 1/2 and tends to -inf at k + 1.
  double lo = k + 0.5;
  double hi = k + 1.0;
  constexpr int kMaxIter = 200;
  int iter = 0;
  for (; iter < kMaxIter && hi - lo > 1e-6; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (beta_residual(mid, alpha) > 0.0 ? lo : hi) = mid;
  }

  double x = 0.5 * (lo + hi);
  double fx = beta_residual(x, alpha);
  for (; iter < kMaxIter; ++iter) {
    if (fx == 0.0) break;
    (fx > 0.0 ? lo : hi) = x;
    double next = x - fx / residual_slope(x, alpha);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    fx = beta_residual(x, alpha);
    if (std::abs(fx) <= 1e-14 || step <= 4.0 * std::numeric_limits<double>::epsilon() * x) break;
  }

  if (!(std::abs(fx) <= 1e-12) || !(x > k + 0.5 && x < k + 1.0)) {
    std::ostringstream msg;
    msg << "solve_beta(k=" << k << ", alpha=" << alpha << ") did not converge: bracket [" << lo << ", "
        << hi << "], residual " << fx;
    throw SolverFailure(msg.str(), lo, hi, fx);
  }
  return x;
}

Spectrum::Spectrum(int count, double c, double alpha) : c_(c), alpha_(alpha) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "eigenvalues: count must be >= 1");
  const int pairs = (count + 1) / 2;
  betas_.reserve(static_cast<std::size_t>(pairs));
  for (int k = 0; k < pairs; ++k) betas_.push_back(solve_beta(k, alpha));
  lambdas_.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const int k = j / 2;
    if (j % 2 == 0) {
      const double m = 2.0 * k + 1.0;
      lambdas_.push_back(c - m * m);
    } else {
      const double b = betas_[static_cast<std::size_t>(k)];
      lambdas_.push_back(c - 4.0 * b * b);
    }
  }
}

double Spectrum::beta(int k) const {
  if (k < 0 || k >= static_cast<int>(betas_.size()))
    throw Error(ErrorCode::IndexOutOfRange, "Spectrum::beta: k=" + std::to_string(k) + " not computed");
  return betas_[static_cast<std::size_t>(k)];
}

double Spectrum::delta(int k) const { return beta(k) - k - 0.5; }

double Spectrum::lambda(int j) const {
  if (j < 0 || j >= size())
    throw Error(ErrorCode::IndexOutOfRange, "Spectrum::lambda: j=" + std::to_string(j) + " not computed");
  return lambdas_[static_cast<std::size_t>(j)];
}

Spectrum eigenvalues(int count, double c, double alpha) { return Spectrum(count, c, alpha); }

int choose_unstable_dim(double rho, double c, double alpha) {
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "choose_unstable_dim: rho must be positive");
  for (int n = 0;; ++n) {
    const double m = 2.0 * n + 3.0;
    const double even = c - m * m;  // lambda_{2N+2}
    if (!(even < -rho)) continue;
    const double b = solve_beta(n + 1, alpha);
    if (c - 4.0 * b * b < -rho) return 2 * n + 2;
  }
}

double compute_c2(double beta_k, double alpha, const QuadratureRule& rule) {
  const double f = 2.0 * beta_k;
  const double integral = rule.integrate([&](double x) {
    const double s = std::sin(f * x);
    return s * (s + (f / alpha) * std::cos(f * x));
  });
  if (!(std::abs(integral) > 1e-12)) {
    throw Error(ErrorCode::IllConditionedBasis,
                "compute_c2: normalisation integral vanishes for beta=" + std::to_string(beta_k));
  }
  return 1.0 / integral;
}

BasisPair::BasisPair(Spectrum spectrum, const QuadratureRule& rule) : spectrum_(std::move(spectrum)) {
  c2_.reserve(spectrum_.betas().size());
  for (double b : spectrum_.betas()) c2_.push_back(compute_c2(b, spectrum_.alpha(), rule));
}

void BasisPair::check_index(int j) const {
  if (j < 0 || j >= size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "basis index " + std::to_string(j) + " outside built range [0, " + std::to_string(size()) + ")");
  }
}

// (w_{k2} - w_{k1}) / (2 delta) = cos((2beta + m) x / 2) sin(delta x) / delta,
// which avoids the cancellation when delta is small.
double BasisPair::phi(int j, double x) const {
  check_index(j);
  const int k = j / 2;
  const double m = 2.0 * k + 1.0;
  if (j % 2 == 0) return std::sin(m * x);
  const double b2 = 2.0 * spectrum_.beta(k);
  const double d = spectrum_.delta(k);
  return std::cos(0.5 * (b2 + m) * x) * std::sin(d * x) / d;
}

double BasisPair::phi_dd(int j, double x) const {
  check_index(j);
  const int k = j / 2;
  const double m = 2.0 * k + 1.0;
  if (j % 2 == 0) return -m * m * std::sin(m * x);
  const double b2 = 2.0 * spectrum_.beta(k);
  return -b2 * b2 * phi(j, x) - (b2 + m) * std::sin(m * x);
}

double BasisPair::psi(int j, double x) const {
  check_index(j);
  const int k = j / 2;
  const double m = 2.0 * k + 1.0;
  const double a = spectrum_.alpha();
  const double b2 = 2.0 * spectrum_.beta(k);
  const double ck = c2_[static_cast<std::size_t>(k)];
  const double v2 = ck * (std::sin(b2 * x) + (b2 / a) * std::cos(b2 * x));
  if (j % 2 == 1) return 2.0 * spectrum_.delta(k) * v2;
  const double v1 = (2.0 / kPi) * (std::sin(m * x) - (m / a) * std::cos(m * x));
  return v1 + v2;
}

double BasisPair::psi_d(int j, double x) const {
  check_index(j);
  const int k = j / 2;
  const double m = 2.0 * k + 1.0;
  const double a = spectrum_.alpha();
  const double b2 = 2.0 * spectrum_.beta(k);
  const double ck = c2_[static_cast<std::size_t>(k)];
  const double dv2 = ck * (b2 * std::cos(b2 * x) - (b2 * b2 / a) * std::sin(b2 * x));
  if (j % 2 == 1) return 2.0 * spectrum_.delta(k) * dv2;
  const double dv1 = (2.0 / kPi) * (m * std::cos(m * x) + (m * m / a) * std::sin(m * x));
  return dv1 + dv2;
}

TraceValue BasisPair::trace_l(int j) const {
  check_index(j);
  const int k = j / 2;
  const double b = spectrum_.beta(k);
  const double ck = c2_[static_cast<std::size_t>(k)];
  const double value = (j % 2 == 0) ? 2.0 * b * ck + (2.0 / kPi) * (2.0 * k + 1.0)
                                    : 4.0 * spectrum_.delta(k) * b * ck;
  return {value, std::abs(value) < 1e-12};
}

}  // namespace ndstab
