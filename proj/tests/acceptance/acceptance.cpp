// One pass/fail line per acceptance criterion; exit status 1 if any fails.
// Reference values come from tests/support/oracles.hpp, not from the library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ndstab/delay.hpp"
#include "ndstab/design.hpp"
#include "ndstab/error.hpp"
#include "ndstab/pdesim.hpp"
#include "ndstab/spectral.hpp"
#include "../support/oracles.hpp"

using namespace ndstab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, double secs, const std::string& detail) {
  std::printf("AC%-2d %s  %7.2fs  %s\n", id, ok ? "PASS" : "FAIL", secs, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SimConfig worked_example() {
  SimConfig cfg;
  cfg.gammas = {6.0, 7.0};
  cfg.y0 = std::string("sin-mix");
  return cfg;
}

// Kernel table stored flat (row-major d x d per entry) for tight loops.
struct KernelTable {
  int d = 0;
  std::vector<double> k;
  [[nodiscard]] const double* at(long j) const { return k.data() + j * d * d; }
};

KernelTable table_of(const Matrix& lambda, const Matrix& c, long count, double h, double shift) {
  KernelTable t;
  t.d = static_cast<int>(lambda.rows());
  for (long j = 0; j <= count; ++j) {
    const Matrix m = oracle::expm(lambda, j * h + shift) * c;
    for (int r = 0; r < t.d; ++r)
      for (int q = 0; q < t.d; ++q) t.k.push_back(m(r, q));
  }
  return t;
}

// acc += w K u
void axpy(double w, const double* k, const double* u, double* acc, int d) {
  for (int r = 0; r < d; ++r) {
    double s = 0.0;
    for (int q = 0; q < d; ++q) s += k[r * d + q] * u[q];
    acc[r] += w * s;
  }
}

// Composite Simpson weights (3/8 closure for odd n, trapezoid for n = 1).
std::vector<double> simpson(long m, double h) {
  std::vector<double> w(static_cast<std::size_t>(m + 1), 0.0);
  if (m == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const long even = (m % 2 == 0) ? m : m - 3;
  for (long i = 0; i < even; i += 2) {
    w[static_cast<std::size_t>(i)] += h / 3.0;
    w[static_cast<std::size_t>(i + 1)] += 4.0 * h / 3.0;
    w[static_cast<std::size_t>(i + 2)] += h / 3.0;
  }
  if (even != m) {
    const double k = 3.0 * h / 8.0;
    w[static_cast<std::size_t>(even)] += k;
    w[static_cast<std::size_t>(even + 1)] += 3.0 * k;
    w[static_cast<std::size_t>(even + 2)] += 3.0 * k;
    w[static_cast<std::size_t>(even + 3)] += k;
  }
  return w;
}

// |U(t_n) - Y(t_n) - int_{lo}^{t_n} e^{(t_n - tau - s) Lambda} C U(s) ds| with
// lo = max(t_n - tau, tau), oracle kernels. Simpson on the raw samples when the
// window spans at least 64 intervals.
class DelayOracle {
 public:
  DelayOracle(const Matrix& lambda, const Matrix& c, double tau, double h)
      : lambda_(lambda), c_(c), tau_(tau), h_(h), lag_(std::lround(tau / h)), table_(table_of(lambda, c, lag_, h, -tau)) {
    full_ = simpson(lag_, h_);
  }

  [[nodiscard]] double residual(const ControlHistory& u, const ControlHistory& y, long n) const {
    const int d = u.dim();
    const long lo = std::max(n - lag_, lag_);
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    if (n > lo && n - lo < kMinDelaySubintervals) {
      // Short window: exact kernel against the piecewise-linear interpolant of
      // U, 6-point Gauss per sample interval.
      const auto [gx, gw] = oracle::gauss(6, 0.0, h_);
      const double tn = static_cast<double>(n) * h_;
      for (long i = lo; i < n; ++i) {
        const double* a = u.raw(static_cast<std::size_t>(i));
        const double* b = u.raw(static_cast<std::size_t>(i + 1));
        for (std::size_t g = 0; g < gx.size(); ++g) {
          const double th = gx[g] / h_;
          const Matrix k = oracle::expm(lambda_, tn - tau_ - (static_cast<double>(i) * h_ + gx[g])) * c_;
          for (int r = 0; r < d; ++r) {
            double sum = 0.0;
            for (int q = 0; q < d; ++q) sum += k(r, q) * ((1.0 - th) * a[q] + th * b[q]);
            acc[static_cast<std::size_t>(r)] += gw[g] * sum;
          }
        }
      }
    } else if (n > lo) {
      const long m = n - lo;
      const std::vector<double> w = m == lag_ ? full_ : simpson(m, h_);
      for (long i = 0; i <= m; ++i) {
        const long s = lo + i;
        axpy(w[static_cast<std::size_t>(i)], table_.at(n - s), u.raw(static_cast<std::size_t>(s)), acc.data(), d);
      }
    }
    double sq = 0.0;
    for (int r = 0; r < d; ++r) {
      const double e = u.raw(static_cast<std::size_t>(n))[r] - y.raw(static_cast<std::size_t>(n))[r] - acc[static_cast<std::size_t>(r)];
      sq += e * e;
    }
    return std::sqrt(sq);
  }

 private:
  Matrix lambda_, c_;
  double tau_, h_;
  long lag_;
  KernelTable table_;
  std::vector<double> full_;
};

void ac1() {
  const auto t0 = Clock::now();
  const double alpha = 1.0, c = 2.0;
  double root = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double b = solve_beta(k, alpha);
    root = std::max(root, std::abs(std::cos(b * oracle::kPi) / std::sin(b * oracle::kPi) + alpha / (2.0 * b)));
    root = std::max(root, std::abs(b - oracle::beta_bisect(k, alpha)));
  }
  const int d = choose_unstable_dim(5.0, c, alpha);
  const int count = d + 5;
  const BasisPair basis(Spectrum(count + (count % 2), c, alpha));
  double biorth = 0.0;
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) {
      const double ip = oracle::integrate([&](double x) { return basis.phi(i, x) * basis.psi(j, x); }, 0.0, oracle::kPi);
      biorth = std::max(biorth, std::abs(ip - (i == j ? 1.0 : 0.0)));
    }
  }
  double trace = 0.0;
  constexpr double h = 1e-5;
  for (int j = 0; j < count; ++j) {
    const double fd = (basis.psi(j, h) - basis.psi(j, -h)) / (2.0 * h);
    trace = std::max(trace, std::abs(fd - basis.trace_l(j).value));
  }
  const double secs = seconds_since(t0);
  report(1, root <= 1e-12 && biorth <= 1e-8 && trace <= 1e-6 && secs < 5.0, secs,
         fmt("root %.1e, biorth %.1e (indices <= d+4), trace vs FD %.1e", root, biorth, trace));
}

void ac2() {
  const auto t0 = Clock::now();
  const BasisPair basis(Spectrum(2, 2.0, 1.0));
  const DesignSet ds = build_design(basis, 5.0, std::vector<double>{6.0, 7.0});
  const Eigen::JacobiSVD<Matrix> svd(ds.sum_b);
  const double cond = svd.singularValues()(0) / svd.singularValues()(ds.d - 1);
  const bool sym = (ds.A - ds.A.transpose()).norm() <= 1e-12 * ds.A.norm();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(ds.A);
  const bool spd = sym && es.eigenvalues().minCoeff() > 0.0;
  bool chain_ok = determinant_chain_check(ds).agree() && determinant_chain_check(ds).kalman_nonzero;

  const Matrix lam_bad = Eigen::Vector2d(0.0, -3.0).asDiagonal();
  const Vector l_bad = Eigen::Vector2d(1.0, 0.0);
  const std::vector<double> g{6.0, 7.0};
  double ratio = 1.0;
  try {
    (void)build_design(lam_bad, l_bad, g);
  } catch (const RankConditionViolated& e) {
    ratio = e.min_singular_value() / e.max_singular_value();
  }
  // Independent check of the singular values of sum B_k on the fixture.
  Matrix sb = Matrix::Zero(2, 2);
  for (double gk : g) {
    const Matrix inv = (lam_bad + gk * Matrix::Identity(2, 2)).inverse();
    sb += inv * l_bad * l_bad.transpose() * inv.transpose();
  }
  const Eigen::JacobiSVD<Matrix> svd_bad(sb);
  const double oracle_ratio = svd_bad.singularValues()(1) / svd_bad.singularValues()(0);
  const DeterminantChain bad = determinant_chain_check(lam_bad, l_bad, g);
  chain_ok = chain_ok && bad.agree() && !bad.kalman_nonzero;

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd(0.0, 1.0);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix lam = Matrix::Zero(dim, dim);
    Vector L(dim);
    for (int i = 0; i < dim; ++i) {
      lam(i, i) = 1.0 - 2.0 * i + 0.1 * nd(rng);
      L(i) = nd(rng);
    }
    if (trial % 2 == 0) {
      for (int i = 0; i + 1 < dim; ++i) lam(i, i + 1) = nd(rng);
    } else {
      L(trial % dim) = 0.0;
    }
    std::vector<double> gam;
    for (int k = 1; k <= dim; ++k) gam.push_back(5.0 + k);
    const DeterminantChain dc = determinant_chain_check(lam, L, gam);
    const bool oracle_full = oracle::rank(kalman_matrix(lam, L)) == dim;
    if (dc.agree() && dc.kalman_nonzero == oracle_full && kalman_rank(lam, L).full_rank == oracle_full) ++agree;
  }
  const double secs = seconds_since(t0);
  report(2,
         cond < 1e8 && spd && ratio < 1e-12 && oracle_ratio < 1e-12 && chain_ok && agree == 100 && secs < 5.0, secs,
         fmt("cond(sum B) %.3g, A spd %g, fixture sv ratio %.1e, chain agreement %g/100", cond, spd ? 1.0 : 0.0,
             ratio, agree));
}

void ac3(const DesignSet& ds) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(777);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double g1 = ds.gammas.front();
  const Matrix closed = ds.lambda + ds.C;
  int violations = 0;
  double worst = -INFINITY;
  for (int i = 0; i < 10000; ++i) {
    Vector z(ds.d);
    for (int k = 0; k < ds.d; ++k) z(k) = nd(rng);
    z.normalize();
    const Vector az = ds.A * z;
    const double lhs = (closed * z).dot(az);
    const double rhs = -g1 * az.dot(z);
    worst = std::max(worst, lhs - rhs);
    if (lhs > rhs + 1e-10) ++violations;
  }
  const Vector y0 = Eigen::Vector2d(1.0, -0.4);
  const Trajectory tr = run_modal_ode(ds, 0.0, 1e-3, 5.0, y0);
  const double v0 = (ds.A * y0).dot(y0);
  int ode_viol = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Vector Y = tr.Y(i);
    if ((ds.A * Y).dot(Y) > v0 * std::exp(-2.0 * g1 * tr.t[i]) * (1.0 + 1e-6)) ++ode_viol;
  }
  const Vector exact = oracle::expm(closed, 5.0) * y0;
  const double flow_err = (tr.Y(tr.size() - 1) - exact).norm();
  const double secs = seconds_since(t0);
  report(3, violations == 0 && ode_viol == 0 && flow_err <= 1e-10, secs,
         fmt("violations %g/10000 (max margin %.3g), V bound violations %g, flow err %.1e", violations, worst,
             ode_viol, flow_err));
}

void ac4(const DesignSet& ds) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst = 0.0;
  const Matrix id = Matrix::Identity(ds.d, ds.d);
  for (int i = 0; i < 100; ++i) {
    Vector U(ds.d);
    for (int k = 0; k < ds.d; ++k) U(k) = nd(rng);
    const Vector au = ds.A * U;
    for (double g : ds.gammas) {
      const Matrix inv = (ds.lambda + g * id).inverse();
      const double uk = -(inv.transpose() * au).dot(ds.L);
      const Vector lhs = inv * ds.L * uk;
      const Vector rhs = -(inv * ds.L * ds.L.transpose() * inv.transpose()) * au;
      const double scale = std::max({1.0, lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()});
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / scale);
    }
    worst = std::max(worst, mode_identity_check(ds, U));
  }
  report(4, worst <= 1e-12, seconds_since(t0), fmt("max relative residual %.1e over 100 U", worst));
}

void ac5() {
  const auto t0 = Clock::now();
  const BasisPair basis(Spectrum(2, 2.0, 1.0));
  const oracle::Basis ob(1, 2.0, 1.0);
  const Matrix lam = build_lambda(basis, 2);
  Vector L(2);
  constexpr double h = 1e-6;
  for (int j = 0; j < 2; ++j) L(j) = (ob.psi(j, h) - ob.psi(j, -h)) / (2.0 * h);
  const Vector ref = (lam + 50.0 * Matrix::Identity(2, 2)).inverse() * L;
  const LiftingSolution fine = solve_lifting_bvp(basis, lam, 50.0, 2001);
  const double err = (fine.projections - ref).cwiseAbs().maxCoeff();
  std::vector<double> errs;
  for (int m : {99, 199, 399, 799}) errs.push_back((solve_lifting_bvp(basis, lam, 50.0, m).projections - ref).norm());
  double omin = INFINITY, omax = -INFINITY;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double o = std::log2(errs[i - 1] / errs[i]);
    omin = std::min(omin, o);
    omax = std::max(omax, o);
  }
  report(5, err <= 1e-4 && omin > 1.7 && omax < 2.3, seconds_since(t0),
         fmt("m=2001 projection err %.1e, observed orders [%.2f, %.2f]", err, omin, omax));
}

void ac6(const Simulation& sim, const Trajectory& tr) {
  const auto t0 = Clock::now();
  const DesignSet& ds = sim.design();
  const SimConfig& cfg = sim.config();
  const ControlHistory& u = *tr.u_history;
  const ControlHistory& y = *tr.y_history;
  const DelayOperator op(cfg.tau, ds.lambda, ds.C, LowerLimit::Literal, cfg.dt);
  const DelayOracle orc(ds.lambda, ds.C, cfg.tau, cfg.dt);
  double lib = 0.0, ind = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    lib = std::max(lib, artstein_residual(op, u, y, u.time(n)));
    ind = std::max(ind, orc.residual(u, y, static_cast<long>(n)));
  }

  const double tau = 0.2, lam = 0.9, cc = -1.7, t = 1.0;
  const double riemann =
      oracle::riemann([&](double s) { return std::exp((t - tau - s) * lam) * cc; }, t - tau, t, 1'000'000);
  ControlHistory one(1);
  for (int i = 0; i <= 1000; ++i) one.append(i * 1e-3, Vector::Ones(1));
  const DelayOperator op1(tau, Matrix::Constant(1, 1, lam), Matrix::Constant(1, 1, cc), LowerLimit::Literal, 1e-3);
  const double quad = std::abs(apply_T_tau(op1, one, t)(0) - riemann);

  ArtsteinSolver zero(0.0, ds.lambda, ds.C, 1e-3);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 1.0);
  bool exact = true;
  for (int i = 0; i < 1000; ++i) {
    const Vector v = Eigen::Vector2d(nd(rng), nd(rng));
    exact = exact && (zero.step(v).array() == v.array()).all();
  }
  report(6, lib <= 1e-6 && ind <= 1e-6 && quad <= 1e-8 && exact, seconds_since(t0),
         fmt("Artstein residual %.1e (oracle %.1e) at %g samples, T_tau vs Riemann %.1e, tau=0 U==Y", lib, ind,
             static_cast<double>(u.size()), quad));
}

void ac7() {
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.y0 = std::string("sin1");
  cfg.t_final = 2.0;
  const Trajectory tr = run_open_loop(cfg);
  const double rate = estimate_decay_rate(tr, 0.0);
  // Exact solution e^t sin x at the end time, sampled on the same grid.
  double prof_err = 0.0;
  const auto& last = tr.profiles.back();
  for (std::size_t i = 0; i < last.size(); ++i) prof_err = std::max(prof_err, std::abs(last[i] - std::exp(2.0) * std::sin(tr.x[i])));
  const double secs = seconds_since(t0);
  report(7, std::abs(rate - 1.0) <= 0.02 && secs < 20.0, secs,
         fmt("growth rate %.6f (target 1 +- 2%%), max |y - e^t sin x| at T=2: %.1e", rate, prof_err));
}

void ac8(const Trajectory& closed, double closed_secs, const SimConfig& cfg) {
  const auto t0 = Clock::now();
  const double ratio = closed.norm_y.back() / closed.norm_y.front();
  const double rate = estimate_decay_rate(closed, 1.0);
  SimConfig ol = cfg;
  const Trajectory open = run_open_loop(ol);
  const double growth = open.norm_y.back() / open.norm_y.front();
  const double secs = closed_secs + seconds_since(t0);
  report(8, ratio <= 1e-3 && rate < 0.0 && growth >= std::exp(5.0) && closed_secs < 60.0, secs,
         fmt("norm ratio %.2e, rate on [1,10] %.3f, open-loop growth %.3g, closed-loop run %.1fs", ratio, rate,
             growth, closed_secs));
}

void ac9(const Simulation& sim, const Trajectory& tr) {
  const auto t0 = Clock::now();
  const SimConfig& cfg = sim.config();
  const DesignSet& ds = sim.design();
  const DelayOperator op(cfg.tau, ds.lambda, ds.C, LowerLimit::Literal, cfg.dt);
  const ControlHistory& u = *tr.u_history;
  const ControlHistory& y = *tr.y_history;
  const long lag = std::lround(cfg.tau / cfg.dt);
  // Transport form with oracle kernels: W(tau, t) = Z(tau) - int_0^tau Q(tau, r) Z(r) dr - Gamma(tau) Y(t),
  // Z(r) = U(t + r - tau), Q(tau, r) = e^{-r Lambda} C, Gamma(tau) = I.
  const KernelTable q = table_of(ds.lambda, ds.C, lag, -cfg.dt, 0.0);
  const std::vector<double> w = simpson(lag, cfg.dt);
  const int d = u.dim();
  double lib = 0.0, ind = 0.0;
  std::size_t checked = 0;
  std::vector<double> acc(static_cast<std::size_t>(d));
  for (std::size_t n = static_cast<std::size_t>(2 * lag); n < u.size(); ++n) {
    for (int r = 0; r < d; ++r) acc[static_cast<std::size_t>(r)] = u.raw(n)[r] - y.raw(n)[r];
    for (long j = 0; j <= lag; ++j) {
      axpy(-w[static_cast<std::size_t>(j)], q.at(j), u.raw(n - static_cast<std::size_t>(lag - j)), acc.data(), d);
    }
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    ind = std::max(ind, std::sqrt(sq));
    if ((n - 2 * static_cast<std::size_t>(lag)) % 10 == 0) lib = std::max(lib, target_system_check(op, u, y, u.time(n)));
    ++checked;
  }
  report(9, lib <= 1e-5 && ind <= 1e-5, seconds_since(t0),
         fmt("max |W(tau,t)| on [2tau,T]: %.1e (oracle, %g times), %.1e (library)", ind, static_cast<double>(checked),
             lib));
}

void ac10() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail = "ranks";
  for (double c : {0.0, 1.0, 3.0}) {
    const Matrix lam = Eigen::Vector2d(-2.0 + c, -5.0 + c).asDiagonal();
    const Vector L = Eigen::Vector2d(1.0, 0.0);
    const int lib = kalman_rank(lam, L).rank;
    Eigen::Matrix2d k;
    k << L, lam * L;
    const int orc = oracle::rank(k);
    ok = ok && lib == 1 && orc == 1;
    detail += fmt(" c=%g:%g", c, lib);
  }
  report(10, ok, seconds_since(t0), detail);
}

}  // namespace

int main() {
  try {
    ac1();
    ac2();
    const SimConfig cfg = worked_example();
    const Simulation sim(cfg);
    ac3(sim.design());
    ac4(sim.design());
    ac5();
    const auto t0 = Clock::now();
    const Trajectory closed = sim.run_closed_loop();
    const double closed_secs = seconds_since(t0);
    ac6(sim, closed);
    ac7();
    ac8(closed, closed_secs, cfg);
    ac9(sim, closed);
    ac10();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
