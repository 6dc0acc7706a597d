#include "ndstab/pdesim.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "ndstab/error.hpp"
#include "nonlocal_fd.hpp"

namespace ndstab {

namespace {

constexpr double kBlowUpRatio = 1e6;

void put_number(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.write(buf.data(), res.ptr - buf.data());
}

long step_count(double t_final, double dt) {
  const double q = t_final / dt;
  const double r = std::round(q);
  return static_cast<long>(std::abs(q - r) <= 1e-9 * q ? r : std::ceil(q));
}

long profile_stride(double every, double dt) {
  if (!(every > 0.0)) return 0;
  return std::max(1L, std::lround(every / dt));
}

// Uniform double in [0, 1) from the top 53 bits, independent of the
// standard library's distribution implementation.
double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

class Recorder {
 public:
  Recorder(Trajectory& traj, long steps, long stride, double norm0)
      : traj_(traj), steps_(steps), stride_(stride), limit_(kBlowUpRatio * norm0) {
    traj_.t.reserve(static_cast<std::size_t>(steps + 1));
    traj_.norm_y.reserve(static_cast<std::size_t>(steps + 1));
    traj_.u.reserve(static_cast<std::size_t>(steps + 1));
    traj_.modes.reserve(static_cast<std::size_t>((steps + 1) * traj_.d));
  }

  void record(long n, double t, double norm, double u, const Vector& y_modes, const std::vector<double>* profile) {
    traj_.t.push_back(t);
    traj_.norm_y.push_back(norm);
    traj_.u.push_back(u);
    traj_.modes.insert(traj_.modes.end(), y_modes.data(), y_modes.data() + y_modes.size());
    if (profile && (n == 0 || n == steps_ || (stride_ > 0 && n % stride_ == 0))) {
      traj_.profile_t.push_back(t);
      traj_.profiles.push_back(*profile);
    }
    if (limit_ > 0.0 && !(norm <= limit_)) {
      std::ostringstream msg;
      msg << "blow-up guard: norm_y=" << norm << " at t=" << t << " exceeds " << kBlowUpRatio
          << " x its initial value";
      throw BlowUp(msg.str(), t, norm * kBlowUpRatio / limit_);
    }
  }

 private:
  Trajectory& traj_;
  long steps_;
  long stride_;
  double limit_;
};

}  // namespace

// ---------------------------------------------------------------- grid

Grid::Grid(int m_in) : m(m_in), h(std::numbers::pi / (m_in + 1)) {
  if (m < 50) throw Error(ErrorCode::Config, "Grid: m must be >= 50");
  x.resize(static_cast<std::size_t>(m + 2));
  for (int i = 0; i <= m; ++i) x[static_cast<std::size_t>(i)] = i * h;
  x.back() = std::numbers::pi;
  weights = simpson_weights(static_cast<std::size_t>(m + 1), h);
}

double Grid::norm(std::span<const double> y) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += weights[i] * y[i] * y[i];
  return std::sqrt(acc);
}

std::vector<double> initial_profile(const SimConfig& cfg, const Grid& grid) {
  std::vector<double> y(grid.nodes());
  if (const auto* name = std::get_if<std::string>(&cfg.y0)) {
    if (*name == "sin1") {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(grid.x[i]);
    } else if (*name == "sin-mix") {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(grid.x[i]) + 0.5 * std::sin(2.0 * grid.x[i]);
    } else if (*name == "random-smooth") {
      std::mt19937_64 gen(cfg.seed);
      constexpr int kModes = 8;
      std::array<double, kModes> a{};
      for (double& ak : a) ak = 2.0 * unit_uniform(gen) - 1.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        double v = 0.0;
        for (int k = 1; k <= kModes; ++k) v += a[static_cast<std::size_t>(k - 1)] * std::sin(k * grid.x[i]) / (k * k);
        y[i] = v;
      }
    } else {
      throw Error(ErrorCode::Config, "unknown y0 preset '" + *name + "'");
    }
    return y;
  }
  const auto& s = std::get<std::vector<double>>(cfg.y0);
  const double hs = std::numbers::pi / static_cast<double>(s.size() - 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = grid.x[i] / hs;
    const auto j = std::min(static_cast<std::size_t>(q), s.size() - 2);
    const double theta = q - static_cast<double>(j);
    y[i] = (1.0 - theta) * s[j] + theta * s[j + 1];
  }
  return y;
}

// ---------------------------------------------------------------- solver

HeatSolver::HeatSolver(const Grid& grid, double c, double alpha, double dt)
    : m_(grid.m), h_(grid.h), c_(c), dt_(dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Config, "HeatSolver: dt must be positive");
  lu_.compute(detail::assemble_nonlocal_system(m_, h_, alpha, 0.5 * dt, 1.0 - 0.5 * dt * c));
  if (lu_.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverFailure, "HeatSolver: boundary closure makes the step matrix singular");
  }
  unit_.assign(grid.nodes(), 0.0);
  step(unit_, 1.0);
}

void HeatSolver::step(std::vector<double>& y, double boundary) const {
  const double r = 0.5 * dt_ / (h_ * h_);
  const double react = 1.0 + 0.5 * dt_ * c_;
  Vector rhs(m_ + 1);
  for (int i = 1; i <= m_; ++i) {
    const auto k = static_cast<std::size_t>(i);
    rhs[i - 1] = react * y[k] + r * (y[k - 1] - 2.0 * y[k] + y[k + 1]);
  }
  rhs[m_] = 0.0;
  detail::add_dirichlet(rhs, m_, h_, 0.5 * dt_, boundary);
  const Vector next = lu_.solve(rhs);
  y[0] = boundary;
  for (int i = 0; i <= m_; ++i) y[static_cast<std::size_t>(i + 1)] = next[i];
}

void step_open_loop(const HeatSolver& solver, std::vector<double>& y, double u_boundary) {
  solver.step(y, u_boundary);
}

ModeProjector::ModeProjector(const BasisPair& basis, const Grid& grid, int d) : w_(d, grid.nodes()) {
  for (int j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      w_(j, static_cast<Eigen::Index>(i)) = grid.weights[i] * basis.psi(j, grid.x[i]);
    }
  }
}

Vector ModeProjector::project(std::span<const double> y) const {
  return w_ * Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
}

Vector project_modes(const BasisPair& basis, const Grid& grid, std::span<const double> y, int d) {
  return ModeProjector(basis, grid, d).project(y);
}

// ---------------------------------------------------------------- trajectory

Vector Trajectory::Y(std::size_t i) const {
  return Eigen::Map<const Vector>(modes.data() + i * static_cast<std::size_t>(d), d);
}

void Trajectory::write_csv(std::ostream& out) const {
  out << "t,norm_y,u";
  for (int j = 0; j < d; ++j) out << ",Y" << j;
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    put_number(out, t[i]);
    out << ',';
    put_number(out, norm_y[i]);
    out << ',';
    put_number(out, u[i]);
    for (int j = 0; j < d; ++j) {
      out << ',';
      put_number(out, modes[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)]);
    }
    out << '\n';
  }
}

void Trajectory::write_profiles_csv(std::ostream& out) const {
  out << "t,x,y\n";
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    for (std::size_t i = 0; i < profiles[p].size(); ++i) {
      put_number(out, profile_t[p]);
      out << ',';
      put_number(out, x[i]);
      out << ',';
      put_number(out, profiles[p][i]);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------- runs

Simulation::Simulation(SimConfig cfg, bool with_design)
    : cfg_((cfg.validate(), std::move(cfg))),
      d_(choose_unstable_dim(cfg_.rho, cfg_.c, cfg_.alpha)),
      grid_(cfg_.grid_m),
      basis_(Spectrum(d_, cfg_.c, cfg_.alpha)) {
  if (with_design) design_ = build_design(basis_, cfg_.rho, cfg_.gammas);
}

const DesignSet& Simulation::design() const {
  if (!design_) throw Error(ErrorCode::InvalidArgument, "Simulation: design was not built");
  return *design_;
}

Trajectory Simulation::run_closed_loop(const RunOptions& opts) const {
  const double dt = cfg_.dt;
  const double tau = cfg_.tau;
  const long steps = step_count(cfg_.t_final, dt);
  const HeatSolver heat(grid_, cfg_.c, cfg_.alpha, dt);
  const ModeProjector proj(basis_, grid_, d_);

  Trajectory traj;
  traj.d = d_;
  std::vector<double> y = initial_profile(cfg_, grid_);
  if (opts.control && tau > 0.0) y[0] = 0.0;
  traj.x = grid_.x;
  Recorder rec(traj, steps, profile_stride(opts.profile_every, dt), grid_.norm(y));

  if (!opts.control) {
    for (long n = 0;; ++n) {
      rec.record(n, n * dt, grid_.norm(y), y[0], proj.project(y), &y);
      if (n == steps) break;
      heat.step(y, 0.0);
    }
    return traj;
  }

  const DesignSet& ds = design();
  ArtsteinSolver predictor(tau, ds.lambda, ds.C, dt, opts.lower);
  predictor.reserve(static_cast<std::size_t>(steps + 1));

  if (tau == 0.0) {
    // y(t, 0) = u(U(t)) with U(t) = Y(t): the new boundary value depends on
    // the new state, resolved by superposition with the unit response.
    const Vector unit_modes = proj.project(heat.unit_response());
    std::vector<double> tmp;
    for (long n = 0;; ++n) {
      const Vector ym = proj.project(y);
      const Vector um = predictor.step(ym);
      rec.record(n, n * dt, grid_.norm(y), y[0], ym, &y);
      if (n == steps) break;
      (void)um;
      heat.step(y, 0.0);
      const double free_u = feedback_u(ds, proj.project(y));
      const double b = free_u / (1.0 - feedback_u(ds, unit_modes));
      const auto& r = heat.unit_response();
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += b * r[i];
    }
  } else {
    const long lag = std::lround(tau / dt);
    std::vector<double> applied;
    applied.reserve(static_cast<std::size_t>(steps + 1));
    for (long n = 0;; ++n) {
      const Vector ym = proj.project(y);
      rec.record(n, n * dt, grid_.norm(y), y[0], ym, &y);
      const Vector um = predictor.step(ym);
      if (n == steps) break;
      applied.push_back(feedback_u(ds, um));
      const long src = n + 1 - lag;
      heat.step(y, src >= 0 ? applied[static_cast<std::size_t>(src)] : 0.0);
    }
  }
  traj.u_history = predictor.u_history();
  traj.y_history = predictor.y_history();
  return traj;
}

Trajectory Simulation::run_undelayed_proportional(const RunOptions& opts) const {
  const double dt = cfg_.dt;
  const long steps = step_count(cfg_.t_final, dt);
  const HeatSolver heat(grid_, cfg_.c, cfg_.alpha, dt);
  const ModeProjector proj(basis_, grid_, d_);
  const Vector& gain = design().gain;

  Trajectory traj;
  traj.d = d_;
  std::vector<double> y = initial_profile(cfg_, grid_);
  traj.x = grid_.x;
  Recorder rec(traj, steps, profile_stride(opts.profile_every, dt), grid_.norm(y));
  const auto& r = heat.unit_response();
  const double self = gain.dot(proj.project(r));
  for (long n = 0;; ++n) {
    rec.record(n, n * dt, grid_.norm(y), y[0], proj.project(y), &y);
    if (n == steps) break;
    heat.step(y, 0.0);
    const double b = gain.dot(proj.project(y)) / (1.0 - self);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b * r[i];
  }
  return traj;
}

Trajectory Simulation::run_modal_ode(LowerLimit lower) const {
  const std::vector<double> y = initial_profile(cfg_, grid_);
  const ModeProjector proj(basis_, grid_, d_);
  return ndstab::run_modal_ode(design(), cfg_.tau, cfg_.dt, cfg_.t_final, proj.project(y), lower);
}

Trajectory run_modal_ode(const DesignSet& ds, double tau, double dt, double t_final, const Vector& y0,
                         LowerLimit lower) {
  const int d = ds.d;
  const long steps = step_count(t_final, dt);
  Trajectory traj;
  traj.d = d;
  Recorder rec(traj, steps, 0, y0.norm());

  Vector y = y0;
  if (tau == 0.0) {
    const Matrix e = mat_exp(ds.lambda + ds.C, dt);
    for (long n = 0;; ++n) {
      rec.record(n, n * dt, y.norm(), feedback_u(ds, y), y, nullptr);
      if (n == steps) break;
      y = e * y;
    }
    return traj;
  }

  // exp([[Lambda h, I, 0], [0, 0, I], [0, 0, 0]]) = [[e, phi1, phi2], ...].
  Matrix aug = Matrix::Zero(3 * d, 3 * d);
  aug.block(0, 0, d, d) = ds.lambda * dt;
  aug.block(0, d, d, d).setIdentity();
  aug.block(d, 2 * d, d, d).setIdentity();
  const Matrix ex = mat_exp(aug);
  const Matrix e = ex.block(0, 0, d, d);
  const Matrix f1 = dt * ex.block(0, d, d, d) * ds.C;
  const Matrix f2 = dt * ex.block(0, 2 * d, d, d) * ds.C;

  ArtsteinSolver predictor(tau, ds.lambda, ds.C, dt, lower);
  predictor.reserve(static_cast<std::size_t>(steps + 1));
  const long lag = std::lround(tau / dt);
  std::vector<Vector> u;
  u.reserve(static_cast<std::size_t>(steps + 1));
  auto delayed = [&](long n) -> Vector {
    const long src = n - lag;
    return src >= 0 ? u[static_cast<std::size_t>(src)] : Vector::Zero(d);
  };
  for (long n = 0;; ++n) {
    const Vector ud = delayed(n);
    rec.record(n, n * dt, y.norm(), feedback_u(ds, ud), y, nullptr);
    u.push_back(predictor.step(y));
    if (n == steps) break;
    const Vector ud_next = delayed(n + 1);
    y = e * y + f1 * ud + f2 * (ud_next - ud);
  }
  traj.u_history = predictor.u_history();
  traj.y_history = predictor.y_history();
  return traj;
}

Trajectory run_closed_loop(const SimConfig& cfg, const RunOptions& opts) {
  return Simulation(cfg, opts.control).run_closed_loop(opts);
}

Trajectory run_open_loop(const SimConfig& cfg) {
  RunOptions opts;
  opts.control = false;
  return run_closed_loop(cfg, opts);
}

Trajectory run_undelayed_proportional(const SimConfig& cfg) { return Simulation(cfg).run_undelayed_proportional(); }

Trajectory run_modal_ode(const SimConfig& cfg) { return Simulation(cfg).run_modal_ode(); }

double estimate_decay_rate(std::span<const double> t, std::span<const double> norms, double t_start) {
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start) continue;
    if (!(norms[i] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "estimate_decay_rate: non-positive norm in the fit window");
    }
    const double l = std::log(norms[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++n;
  }
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "estimate_decay_rate: fewer than two samples in the window");
  const double nn = static_cast<double>(n);
  const double mt = st / nn;
  return (stl - mt * sl) / (stt - mt * st);
}

double estimate_decay_rate(const Trajectory& traj, double t_start) {
  return estimate_decay_rate(traj.t, traj.norm_y, t_start);
}

}  // namespace ndstab
