#include "ndstab/delay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "ndstab/error.hpp"
#include "ndstab/quadrature.hpp"

namespace ndstab {

namespace {

constexpr double kAlignTol = 1e-9;

// Index j with x = j h, if x lies on the grid.
std::optional<long> grid_index(double x, double h) {
  const double q = x / h;
  const double j = std::round(q);
  if (std::abs(q - j) > kAlignTol * std::max(1.0, std::abs(q))) return std::nullopt;
  return static_cast<long>(j);
}

// Nodes of the equal-subinterval fallback rule on [lower, t].
double window_node(double lower, double t, int n, int q) {
  return q == n ? t : lower + q * ((t - lower) / n);
}

// acc += w * k * v for a column-major d x d kernel.
void add_weighted(double* acc, double w, const Matrix& k, const double* v) {
  const auto d = k.rows();
  const double* kd = k.data();
  for (Eigen::Index c = 0; c < d; ++c) {
    const double wv = w * v[c];
    for (Eigen::Index r = 0; r < d; ++r) acc[r] += kd[c * d + r] * wv;
  }
}

// Subinterval count for the fallback rule. On a window spanning m whole
// sample intervals of a uniform grid, each interval gets the same even number
// of subintervals so Simpson never straddles a kink of the interpolant.
int fallback_intervals(const ControlHistory& f, double width, std::optional<double> step) {
  if (step) {
    if (const auto m = grid_index(width, *step); m && *m >= 1) {
      const long per = 2 * ((kMinDelaySubintervals / 2 + *m - 1) / *m);
      return static_cast<int>(*m * per);
    }
  }
  int n = kMinDelaySubintervals;
  if (f.size() > 1) {
    const double spacing = (f.last_time() - f.time(0)) / static_cast<double>(f.size() - 1);
    if (spacing > 0.0) n = std::max(n, static_cast<int>(std::ceil(width / spacing - kAlignTol)));
  }
  return n;
}

}  // namespace

// ---------------------------------------------------------------- history

ControlHistory::ControlHistory(int dim) : dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "ControlHistory: dimension must be >= 1");
}

void ControlHistory::reserve(std::size_t n) {
  times_.reserve(n);
  data_.reserve(n * static_cast<std::size_t>(dim_));
}

void ControlHistory::append(double t, const Vector& value) {
  if (value.size() != dim_) throw Error(ErrorCode::InvalidArgument, "ControlHistory::append: dimension mismatch");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ControlHistory::append: negative time");
  if (!times_.empty() && !(t > times_.back())) {
    throw Error(ErrorCode::InvalidArgument, "ControlHistory::append: times must be strictly increasing");
  }
  if (uniform_ && !times_.empty()) {
    if (times_.size() == 1) {
      uniform_ = times_[0] == 0.0;
    } else {
      const double h = times_[1];
      const auto j = grid_index(t, h);
      uniform_ = j && *j == static_cast<long>(times_.size());
    }
  }
  times_.push_back(t);
  data_.insert(data_.end(), value.data(), value.data() + dim_);
}

double ControlHistory::last_time() const {
  if (times_.empty()) throw Error(ErrorCode::Causality, "ControlHistory: no samples recorded");
  return times_.back();
}

Vector ControlHistory::value(std::size_t i) const {
  return Eigen::Map<const Vector>(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
}

std::optional<double> ControlHistory::uniform_step() const noexcept {
  if (!uniform_ || times_.size() < 2) return std::nullopt;
  return times_[1];
}

Vector ControlHistory::at(double t) const {
  if (t < 0.0) return Vector::Zero(dim_);
  const double last = last_time();
  if (t > last) {
    if (t - last > 1e-12 * std::max(1.0, last)) {
      std::ostringstream msg;
      msg << "ControlHistory: read at t=" << t << " beyond last sample " << last;
      throw Error(ErrorCode::Causality, msg.str());
    }
    t = last;
  }
  if (t < times_.front()) {
    std::ostringstream msg;
    msg << "ControlHistory: no sample covers t=" << t;
    throw Error(ErrorCode::Causality, msg.str());
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  if (times_[lo] == t || hi == times_.size()) return value(lo);
  const double theta = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return (1.0 - theta) * value(lo) + theta * value(hi);
}

ControlHistory ControlHistory::truncated(double t) const {
  ControlHistory out(dim_);
  for (std::size_t i = 0; i < times_.size() && times_[i] <= t; ++i) out.append(times_[i], value(i));
  return out;
}

// ---------------------------------------------------------------- operator

DelayOperator::DelayOperator(double tau, Matrix lambda, Matrix c, LowerLimit mode, double grid_step)
    : tau_(tau), lambda_(std::move(lambda)), c_(std::move(c)), mode_(mode) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "DelayOperator: tau must be >= 0");
  if (lambda_.rows() != lambda_.cols() || c_.rows() != lambda_.rows() || c_.cols() != lambda_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "DelayOperator: Lambda and C must be square of equal size");
  }
  if (grid_step > 0.0 && tau > 0.0) {
    const auto n = grid_index(tau, grid_step);
    if (n && *n >= 1) {
      step_ = grid_step;
      table_.reserve(static_cast<std::size_t>(*n + 1));
      for (long j = 0; j <= *n; ++j) table_.push_back(mat_exp(lambda_, static_cast<double>(j) * grid_step - tau) * c_);
    }
  }
}

double DelayOperator::lower_limit(double t) const noexcept {
  return mode_ == LowerLimit::Literal ? std::max(t - tau_, tau_) : std::max(t - tau_, 0.0);
}

const Matrix* DelayOperator::tabulated(double r) const {
  if (table_.empty()) return nullptr;
  const auto j = grid_index(r, step_);
  if (j && *j >= 0 && *j < static_cast<long>(table_.size())) return &table_[static_cast<std::size_t>(*j)];
  return nullptr;
}

Matrix DelayOperator::kernel(double r) const {
  if (const Matrix* k = tabulated(r)) return *k;
  return mat_exp(lambda_, r - tau_) * c_;
}

Vector apply_T_tau(const DelayOperator& op, const ControlHistory& f, double t) {
  if (f.dim() != op.dim()) throw Error(ErrorCode::InvalidArgument, "apply_T_tau: dimension mismatch");
  const double lower = op.lower_limit(t);
  Vector acc = Vector::Zero(op.dim());
  if (!(t > lower)) return acc;

  if (const auto h = f.uniform_step()) {
    const auto ia = grid_index(lower, *h);
    const auto ib = grid_index(t, *h);
    if (ia && ib && *ib - *ia >= kMinDelaySubintervals && *ib < static_cast<long>(f.size())) {
      const auto m = static_cast<std::size_t>(*ib - *ia);
      const std::vector<double> w = simpson_weights(m, *h);
      for (std::size_t i = 0; i <= m; ++i) {
        const auto idx = static_cast<std::size_t>(*ia) + i;
        const double r = t - f.time(idx);
        if (const Matrix* k = op.tabulated(r)) {
          add_weighted(acc.data(), w[i], *k, f.raw(idx));
        } else {
          acc += w[i] * (op.kernel(r) * f.value(idx));
        }
      }
      return acc;
    }
  }

  const int n = fallback_intervals(f, t - lower, f.uniform_step());
  const std::vector<double> w = simpson_weights(static_cast<std::size_t>(n), (t - lower) / n);
  for (int q = 0; q <= n; ++q) {
    const double s = window_node(lower, t, n, q);
    acc += w[static_cast<std::size_t>(q)] * (op.kernel(t - s) * f.at(s));
  }
  return acc;
}

// ---------------------------------------------------------------- Neumann series

NeumannResult neumann_U(const DelayOperator& op, const ControlHistory& y, double t, double tol, int jmax) {
  ControlHistory term = y.truncated(t);
  if (term.empty() || term.last_time() < t) term.append(t, y.at(t));

  NeumannResult r;
  r.value = term.at(t);
  r.term_norms.push_back(r.value.norm());
  r.tail_norm = r.term_norms.back();
  for (int j = 1; j <= jmax; ++j) {
    ControlHistory next(term.dim());
    next.reserve(term.size());
    for (std::size_t i = 0; i < term.size(); ++i) next.append(term.time(i), apply_T_tau(op, term, term.time(i)));
    const Vector tj = next.at(t);
    r.value += tj;
    r.tail_norm = tj.norm();
    r.term_norms.push_back(r.tail_norm);
    if (r.tail_norm <= tol) {
      r.converged = true;
      break;
    }
    term = std::move(next);
  }
  if (!r.converged) {
    const auto& tn = r.term_norms;
    r.divergence_warning = tn.size() >= 2 && tn.back() >= tn[tn.size() - 2];
  }
  return r;
}

// ---------------------------------------------------------------- direct solve

ArtsteinSolver::ArtsteinSolver(double tau, const Matrix& lambda, const Matrix& c, double dt, LowerLimit mode)
    : op_(tau, lambda, c, mode, dt), dt_(dt), u_(static_cast<int>(lambda.rows())), y_(static_cast<int>(lambda.rows())) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "ArtsteinSolver: dt must be positive");
  if (tau > 0.0 && op_.grid_step() == 0.0) {
    std::ostringstream msg;
    msg << "ArtsteinSolver: tau=" << tau << " is not a multiple of dt=" << dt;
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
}

void ArtsteinSolver::reserve(std::size_t n) {
  u_.reserve(n);
  y_.reserve(n);
}

Vector ArtsteinSolver::step(const Vector& y) {
  const int d = op_.dim();
  const std::size_t n = u_.size();
  const double t = static_cast<double>(n) * dt_;
  y_.append(t, y);

  const double lower = op_.lower_limit(t);
  if (!(t > lower) || n == 0) {
    u_.append(t, y);
    return y;
  }

  Matrix lhs = Matrix::Identity(d, d);
  Vector rhs = y;
  const auto ia = grid_index(lower, dt_);
  const long m = ia ? static_cast<long>(n) - *ia : 0;
  if (ia && m >= kMinDelaySubintervals) {
    const std::vector<double> w = simpson_weights(static_cast<std::size_t>(m), dt_);
    for (long i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(*ia + i);
      const Matrix* k = op_.tabulated(static_cast<double>(m - i) * dt_);
      add_weighted(rhs.data(), w[static_cast<std::size_t>(i)], *k, u_.raw(idx));
    }
    lhs -= w.back() * op_.kernel(0.0);
  } else {
    const int nq = fallback_intervals(u_, t - lower, dt_);
    const std::vector<double> w = simpson_weights(static_cast<std::size_t>(nq), (t - lower) / nq);
    const double t_prev = u_.last_time();
    const Vector u_prev = u_.value(n - 1);
    for (int q = 0; q <= nq; ++q) {
      const double s = window_node(lower, t, nq, q);
      const Matrix k = w[static_cast<std::size_t>(q)] * op_.kernel(t - s);
      if (s <= t_prev) {
        rhs += k * u_.at(s);
      } else {
        const double theta = (s - t_prev) / (t - t_prev);
        rhs += (1.0 - theta) * (k * u_prev);
        lhs -= theta * k;
      }
    }
  }
  const Vector u = lhs.partialPivLu().solve(rhs);
  u_.append(t, u);
  return u;
}

double artstein_residual(const DelayOperator& op, const ControlHistory& u, const ControlHistory& y, double t) {
  return (u.at(t) - y.at(t) - apply_T_tau(op, u, t)).norm();
}

// ---------------------------------------------------------------- target system

Matrix gamma_kernel(const DelayOperator& op, double s) { return mat_exp(op.lambda(), s - op.tau()); }

Matrix q_kernel(const DelayOperator& op, double s, double r) { return op.kernel(s - r); }

TransportGrid transport_grid(const DelayOperator& op, const ControlHistory& u, double t, int n) {
  const double tau = op.tau();
  TransportGrid g;
  g.t = t;
  if (tau == 0.0) {
    g.r = {0.0};
    g.z = {u.at(t)};
    return g;
  }
  if (n <= 0) {
    n = kMinDelaySubintervals;
    if (op.grid_step() > 0.0) n = std::max(n, static_cast<int>(std::lround(tau / op.grid_step())));
  }
  g.r.resize(static_cast<std::size_t>(n + 1));
  g.z.reserve(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    const double r = i == n ? tau : i * (tau / n);
    g.r[static_cast<std::size_t>(i)] = r;
    g.z.push_back(u.at(t + r - tau));
  }
  return g;
}

double target_system_check(const DelayOperator& op, const TransportGrid& z, const ControlHistory& y) {
  const double tau = op.tau();
  Vector w = z.z.back() - gamma_kernel(op, tau) * y.at(z.t);
  const std::size_t n = z.r.size() - 1;
  if (n > 0) {
    const std::vector<double> weights = simpson_weights(n, tau / static_cast<double>(n));
    for (std::size_t i = 0; i <= n; ++i) {
      // Q(tau, r) = K(tau - r), tabulated on the operator's grid.
      const Matrix* k = op.tabulated(tau - z.r[i]);
      w -= weights[i] * (k ? *k * z.z[i] : q_kernel(op, tau, z.r[i]) * z.z[i]);
    }
  }
  return w.norm();
}

double target_system_check(const DelayOperator& op, const ControlHistory& u, const ControlHistory& y, double t) {
  return target_system_check(op, transport_grid(op, u, t), y);
}

}  // namespace ndstab
