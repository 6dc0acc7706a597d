#pragma once

// Delay compensation for dY/dt = Lambda Y + C U(t - tau).
//
// The predictor state solves the implicit (Artstein) equation
//   U(t) = Y(t) + (T_tau U)(t),
//   (T_tau F)(t) = int_{lower(t)}^{t} e^{(t - tau - s) Lambda} C F(s) ds,
// whose formal solution is the Neumann series sum_j T_tau^j Y.

#include <optional>
#include <vector>

#include "ndstab/design.hpp"

namespace ndstab {

/// e^{s M} by scaling and squaring with a degree-13 Pade approximant.
[[nodiscard]] Matrix mat_exp(const Matrix& m, double s = 1.0);

/// e^{s T} for upper-triangular T with distinct diagonal entries (Parlett
/// recurrence). Used to cross-check mat_exp. Throws InvalidArgument when the
/// diagonal entries are not well separated.
[[nodiscard]] Matrix mat_exp_triangular(const Matrix& t, double s = 1.0);

/// Time-ordered samples of a vector signal, zero for t < 0 and linearly
/// interpolated between samples. Reading past the last sample throws a
/// Causality error.
class ControlHistory {
 public:
  explicit ControlHistory(int dim);

  /// Times must be nonnegative and strictly increasing.
  void append(double t, const Vector& value);
  void reserve(std::size_t n);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
  [[nodiscard]] double time(std::size_t i) const { return times_[i]; }
  [[nodiscard]] double last_time() const;
  [[nodiscard]] Vector value(std::size_t i) const;
  /// Pointer to the dim() entries of sample i.
  [[nodiscard]] const double* raw(std::size_t i) const noexcept {
    return data_.data() + i * static_cast<std::size_t>(dim_);
  }
  [[nodiscard]] Vector at(double t) const;

  /// Step h when the samples sit at t_i = i h (checked to 1e-9 relative).
  [[nodiscard]] std::optional<double> uniform_step() const noexcept;

  /// Copy of the samples with time <= t.
  [[nodiscard]] ControlHistory truncated(double t) const;

 private:
  int dim_;
  std::vector<double> times_;
  std::vector<double> data_;
  bool uniform_ = true;
};

enum class LowerLimit {
  Literal,  ///< max(t - tau, tau)
  Causal,   ///< max(t - tau, 0)
};

/// The operator T_tau for fixed (tau, Lambda, C). When constructed with a
/// grid step dividing tau, the kernels K(r) = e^{(r - tau) Lambda} C at
/// r = j h are tabulated once; the object is immutable afterwards.
class DelayOperator {
 public:
  DelayOperator(double tau, Matrix lambda, Matrix c, LowerLimit mode = LowerLimit::Literal, double grid_step = 0.0);

  [[nodiscard]] double tau() const noexcept { return tau_; }
  [[nodiscard]] const Matrix& lambda() const noexcept { return lambda_; }
  [[nodiscard]] const Matrix& c() const noexcept { return c_; }
  [[nodiscard]] LowerLimit mode() const noexcept { return mode_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(lambda_.rows()); }
  [[nodiscard]] double grid_step() const noexcept { return step_; }

  [[nodiscard]] double lower_limit(double t) const noexcept;

  /// K(r) = e^{(r - tau) Lambda} C for r = t - s.
  [[nodiscard]] Matrix kernel(double r) const;
  /// Tabulated K(r) when r is a grid multiple within the table, else null.
  [[nodiscard]] const Matrix* tabulated(double r) const;

 private:
  double tau_;
  Matrix lambda_;
  Matrix c_;
  LowerLimit mode_;
  double step_ = 0.0;
  std::vector<Matrix> table_;
};

/// Minimum number of Simpson subintervals on the T_tau window.
inline constexpr int kMinDelaySubintervals = 64;

/// (T_tau F)(t) by composite Simpson. Uses the samples of F directly when they
/// are uniform, aligned with the window and at least 64 intervals long;
/// otherwise 64 (or more) equal subintervals with linear interpolation.
/// Returns zero when the window is empty.
[[nodiscard]] Vector apply_T_tau(const DelayOperator& op, const ControlHistory& f, double t);

struct NeumannResult {
  Vector value;
  double tail_norm = 0.0;           ///< norm of the last term added
  std::vector<double> term_norms;   ///< |(T^j Y)(t)|, j = 0, 1, ...
  bool converged = false;
  bool divergence_warning = false;  ///< tail still not decreasing at jmax
};

/// Partial sums of sum_j (T^j Y)(t), evaluated on the sample grid of Y up to
/// t. Never reads Y beyond t.
[[nodiscard]] NeumannResult neumann_U(const DelayOperator& op, const ControlHistory& y, double t, double tol = 1e-10,
                                      int jmax = 50);

/// Solves the Artstein equation step by step on a uniform grid t_n = n dt,
/// using the same quadrature as apply_T_tau so the discrete fixed point is
/// exact up to round-off. tau must be zero or a multiple of dt.
class ArtsteinSolver {
 public:
  ArtsteinSolver(double tau, const Matrix& lambda, const Matrix& c, double dt,
                 LowerLimit mode = LowerLimit::Literal);

  /// Takes Y(t_n) for the next grid time and returns U(t_n).
  Vector step(const Vector& y);

  [[nodiscard]] const DelayOperator& op() const noexcept { return op_; }
  [[nodiscard]] const ControlHistory& u_history() const noexcept { return u_; }
  [[nodiscard]] const ControlHistory& y_history() const noexcept { return y_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  void reserve(std::size_t n);

 private:
  DelayOperator op_;
  double dt_;
  ControlHistory u_;
  ControlHistory y_;
};

/// |U(t) - Y(t) - (T_tau U)(t)|.
[[nodiscard]] double artstein_residual(const DelayOperator& op, const ControlHistory& u, const ControlHistory& y,
                                       double t);

/// Target-system kernels consistent with the Artstein law above:
///   Gamma(s) = e^{(s - tau) Lambda},  Q(s, r) = e^{(s - r - tau) Lambda} C.
[[nodiscard]] Matrix gamma_kernel(const DelayOperator& op, double s);
[[nodiscard]] Matrix q_kernel(const DelayOperator& op, double s, double r);

/// Samples Z(r, t) = U(t + r - tau) on r_i = i tau / n, i = 0..n.
struct TransportGrid {
  double t = 0.0;
  std::vector<double> r;
  std::vector<Vector> z;
};

/// n = 0 picks tau / grid_step when the operator is tabulated, else 64.
[[nodiscard]] TransportGrid transport_grid(const DelayOperator& op, const ControlHistory& u, double t, int n = 0);

/// |W(tau, t)| with W(s, t) = Z(s, t) - int_0^s Q(s, r) Z(r, t) dr - Gamma(s) Y(t).
[[nodiscard]] double target_system_check(const DelayOperator& op, const TransportGrid& z, const ControlHistory& y);
[[nodiscard]] double target_system_check(const DelayOperator& op, const ControlHistory& u, const ControlHistory& y,
                                         double t);

}  // namespace ndstab
