#pragma once

// Heat equation y_t = y'' + c y on (0, pi) with
//   y(t, 0) = u(t - tau),   y'(t, 0) + y'(t, pi) + alpha y(t, pi) = 0,
// discretized by Crank-Nicolson on a uniform grid, with the delayed feedback
// u = gain . U built from the design and the Artstein predictor.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseLU>

#include "ndstab/config.hpp"
#include "ndstab/delay.hpp"
#include "ndstab/design.hpp"
#include "ndstab/spectral.hpp"

namespace ndstab {

/// Nodes x_i = i h, i = 0..m+1, h = pi / (m + 1), with Simpson weights.
struct Grid {
  explicit Grid(int m);

  int m;
  double h;
  std::vector<double> x;
  std::vector<double> weights;

  [[nodiscard]] std::size_t nodes() const noexcept { return x.size(); }
  [[nodiscard]] double norm(std::span<const double> y) const;
};

/// Initial profile on the grid from the config preset or samples.
[[nodiscard]] std::vector<double> initial_profile(const SimConfig& cfg, const Grid& grid);

/// One Crank-Nicolson step per call; the sparse system is factorized once.
class HeatSolver {
 public:
  HeatSolver(const Grid& grid, double c, double alpha, double dt);

  /// Advances all m + 2 nodes of y by dt; y[0] becomes `boundary`.
  void step(std::vector<double>& y, double boundary) const;

  /// Result of one step from the zero state with new boundary value 1.
  [[nodiscard]] const std::vector<double>& unit_response() const noexcept { return unit_; }

  [[nodiscard]] double dt() const noexcept { return dt_; }

 private:
  int m_;
  double h_;
  double c_;
  double dt_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<double> unit_;
};

void step_open_loop(const HeatSolver& solver, std::vector<double>& y, double u_boundary);

/// Y_i = <y, psi_i>, i < d, by Simpson quadrature on the grid.
class ModeProjector {
 public:
  ModeProjector(const BasisPair& basis, const Grid& grid, int d);
  [[nodiscard]] Vector project(std::span<const double> y) const;
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(w_.rows()); }

 private:
  Matrix w_;  // d x (m + 2): weight_i psi_j(x_i)
};

[[nodiscard]] Vector project_modes(const BasisPair& basis, const Grid& grid, std::span<const double> y, int d);

struct Trajectory {
  int d = 0;
  std::vector<double> t;
  std::vector<double> norm_y;
  std::vector<double> u;      ///< boundary value y(t, 0) actually applied
  std::vector<double> modes;  ///< row-major, d entries per sample

  std::vector<double> x;
  std::vector<double> profile_t;
  std::vector<std::vector<double>> profiles;

  /// Predictor U and projected Y at every step (closed-loop runs only).
  std::optional<ControlHistory> u_history;
  std::optional<ControlHistory> y_history;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] Vector Y(std::size_t i) const;

  void write_csv(std::ostream& out) const;
  void write_profiles_csv(std::ostream& out) const;
};

struct RunOptions {
  bool control = true;
  /// Spacing of stored spatial profiles; 0 keeps only the first and last.
  double profile_every = 0.0;
  LowerLimit lower = LowerLimit::Literal;
};

/// Everything a run needs that depends only on the config.
class Simulation {
 public:
  /// Validates the config; builds the design when `with_design` is set.
  explicit Simulation(SimConfig cfg, bool with_design = true);

  [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] const BasisPair& basis() const noexcept { return basis_; }
  [[nodiscard]] int d() const noexcept { return d_; }
  [[nodiscard]] const DesignSet& design() const;
  [[nodiscard]] bool has_design() const noexcept { return design_.has_value(); }

  [[nodiscard]] Trajectory run_closed_loop(const RunOptions& opts = {}) const;
  /// u = gain . Y applied without delay or predictor (implicit coupling).
  [[nodiscard]] Trajectory run_undelayed_proportional(const RunOptions& opts = {}) const;
  /// dY/dt = Lambda Y + C U(t - tau) from the projected initial profile.
  [[nodiscard]] Trajectory run_modal_ode(LowerLimit lower = LowerLimit::Literal) const;

 private:
  SimConfig cfg_;
  int d_;
  Grid grid_;
  BasisPair basis_;
  std::optional<DesignSet> design_;
};

[[nodiscard]] Trajectory run_closed_loop(const SimConfig& cfg, const RunOptions& opts = {});
[[nodiscard]] Trajectory run_open_loop(const SimConfig& cfg);
[[nodiscard]] Trajectory run_undelayed_proportional(const SimConfig& cfg);
[[nodiscard]] Trajectory run_modal_ode(const SimConfig& cfg);

/// Exponential-integrator run of the modal system for given matrices.
[[nodiscard]] Trajectory run_modal_ode(const DesignSet& design, double tau, double dt, double t_final,
                                       const Vector& y0, LowerLimit lower = LowerLimit::Literal);

/// Least-squares slope of log norm_y on [t_start, t_final].
[[nodiscard]] double estimate_decay_rate(const Trajectory& traj, double t_start);
[[nodiscard]] double estimate_decay_rate(std::span<const double> t, std::span<const double> norms, double t_start);

}  // namespace ndstab
