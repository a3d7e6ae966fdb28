#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pdgd/dynamics.hpp"
#include "pdgd/equilibrium.hpp"
#include "pdgd/lyapunov.hpp"

namespace pdgd {

/// Least-squares line through (t, log norm): norm ~ c_hat exp(-tau_hat t).
struct RateFit {
  double tau_hat = 0.0;
  double c_hat = 0.0;
  double r_squared = 0.0;
  std::size_t start = 0;  // first sample used
  std::size_t end = 0;    // one past the last sample used
  double floor = 0.0;
};

/// Uses the leading run of samples with norm > floor (default 1e-12 times
/// the first norm). Throws FitError("insufficient decaying samples") when
/// fewer than 10 samples qualify or the series is constant.
RateFit fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& norms,
                             std::optional<double> floor = {});

/// Norm series of a trajectory against a fixed reference point. `Gdy` holds
/// |grad g(y) - grad g(y_ref)|, which is |G dy| for quadratic g.
struct DeviationSeries {
  std::vector<double> t;
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<double> dlam;
  std::vector<double> Bdy;
  std::vector<double> Gdy;
  std::vector<double> dz;
};

DeviationSeries deviation_series(const ProblemSpec& problem, const Trajectory& traj,
                                 const State& z_ref);

struct ConvergenceReport {
  bool trivial = false;  // started at the equilibrium, nothing to fit
  std::optional<RateFit> dx;
  std::optional<RateFit> dlam;
  std::optional<RateFit> Bdy;
  std::optional<RateFit> Gdy;
  std::optional<RateFit> dz;
  /// Distance to the equilibrium set (quadratic g with a nontrivial kernel).
  std::optional<RateFit> dist_set;
  /// Final |dy| and whether it stalled (relative change below 1e-6 over
  /// the last quarter of the run). Reported when the kernel is nontrivial.
  std::optional<double> dy_plateau_level;
  bool dy_plateaued = false;
};

/// Quadratic g: fits |dx|, |dlam|, |B dy| and |G dy| against the fixed
/// representative of the equilibrium set and reports the |dy| plateau.
ConvergenceReport convergence_report(const ProblemSpec& problem, const Trajectory& traj,
                                     const EquilibriumSet& eq);

/// Unique equilibrium: a single fit of |dz|.
ConvergenceReport convergence_report(const ProblemSpec& problem, const Trajectory& traj,
                                     const State& z_star);

struct SyncReport {
  double c_x_hat = 0.0;
  double vartheta_hat = 0.0;
  double c_lam = 0.0;
  double c_y = 0.0;
  double c_g = 0.0;
  double ratio_lam = 0.0;
  double ratio_By = 0.0;
  double ratio_Bgradg = 0.0;
  std::size_t checked = 0;  // iterations at which the three bounds were compared
  bool pass = false;
};

/// The discrete run must record every iteration. vartheta_hat comes from a
/// log-linear fit of |x_i - x*| after a 10% burn-in; c_x_hat is the smallest
/// c with |x_i - x*| <= c vartheta_hat^i on the samples above the noise
/// floor. Throws FitError if x does not converge linearly.
SyncReport check_synchronicity(const ProblemSpec& problem, const StepSizes& steps,
                               const Trajectory& traj, const State& z_star);

struct LyapunovMonitor {
  std::vector<double> t;
  std::vector<double> V;
  std::vector<double> envelope;  // V(0) exp(-tau t)
  bool vacuous = false;
  bool envelope_ok = true;
  bool derivative_ok = true;
  long worst_envelope_index = -1;
  double worst_envelope_excess = 0.0;  // max of V / envelope - 1
  long worst_derivative_index = -1;
  double worst_derivative_excess = 0.0;
  double derivative_tol = 0.0;

  bool pass() const { return envelope_ok && derivative_ok; }
};

/// Checks V(t_j) <= V(t_0) exp(-tau (t_j - t_0)) (1 + 1e-6) and the central
/// difference dV/dt <= -tau V + tol (1 + V) with tol = 10 h^2 L^3, h the
/// sample spacing and L = field_scale(problem).
LyapunovMonitor monitor_lyapunov(const ProblemSpec& problem, const Trajectory& traj,
                                 const Certificate& cert, const State& z_star);

struct LocalPhase {
  double t_delta = 0.0;
  RateFit local_fit;
};

/// Earliest time after which log |dz| is a line with r^2 >= 0.98 and a
/// negative slope. Throws FitError on diverging input or when no such tail
/// exists.
LocalPhase detect_local_phase(const Trajectory& traj, const State& z_star);

}  // namespace pdgd
