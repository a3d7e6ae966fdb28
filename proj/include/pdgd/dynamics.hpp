#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdgd/problem.hpp"

namespace pdgd {

/// Recorded samples of a continuous or discrete run. For discrete runs the
/// time axis holds iteration indices.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::string integrator;
  double step = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  const State& back() const { return states.back(); }
};

/// (-eta_x (grad f + A^T lam), -eta_y (grad g + B^T lam), eta_lam (A x + B y - d))
State vector_field(const ProblemSpec& problem, const State& z);

/// Same field on the stacked vector, written into `out` (resized as needed).
void vector_field_stacked(const ProblemSpec& problem, const Vec& z, Vec& out);

/// Lipschitz-type scale eta_max (ell + sqrt(kappa2) + rho + |B|) of the field.
double field_scale(const ProblemSpec& problem);

/// 0.5 / field_scale(problem)
double default_time_step(const ProblemSpec& problem);

struct IntegrateOptions {
  int sample_every = 1;
  std::uint64_t seed = 0;  // recorded in the trajectory metadata only
};

/// Classical fixed-step RK4 on the continuous flow. Samples at multiples of
/// sample_every steps plus the final state; the final time is the first
/// multiple of dt that reaches t_end.
Trajectory integrate(const ProblemSpec& problem, const State& z0, double t_end, double dt,
                     IntegrateOptions options = {});

/// Simultaneous (Jacobi) primal-dual iteration: every update reads the
/// iteration-i state.
Trajectory discrete_run(const ProblemSpec& problem, const StepSizes& steps, const State& z0,
                        int iters, int sample_every = 1);

/// F and G with grad f(x) - grad f(x*) = F (x - x*) and likewise for g.
struct MeanValuePair {
  Mat F;
  Mat G;
  double residual_f = 0.0;
  double residual_g = 0.0;
};

/// F = int_0^1 hess f(x* + s (x - x*)) ds by Gauss-Legendre quadrature
/// (exact for quadratics). Throws ConvergenceError when the mean-value
/// residual exceeds 1e-6 (1 + |grad|), which means more nodes are needed.
MeanValuePair mean_value_pair(const ProblemSpec& problem, const State& z, const State& z_star,
                              int quad_nodes = 8);

/// [[-eta_x F, 0, -eta_x A^T], [0, -eta_y G, -eta_y B^T], [eta_lam A, eta_lam B, 0]]
Mat assemble_W(const Mat& F, const Mat& G, const ProblemSpec& problem);

}  // namespace pdgd
