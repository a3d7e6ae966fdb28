#pragma once

#include <optional>

#include "pdgd/problem.hpp"

namespace pdgd {

struct KktSolution {
  Vec x_star;
  Vec y_star;
  Vec lam_star;
  double residual = 0.0;  // max of the three Lagrangian-gradient block norms
  int iterations = 0;

  State state() const { return State(x_star, y_star, lam_star); }
};

/// Equilibria of the flow for quadratic g: x*, lam* are unique and y ranges
/// over y_base + span(kernel_basis), with kernel_basis an orthonormal basis
/// of ker(B) and ker(G) intersected.
struct EquilibriumSet {
  Vec x_star;
  Vec lam_star;
  Vec y_base;
  Mat kernel_basis;
  double residual = 0.0;

  int kernel_dim() const { return static_cast<int>(kernel_basis.cols()); }
  State representative() const { return State(x_star, y_base, lam_star); }
  /// The equilibrium with y = y_base + N w.
  State point(const Vec& w) const;
  /// Equilibrium closest to z, i.e. y_base plus the kernel component of y - y_base.
  State nearest_to(const State& z) const;
};

struct KktQuadraticOptions {
  double rank_tol = 1e-10;
  /// When set, adds (weight/2) |y - center|^2 to g instead of taking the
  /// minimum-norm solution; used to cross-check the tie-breaking.
  std::optional<Vec> proximal_center;
  double proximal_weight = 1e-9;
};

/// Solves [[F,0,A^T],[0,G,B^T],[A,B,0]] (x,y,lam) = (-q_f,-q_g,d) for quadratic
/// f and g with a minimum-norm (complete orthogonal decomposition) solve.
/// Throws InfeasibleError if the system is inconsistent and
/// PreconditionError if A is not of full row rank.
EquilibriumSet solve_kkt_quadratic(const ProblemSpec& problem, const KktQuadraticOptions& opts = {});

/// Damped Newton on the stacked KKT residual, halving the step at most 40
/// times per iteration. Stops when the residual is at most 1e-10 (1 + |z|).
KktSolution solve_kkt_generic(const ProblemSpec& problem, const State& z0, int max_iter = 100);

/// Orthonormal basis of ker([G; B]); singular values at or below tol * sigma_max are zero.
Mat kernel_intersection_basis(const Mat& B, const Mat& G, double tol = 1e-10);

struct LocalConditionReport {
  double min_eig = 0.0;
  bool holds = false;
};

/// Smallest eigenvalue of B^T B + hess g(y*); holds iff it exceeds 1e-9.
LocalConditionReport check_local_condition(const ProblemSpec& problem, const Vec& y_star);

}  // namespace pdgd
