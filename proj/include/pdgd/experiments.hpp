#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pdgd/analysis.hpp"
#include "pdgd/problem.hpp"

namespace pdgd {

enum class Recipe { QuadraticV_A, QuarticV_B };

const char* to_string(Recipe r);
Recipe recipe_from_string(const std::string& s);  // accepts "quadratic" and "quartic" too

struct ExperimentConfig {
  Recipe recipe = Recipe::QuadraticV_A;
  int n = 60;
  int m = 50;
  int k = 20;
  int r_G = 40;
  std::uint64_t seed = 42;
  TimeConstants eta;
  double t_end = 50.0;
  std::optional<double> dt;  // default_time_step of the instance when absent
  std::string output_dir = "out";
  int target_samples = 2000;      // recorded samples (sample_every is derived)
  int assumption_samples = 200;
  int decrease_samples = 1000;

  /// Throws PreconditionError on non-positive sizes, r_G > m - 1, ...
  void validate() const;
};

/// Seeded instance. The draw order from one NormalStream is F0 (n x n),
/// G0 (r_G x (m-1), quadratic only), B0 (k x (m-1)) or B (k x m), A (k x n,
/// redrawn while sigma_min(A A^T) < 1e-6, at most 10 times), d (k).
/// The quartic recipe gets rho = 12 r^2 for the validation radius r = 10;
/// see region_constants for the trajectory-specific value.
ProblemSpec generate_instance(const ExperimentConfig& config);

/// Initial state of a run: a standard-normal vector from a stream derived
/// from the config seed, independent of the instance draws.
State initial_state(const ExperimentConfig& config, const Dims& dims);

/// For the quartic recipe: every coordinate of y stays within
/// R = |y*|_inf + sqrt(eta_y V(z0)), V(z) = sum of |z_b - z*_b|^2 / eta_b,
/// because V is non-increasing along the flow for convex f and g. Returns
/// the problem with rho = 12 R^2, together with R.
std::pair<ProblemSpec, double> region_constants(const ProblemSpec& problem, const State& z0,
                                                const State& z_star);

/// Runs the full pipeline and writes instance.json, trajectory.csv,
/// rates.json and certificate.json (or failure.json) into output_dir.
/// Returns 0 iff every enabled check passed.
int run_experiment(const ExperimentConfig& config);

}  // namespace pdgd
