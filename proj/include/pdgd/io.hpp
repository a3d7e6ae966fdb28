#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pdgd/analysis.hpp"
#include "pdgd/equilibrium.hpp"
#include "pdgd/experiments.hpp"
#include "pdgd/lyapunov.hpp"

namespace pdgd::io {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become null.
Json number(double v);

/// Matrices are stored row-major as {"rows", "cols", "data"}.
Json matrix_to_json(const Mat& M);
Mat matrix_from_json(const Json& j);
Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j);

Json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const Json& j);

/// Quadratic f is required; g is quadratic or "quartic".
Json instance_to_json(const ProblemSpec& p, const std::string& recipe, std::uint64_t seed,
                      const std::optional<State>& z0 = {});

struct LoadedInstance {
  ProblemSpec problem;
  std::uint64_t seed;
  std::optional<State> z0;
};

LoadedInstance instance_from_json(const Json& j);

Json fit_to_json(const RateFit& f);
Json assumptions_to_json(const AssumptionReport& r);
Json equilibrium_to_json(const EquilibriumSet& eq, const std::optional<LocalConditionReport>& lc = {});
Json equilibrium_to_json(const KktSolution& s, const std::optional<LocalConditionReport>& lc = {});
Json convergence_to_json(const ConvergenceReport& r);
Json sync_to_json(const SyncReport& r);
Json monitor_to_json(const LyapunovMonitor& m);
Json positivity_to_json(const PositivityReport& r);
Json decrease_to_json(const DecreaseReport& r);

/// {kind, alpha, beta, tau, min_eig_P, min_eig_Q_sampled, diagnostics, conditions}
Json certificate_to_json(const Certificate& c);

/// t,norm_dx,norm_dlam,norm_Bdy,norm_Gdy,norm_dy,V1,V2; V columns are empty
/// when the matching certificate is absent.
void write_trajectory_csv(std::ostream& os, const DeviationSeries& s, const std::vector<double>* V1,
                          const std::vector<double>* V2);

/// t,V,bound
void write_envelope_csv(std::ostream& os, const LyapunovMonitor& m);

/// t followed by every state coordinate (x_1..x_n, y_1..y_m, lam_1..lam_k).
void write_states_csv(std::ostream& os, const Trajectory& traj);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// %.17g, so values round-trip.
std::string format_double(double v);

}  // namespace pdgd::io
