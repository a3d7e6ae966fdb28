#include "pdgd/experiments.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "pdgd/io.hpp"
#include "pdgd/linalg.hpp"
#include "pdgd/random.hpp"

namespace pdgd {

namespace fs = std::filesystem;

const char* to_string(Recipe r) { return r == Recipe::QuadraticV_A ? "QuadraticV_A" : "QuarticV_B"; }

Recipe recipe_from_string(const std::string& s) {
  std::string u = s;
  for (char& c : u) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (u == "quadratic" || u == "quadraticv_a") return Recipe::QuadraticV_A;
  if (u == "quartic" || u == "quarticv_b") return Recipe::QuarticV_B;
  throw PreconditionError("unknown recipe '" + s + "' (expected quadratic or quartic)");
}

void ExperimentConfig::validate() const {
  if (n < 1 || m < 1 || k < 1) throw PreconditionError("config: n, m, k must be positive");
  if (k > n) throw PreconditionError("config: k must not exceed n (A needs full row rank)");
  if (recipe == Recipe::QuadraticV_A && (r_G < 0 || r_G > m - 1)) {
    throw PreconditionError("config: QuadraticV_A needs 0 <= r_G <= m - 1");
  }
  if (!(t_end > 0.0)) throw PreconditionError("config: t_end must be positive");
  if (dt && !(*dt > 0.0)) throw PreconditionError("config: dt must be positive");
  if (target_samples < 2) throw PreconditionError("config: target_samples must be >= 2");
  if (assumption_samples < 1 || decrease_samples < 1) {
    throw PreconditionError("config: sample counts must be positive");
  }
}

namespace {

constexpr double kValidationRadius = 10.0;
constexpr int kMaxResamples = 10;

Mat draw_A(NormalStream& rng, int k, int n) {
  for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
    Mat A = rng.matrix(k, n);
    const double smin = linalg::min_eig(A * A.transpose());
    if (smin >= 1e-6) return A;
  }
  throw PreconditionError("generate_instance: A stayed rank deficient after " +
                          std::to_string(kMaxResamples) + " resamples");
}

}  // namespace

ProblemSpec generate_instance(const ExperimentConfig& c) {
  c.validate();
  NormalStream rng(c.seed);
  const Mat F0 = rng.matrix(c.n, c.n);
  const Mat F = 5.0 * Mat::Identity(c.n, c.n) + F0.transpose() * F0;
  const ObjectiveOracle f = ObjectiveOracle::quadratic(F, Vec::Zero(c.n));

  if (c.recipe == Recipe::QuadraticV_A) {
    const Mat G0 = rng.matrix(c.r_G, c.m - 1);
    const Mat B0 = rng.matrix(c.k, c.m - 1);
    const Mat A = draw_A(rng, c.k, c.n);
    const Vec d = rng.vector(c.k);
    Mat G = Mat::Zero(c.m, c.m);
    G.bottomRightCorner(c.m - 1, c.m - 1) = G0.transpose() * G0;
    Mat B = Mat::Zero(c.k, c.m);
    B.rightCols(c.m - 1) = B0;
    return ProblemSpec::from_quadratics(f, ObjectiveOracle::quadratic(G, Vec::Zero(c.m)),
                                        EqualityConstraint(A, B, d), c.eta);
  }

  const Mat B = rng.matrix(c.k, c.m);
  const Mat A = draw_A(rng, c.k, c.n);
  const Vec d = rng.vector(c.k);
  const Vec ev = linalg::eigenvalues(F);
  const SmoothnessConstants sc(ev(0), ev(ev.size() - 1), 12.0 * kValidationRadius * kValidationRadius);
  return ProblemSpec(f, ObjectiveOracle::quartic(c.m), EqualityConstraint(A, B, d), sc, c.eta);
}

State initial_state(const ExperimentConfig& c, const Dims& dims) {
  NormalStream rng(derived_seed(c.seed, 1));
  return State::from_stacked(rng.vector(dims.total()), dims);
}

std::pair<ProblemSpec, double> region_constants(const ProblemSpec& p, const State& z0,
                                                const State& z_star) {
  const TimeConstants& eta = p.eta();
  const State dz = z0 - z_star;
  const double V = dz.x.squaredNorm() / eta.x + dz.y.squaredNorm() / eta.y + dz.lam.squaredNorm() / eta.lam;
  const double R = (z_star.y.size() ? z_star.y.cwiseAbs().maxCoeff() : 0.0) + std::sqrt(eta.y * V);
  const SmoothnessConstants& s = p.constants();
  const double rho = std::max(s.rho, 12.0 * R * R);
  return {p.with_constants(SmoothnessConstants(s.mu, s.ell, rho, s.gamma)), R};
}

namespace {

using io::Json;

struct Checks {
  std::map<std::string, bool> items;
  void set(const std::string& name, bool ok) { items[name] = ok; }
  bool all() const {
    for (const auto& [k, v] : items) {
      if (!v) return false;
    }
    return true;
  }
  Json json() const {
    Json j = Json::object();
    for (const auto& [k, v] : items) j[k] = v;
    return j;
  }
};

IntegrateOptions sampling(const ExperimentConfig& c, double dt) {
  const long steps = static_cast<long>(std::ceil(c.t_end / dt - 1e-9));
  IntegrateOptions o;
  o.sample_every = static_cast<int>(std::max<long>(1, steps / c.target_samples));
  o.seed = c.seed;
  return o;
}

void add_fit_checks(Checks& checks, const ConvergenceReport& r) {
  const std::pair<const char*, const std::optional<RateFit>*> named[] = {
      {"rate_dx", &r.dx}, {"rate_dlam", &r.dlam}, {"rate_Bdy", &r.Bdy}, {"rate_Gdy", &r.Gdy}, {"rate_dz", &r.dz}, {"rate_dist_set", &r.dist_set}};
  for (const auto& [name, fit] : named) {
    if (*fit) checks.set(name, (*fit)->tau_hat > 0.0);
  }
}

struct CertificateRun {
  Certificate cert;
  PositivityReport pos;
  DecreaseReport dec;
  LyapunovMonitor mon;
};

CertificateRun certify_along(const ExperimentConfig& c, const ProblemSpec& p, CertificateKind kind,
                             const Trajectory& traj, const State& z_ref) {
  const CertificateParams params = search_parameters(p, kind);
  Certificate cert = build_certificate(p, kind, params);
  const PositivityReport pos = verify_positivity(cert);
  const DecreaseReport dec = verify_decrease_sampled(p, cert, c.decrease_samples, c.seed);
  cert.diagnostics.min_eig_Q_samples = dec.min_eig;
  LyapunovMonitor mon = monitor_lyapunov(p, traj, cert, z_ref);
  return CertificateRun{std::move(cert), pos, dec, std::move(mon)};
}

Json certificate_bundle(const CertificateRun& r) {
  Json j = io::certificate_to_json(r.cert);
  j["positivity"] = io::positivity_to_json(r.pos);
  j["decrease_sampled"] = io::decrease_to_json(r.dec);
  j["monitor"] = io::monitor_to_json(r.mon);
  return j;
}

void add_certificate_checks(Checks& checks, const CertificateRun& r) {
  checks.set("certificate_conditions", r.cert.diagnostics.all_ok());
  checks.set("certificate_positivity", r.pos.pass);
  checks.set("certificate_decrease_sampled", r.dec.pass);
  checks.set("lyapunov_monitor", r.mon.pass());
}

int run_quadratic(const ExperimentConfig& c, const fs::path& out, std::string& stage) {
  Checks checks;
  stage = "generate";
  const ProblemSpec p = generate_instance(c);
  const State z0 = initial_state(c, p.dims());
  io::write_json_file((out / "instance.json").string(), io::instance_to_json(p, to_string(c.recipe), c.seed, z0));

  stage = "validate_assumptions";
  const AssumptionReport ar = validate_assumptions(p, c.assumption_samples, c.seed, kValidationRadius);
  checks.set("assumptions", ar.core_ok());

  stage = "kkt";
  const EquilibriumSet eq = solve_kkt_quadratic(p);

  stage = "integrate";
  const double dt = c.dt.value_or(default_time_step(p));
  const Trajectory traj = integrate(p, z0, c.t_end, dt, sampling(c, dt));

  stage = "convergence_report";
  const DeviationSeries series = deviation_series(p, traj, eq.representative());
  const ConvergenceReport conv = convergence_report(p, traj, eq);
  add_fit_checks(checks, conv);

  stage = "certificate";
  // P1 is blind to the kernel component, so measuring from the nearest
  // equilibrium changes nothing but the rounding.
  const CertificateRun cr = certify_along(c, p, CertificateKind::P1, traj, eq.nearest_to(z0));
  add_certificate_checks(checks, cr);
  io::write_json_file((out / "certificate.json").string(), certificate_bundle(cr));
  {
    std::ofstream env(out / "lyapunov_envelope.csv");
    io::write_envelope_csv(env, cr.mon);
  }
  {
    std::ofstream csv(out / "trajectory.csv");
    io::write_trajectory_csv(csv, series, &cr.mon.V, nullptr);
  }

  Json rates{{"recipe", to_string(c.recipe)},
             {"seed", c.seed},
             {"dt", dt},
             {"samples", traj.size()},
             {"assumptions", io::assumptions_to_json(ar)},
             {"equilibrium", io::equilibrium_to_json(eq)},
             {"convergence", io::convergence_to_json(conv)},
             {"checks", checks.json()},
             {"pass", checks.all()}};
  io::write_json_file((out / "rates.json").string(), rates);
  return checks.all() ? 0 : 1;
}

int run_quartic(const ExperimentConfig& c, const fs::path& out, std::string& stage) {
  Checks checks;
  stage = "generate";
  const ProblemSpec p0 = generate_instance(c);
  const State z0 = initial_state(c, p0.dims());

  stage = "validate_assumptions";
  const AssumptionReport ar = validate_assumptions(p0, c.assumption_samples, c.seed, kValidationRadius);
  checks.set("assumptions", ar.core_ok());

  stage = "kkt";
  const KktSolution kkt = solve_kkt_generic(p0, State::zeros(p0.dims()));
  const State z_star = kkt.state();
  const auto [p, R] = region_constants(p0, z0, z_star);
  io::write_json_file((out / "instance.json").string(), io::instance_to_json(p, to_string(c.recipe), c.seed, z0));

  stage = "integrate";
  const double dt = c.dt.value_or(default_time_step(p));
  const Trajectory traj = integrate(p, z0, c.t_end, dt, sampling(c, dt));

  stage = "convergence_report";
  const DeviationSeries series = deviation_series(p, traj, z_star);
  const ConvergenceReport conv = convergence_report(p, traj, z_star);
  add_fit_checks(checks, conv);

  Json local = Json::object();
  try {
    const LocalPhase lp = detect_local_phase(traj, z_star);
    local["t_delta"] = lp.t_delta;
    local["fit"] = io::fit_to_json(lp.local_fit);
    checks.set("local_rate", lp.local_fit.tau_hat > 0.0);
  } catch (const FitError& e) {
    local["error"] = e.what();
    checks.set("local_rate", false);
  }
  const LocalConditionReport lc = check_local_condition(p, kkt.y_star);
  local["local_condition"] = Json{{"min_eig", io::number(lc.min_eig)}, {"holds", lc.holds}};

  // P2 needs a gamma that holds for every admissible G.
  std::optional<CertificateRun> cr;
  if (ar.assumption4 != Assumption4Status::Failed && certified_gamma(p)) {
    stage = "certificate";
    cr = certify_along(c, p, CertificateKind::P2, traj, z_star);
    add_certificate_checks(checks, *cr);
    io::write_json_file((out / "certificate.json").string(), certificate_bundle(*cr));
    std::ofstream env(out / "lyapunov_envelope.csv");
    io::write_envelope_csv(env, cr->mon);
  }
  {
    std::ofstream csv(out / "trajectory.csv");
    io::write_trajectory_csv(csv, series, nullptr, cr ? &cr->mon.V : nullptr);
  }

  Json rates{{"recipe", to_string(c.recipe)},
             {"seed", c.seed},
             {"dt", dt},
             {"samples", traj.size()},
             {"region_radius", R},
             {"rho", p.constants().rho},
             {"assumptions", io::assumptions_to_json(ar)},
             {"equilibrium", io::equilibrium_to_json(kkt, lc)},
             {"convergence", io::convergence_to_json(conv)},
             {"local_phase", std::move(local)},
             {"checks", checks.json()},
             {"pass", checks.all()}};
  io::write_json_file((out / "rates.json").string(), rates);
  return checks.all() ? 0 : 1;
}

}  // namespace

int run_experiment(const ExperimentConfig& c) {
  const fs::path out(c.output_dir);
  fs::create_directories(out);
  fs::remove(out / "failure.json");
  std::string stage = "config";
  try {
    c.validate();
    io::write_json_file((out / "config.json").string(), io::config_to_json(c));
    return c.recipe == Recipe::QuadraticV_A ? run_quadratic(c, out, stage) : run_quartic(c, out, stage);
  } catch (const std::exception& e) {
    const Json failure{{"stage", stage}, {"error", e.what()}};
    io::write_json_file((out / "failure.json").string(), failure);
    return 2;
  }
}

}  // namespace pdgd
