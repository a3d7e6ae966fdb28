// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pdgd/analysis.hpp"
#include "pdgd/experiments.hpp"
#include "pdgd/linalg.hpp"

using namespace pdgd;

namespace {

struct Line {
  bool ok = true;
  std::string detail;

  void need(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!detail.empty()) detail += "; ";
    detail += (cond ? "" : "!") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

IntegrateOptions every(double t_end, double dt, int target) {
  IntegrateOptions o;
  o.sample_every = std::max(1, static_cast<int>(t_end / dt) / target);
  return o;
}

ExperimentConfig reference_quadratic() {
  ExperimentConfig c;  // 60, 50, 20, r_G 40
  c.seed = 42;
  c.t_end = 50.0;
  return c;
}

ExperimentConfig reference_quartic(int k) {
  ExperimentConfig c;
  c.recipe = Recipe::QuarticV_B;
  c.m = 20;
  c.k = k;
  c.seed = 7;
  c.t_end = k == 30 ? 40.0 : 100.0;
  return c;
}

// Shared state of the quadratic runs.
struct QuadRun {
  ProblemSpec p;
  EquilibriumSet eq;
  State z0;
  Trajectory traj;
  double seconds;
};

QuadRun quad_run() {
  const ExperimentConfig c = reference_quadratic();
  const auto t0 = std::chrono::steady_clock::now();
  ProblemSpec p = generate_instance(c);
  EquilibriumSet eq = solve_kkt_quadratic(p);
  State z0 = initial_state(c, p.dims());
  const double dt = default_time_step(p);
  Trajectory traj = integrate(p, z0, c.t_end, dt, every(c.t_end, dt, c.target_samples));
  return QuadRun{std::move(p), std::move(eq), std::move(z0), std::move(traj), seconds_since(t0)};
}

Line criterion1(const QuadRun& q) {
  Line l;
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceReport r = convergence_report(q.p, q.traj, q.eq);
  const double secs = q.seconds + seconds_since(t0);
  const std::pair<const char*, const std::optional<RateFit>*> fits[] = {
      {"dx", &r.dx}, {"dlam", &r.dlam}, {"Bdy", &r.Bdy}, {"Gdy", &r.Gdy}};
  for (const auto& [name, f] : fits) {
    l.need(f->has_value() && (*f)->tau_hat > 0 && (*f)->r_squared >= 0.99,
           std::string(name) + " tau=" + fmt("%.4f", (*f)->tau_hat) + " r2=" + fmt("%.4f", (*f)->r_squared));
  }
  l.need(r.dy_plateau_level && *r.dy_plateau_level > 1e-3 && r.dy_plateaued,
         "dy plateau=" + fmt("%.4g", r.dy_plateau_level.value_or(0)));
  l.need(secs <= 30.0, "runtime=" + fmt("%.2fs", secs));
  return l;
}

Line criterion2(const QuadRun& q) {
  Line l;
  const CertificateParams prm = search_parameters(q.p, CertificateKind::P1);
  const Certificate c = build_certificate(q.p, CertificateKind::P1, prm);
  l.need(c.diagnostics.all_ok(), "P1 params alpha=" + fmt("%.4g", prm.alpha) + " beta=" + fmt("%.4g", prm.beta));
  const PositivityReport pos = verify_positivity(c);
  const int qdim = q.eq.kernel_dim();
  l.need(pos.min_eig >= -1e-8 * pos.max_eig, "min_eig(P1)/max=" + fmt("%.3g", pos.min_eig / pos.max_eig));
  l.need(pos.zero_count == qdim, "zeros=" + std::to_string(pos.zero_count) + " q=" + std::to_string(qdim));
  const DecreaseReport dec = verify_decrease_sampled(q.p, c, 1000, 42);
  l.need(dec.min_eig >= -1e-8 * dec.max_scale, "Q1 min/scale=" + fmt("%.3g", dec.min_eig / dec.max_scale));
  const LyapunovMonitor mon = monitor_lyapunov(q.p, q.traj, c, q.eq.nearest_to(q.z0));
  l.need(mon.envelope_ok, "V1 envelope worst excess=" + fmt("%.3g", mon.worst_envelope_excess));
  return l;
}

Line criterion3() {
  Line l;
  const ExperimentConfig c = reference_quartic(30);
  const ProblemSpec p0 = generate_instance(c);
  const AssumptionReport ar = validate_assumptions(p0, 200, c.seed);
  l.need(ar.assumption4 != Assumption4Status::Failed && ar.gamma_estimate && *ar.gamma_estimate > 0,
         std::string("assumption4=") + to_string(ar.assumption4) + " gamma=" + fmt("%.4g", ar.gamma_estimate.value_or(0)));
  const KktSolution s = solve_kkt_generic(p0, State::zeros(p0.dims()));
  const State z0 = initial_state(c, p0.dims());
  const auto [p, R] = region_constants(p0, z0, s.state());
  const CertificateParams prm = search_parameters(p, CertificateKind::P2);
  const Certificate cert = build_certificate(p, CertificateKind::P2, prm);
  l.need(cert.diagnostics.all_ok(), "P2 tau=" + fmt("%.3g", prm.tau));
  const PositivityReport pos = verify_positivity(cert);
  l.need(pos.min_eig > 0.0 && pos.pass, "min_eig(P2)=" + fmt("%.3g", pos.min_eig));
  const double dt = default_time_step(p);
  const Trajectory t = integrate(p, z0, c.t_end, dt, every(c.t_end, dt, 2000));
  const ConvergenceReport r = convergence_report(p, t, s.state());
  l.need(r.dz && r.dz->tau_hat > 0 && r.dz->r_squared >= 0.99,
         "dz tau=" + fmt("%.4f", r.dz ? r.dz->tau_hat : 0) + " r2=" + fmt("%.4f", r.dz ? r.dz->r_squared : 0));
  const DecreaseReport dec = verify_decrease_sampled(p, cert, 1000, c.seed);
  l.need(dec.min_eig >= -1e-8 * dec.max_scale, "Q2 min/scale=" + fmt("%.3g", dec.min_eig / dec.max_scale));
  const LyapunovMonitor mon = monitor_lyapunov(p, t, cert, s.state());
  l.need(mon.envelope_ok, "V2 envelope worst excess=" + fmt("%.3g", mon.worst_envelope_excess));
  return l;
}

Line criterion4() {
  Line l;
  const ExperimentConfig c = reference_quartic(10);
  const ProblemSpec p0 = generate_instance(c);
  const KktSolution s = solve_kkt_generic(p0, State::zeros(p0.dims()));
  const State z0 = initial_state(c, p0.dims());
  const auto [p, R] = region_constants(p0, z0, s.state());
  const double dt = default_time_step(p);
  const Trajectory t = integrate(p, z0, c.t_end, dt, every(c.t_end, dt, 2000));
  try {
    const LocalPhase lp = detect_local_phase(t, s.state());
    l.need(std::isfinite(lp.t_delta) && lp.t_delta > 0.0, "t_delta=" + fmt("%.4g", lp.t_delta));
    l.need(lp.local_fit.tau_hat > 0 && lp.local_fit.r_squared >= 0.98,
           "local tau=" + fmt("%.4f", lp.local_fit.tau_hat) + " r2=" + fmt("%.4f", lp.local_fit.r_squared));
  } catch (const FitError& e) {
    l.need(false, e.what());
  }
  const LocalConditionReport lc = check_local_condition(p, t.back().y);
  l.need(lc.holds && lc.min_eig > 0, "local condition min_eig=" + fmt("%.4g", lc.min_eig));
  return l;
}

Line criterion5(const QuadRun& q) {
  Line l;
  const StepSizes nu = StepSizes::uniform(2e-3);
  const Trajectory t = discrete_run(q.p, nu, q.z0, 30000);
  const SyncReport s = check_synchronicity(q.p, nu, t, q.eq.nearest_to(q.z0));
  l.need(s.checked > 0, "checked=" + std::to_string(s.checked) + " vartheta=" + fmt("%.8f", s.vartheta_hat));
  l.need(s.ratio_lam <= 1 + 1e-6, "ratio_lam=" + fmt("%.4g", s.ratio_lam));
  l.need(s.ratio_By <= 1 + 1e-6, "ratio_By=" + fmt("%.4g", s.ratio_By));
  l.need(s.ratio_Bgradg <= 1 + 1e-6, "ratio_Bgradg=" + fmt("%.4g", s.ratio_Bgradg));
  return l;
}

Line criterion6(const QuadRun& q) {
  Line l;
  const State& zT = q.traj.back();
  const double dx = (zT.x - q.eq.x_star).norm();
  l.need(dx < 1e-6, "|dx(T)|=" + fmt("%.3g", dx));
  const double ex = (zT.x - q.eq.x_star).cwiseAbs().maxCoeff();
  const double el = (zT.lam - q.eq.lam_star).cwiseAbs().maxCoeff();
  l.need(ex <= 1e-5 && el <= 1e-5, "quadratic x err=" + fmt("%.3g", ex) + " lam err=" + fmt("%.3g", el));
  NormalStream rng(6);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    worst = std::max(worst, vector_field(q.p, q.eq.point(rng.vector(q.eq.kernel_dim()))).norm());
  }
  l.need(worst <= 1e-8, "set residual=" + fmt("%.3g", worst));

  // Unique-equilibrium case.
  const ExperimentConfig c = reference_quartic(30);
  const ProblemSpec p0 = generate_instance(c);
  const KktSolution s = solve_kkt_generic(p0, State::zeros(p0.dims()));
  const State z0 = initial_state(c, p0.dims());
  const auto [p, R] = region_constants(p0, z0, s.state());
  const Trajectory t = integrate(p, z0, c.t_end, default_time_step(p), {1000, 0});
  const double qx = (t.back().x - s.x_star).cwiseAbs().maxCoeff();
  const double ql = (t.back().lam - s.lam_star).cwiseAbs().maxCoeff();
  l.need((t.back().x - s.x_star).norm() < 1e-6 && qx <= 1e-5 && ql <= 1e-5,
         "quartic x err=" + fmt("%.3g", qx) + " lam err=" + fmt("%.3g", ql));
  return l;
}

Line criterion7() {
  Line l;
  NormalStream rng(2024);
  double worst = 0.0;
  std::string worst_name;
  auto cmp = [&](const char* name, double got, double want) {
    const double e = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    if (e > worst) {
      worst = e;
      worst_name = name;
    }
  };
  for (int i = 0; i < 20; ++i) {
    const bool p1 = i % 2 == 0;
    const TimeConstants eta(0.5 + 2 * rng.uniform(), 0.5 + 2 * rng.uniform(), 0.5 + 2 * rng.uniform());
    const ProblemSpec p = p1 ? oracle::small_quadratic(500 + i, 9, 8, 4, 4, eta)
                             : oracle::small_quartic(500 + i, 8, 4, 5, eta);
    const CertificateKind kind = p1 ? CertificateKind::P1 : CertificateKind::P2;
    const CertificateParams base = search_parameters(p, kind);
    const double a = base.alpha * std::pow(10.0, -1.0 + 3.0 * rng.uniform());
    const double b = base.beta * std::ldexp(1.0, -static_cast<int>(4 * rng.uniform()));
    std::optional<SpectralFactorization> fac;
    if (p1) fac = build_spectral_factorization(p.g().quadratic_form()->Q, p.B());
    const CertificateDiagnostics d =
        compute_diagnostics(certificate_constants(p, fac ? &*fac : nullptr), kind, a, b);
    const oracle::Scalars s = oracle::scalars(p, fac ? &*fac : nullptr, a, b);
    cmp("tau", CertificateParams::make(a, b).tau, s.tau);
    cmp("c1", d.c1, s.c1);
    cmp("c2", d.c2, s.c2);
    cmp("s1", d.s1, s.s1);
    cmp("p1", d.p1, s.p1);
    if (p1) {
      cmp("h1", d.h1, s.h1);
      cmp("h2", d.h2, s.h2);
      cmp("h3", d.h3, s.h3);
      if (s.c2 > 0) cmp("h4", d.h4, s.h4);
    } else {
      cmp("c3", d.c3, s.c3);
    }
  }
  l.need(worst <= 1e-12, "20 triples, worst rel err=" + fmt("%.3g", worst) + (worst_name.empty() ? "" : " (" + worst_name + ")"));
  return l;
}

Line criterion8() {
  Line l;
  const ProblemSpec pq = generate_instance(reference_quadratic());
  const EquilibriumSet eq = solve_kkt_quadratic(pq);
  const ProblemSpec pr = generate_instance(reference_quartic(30));
  const KktSolution s = solve_kkt_generic(pr, State::zeros(pr.dims()));
  NormalStream rng(8);
  for (const bool quartic : {false, true}) {
    const ProblemSpec& p = quartic ? pr : pq;
    const State zs = quartic ? s.state() : eq.representative();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const State z = zs + State::from_stacked(rng.vector(p.dims().total()), p.dims());
      const MeanValuePair mv = mean_value_pair(p, z, zs);
      const Vec dz = (z - zs).stacked();
      const double res = (vector_field(p, z).stacked() - oracle::W(mv.F, mv.G, p) * dz).norm();
      worst = std::max(worst, res / (1.0 + dz.norm()));
    }
    l.need(worst <= 1e-7, std::string(quartic ? "quartic" : "quadratic") + " worst=" + fmt("%.3g", worst));
  }
  return l;
}

Line criterion9(const QuadRun& q) {
  Line l;
  Mat A = q.p.A();
  A.row(A.rows() - 1) = A.row(0);
  const ProblemSpec bad(q.p.f(), q.p.g(), EqualityConstraint(A, q.p.B(), q.p.d()), q.p.constants());
  const AssumptionReport rep = validate_assumptions(bad, 50, 1);
  l.need(!rep.full_row_rank && !rep.core_ok(), "rank-deficient A rejected");

  // Scalar toy (f = 5x^2/2, A = 0.1, no y) where the searched tau is within a
  // factor two of the slowest decay of V; start on that direction.
  const ProblemSpec toy = oracle::scalar(5.0, 0, 0.1, 0.0, 0.0);
  const Certificate c = build_certificate(toy, CertificateKind::P2, search_parameters(toy, CertificateKind::P2));
  const Mat W = oracle::W(toy.f().quadratic_form()->Q, Mat(0, 0), toy);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(-W.transpose() * c.P - c.P * W, c.P);
  const State zs = State::zeros(toy.dims());
  const Trajectory t = integrate(toy, State::from_stacked(ges.eigenvectors().col(0).normalized(), toy.dims()),
                                 20.0, 0.01, {5, 0});
  Certificate tampered = c;
  tampered.params.tau *= 2.0;
  const bool honest = monitor_lyapunov(toy, t, c, zs).pass();
  const LyapunovMonitor mon = monitor_lyapunov(toy, t, tampered, zs);
  l.need(honest && !mon.envelope_ok, "doubled tau caught, excess=" + fmt("%.3g", mon.worst_envelope_excess));

  const ExperimentConfig c10 = reference_quartic(10);
  const ProblemSpec p10 = generate_instance(c10);
  const AssumptionReport r10 = validate_assumptions(p10, 200, c10.seed);
  bool kernel_witness = false;
  for (const Witness& w : r10.witnesses) {
    if (w.check != "assumption4") continue;
    const Vec dy = w.second - w.first;
    kernel_witness = dy.norm() > 0 && (p10.B() * dy).norm() <= 1e-9 * dy.norm();
  }
  l.need(r10.assumption4 == Assumption4Status::Failed && kernel_witness,
         std::string("k=10 assumption4=") + to_string(r10.assumption4));
  return l;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::function<Line()>& fn) {
    Line l;
    try {
      l = fn();
    } catch (const std::exception& e) {
      l.ok = false;
      l.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s  %s\n", id, l.ok ? "PASS" : "FAIL", l.detail.c_str());
    std::fflush(stdout);
    if (!l.ok) ++failed;
  };

  std::optional<QuadRun> q;
  try {
    q = quad_run();
  } catch (const std::exception& e) {
    std::printf("quadratic run failed: %s\n", e.what());
  }
  auto with_q = [&](Line (*fn)(const QuadRun&)) {
    return [&, fn] {
      if (!q) throw Error("quadratic run unavailable");
      return fn(*q);
    };
  };

  report(1, with_q(criterion1));
  report(2, with_q(criterion2));
  report(3, criterion3);
  report(4, criterion4);
  report(5, with_q(criterion5));
  report(6, with_q(criterion6));
  report(7, criterion7);
  report(8, criterion8);
  report(9, with_q(criterion9));
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
