#include "pdgd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdgd {

namespace {

// Ordinary least squares of y on t over [s, e).
RateFit fit_range(const std::vector<double>& t, const std::vector<double>& y, std::size_t s,
                  std::size_t e) {
  const double n = static_cast<double>(e - s);
  double mt = 0.0, my = 0.0;
  for (std::size_t i = s; i < e; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = s; i < e; ++i) {
    const double a = t[i] - mt, b = y[i] - my;
    stt += a * a;
    sty += a * b;
    syy += b * b;
  }
  if (!(stt > 0.0)) throw FitError("fit_exponential_rate: sample times are not distinct");
  const double slope = sty / stt;
  const double intercept = my - slope * mt;
  double ssr = 0.0;
  for (std::size_t i = s; i < e; ++i) {
    const double r = y[i] - (intercept + slope * t[i]);
    ssr += r * r;
  }
  RateFit fit;
  fit.tau_hat = -slope;
  fit.c_hat = std::exp(intercept);
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  fit.start = s;
  fit.end = e;
  return fit;
}

// Leading run [s, e) of finite samples above the floor.
std::pair<std::size_t, std::size_t> above_floor(const std::vector<double>& v, double floor) {
  std::size_t s = 0;
  while (s < v.size() && !(v[s] > floor && std::isfinite(v[s]))) ++s;
  std::size_t e = s;
  while (e < v.size() && v[e] > floor && std::isfinite(v[e])) ++e;
  return {s, e};
}

std::vector<double> logs(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::log(x); });
  return out;
}

}  // namespace

RateFit fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& norms,
                             std::optional<double> floor) {
  if (times.size() != norms.size()) {
    throw DimensionError("norms", static_cast<long>(times.size()), static_cast<long>(norms.size()));
  }
  if (norms.empty()) throw FitError("insufficient decaying samples");
  const double fl = floor ? *floor : 1e-12 * norms.front();
  const auto [s, e] = above_floor(norms, std::max(fl, 0.0));
  if (e - s < 10) throw FitError("insufficient decaying samples");
  const std::vector<double> y = logs(norms);
  const auto [lo, hi] = std::minmax_element(y.begin() + s, y.begin() + e);
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) {
    throw FitError("insufficient decaying samples");
  }
  RateFit fit = fit_range(times, y, s, e);
  fit.floor = fl;
  return fit;
}

DeviationSeries deviation_series(const ProblemSpec& problem, const Trajectory& traj,
                                 const State& z_ref) {
  problem.check_state(z_ref);
  DeviationSeries s;
  const std::size_t n = traj.size();
  for (auto* v : {&s.dx, &s.dy, &s.dlam, &s.Bdy, &s.Gdy, &s.dz}) v->reserve(n);
  s.t = traj.times;
  const Vec grad_ref = problem.g().gradient(z_ref.y);
  for (const State& z : traj.states) {
    const Vec dx = z.x - z_ref.x;
    const Vec dy = z.y - z_ref.y;
    const Vec dl = z.lam - z_ref.lam;
    s.dx.push_back(dx.norm());
    s.dy.push_back(dy.norm());
    s.dlam.push_back(dl.norm());
    s.Bdy.push_back((problem.B() * dy).norm());
    s.Gdy.push_back((problem.g().gradient(z.y) - grad_ref).norm());
    s.dz.push_back(std::sqrt(dx.squaredNorm() + dy.squaredNorm() + dl.squaredNorm()));
  }
  return s;
}

namespace {

bool starts_at(const std::vector<double>& dz, const State& z_ref) {
  const double scale = 1.0 + z_ref.norm();
  return dz.empty() || dz.front() <= 1e-14 * scale;
}

}  // namespace

ConvergenceReport convergence_report(const ProblemSpec& problem, const Trajectory& traj,
                                     const EquilibriumSet& eq) {
  if (traj.empty()) throw PreconditionError("convergence_report: empty trajectory");
  const State ref = eq.representative();
  const DeviationSeries s = deviation_series(problem, traj, ref);
  ConvergenceReport rep;

  // Distance to the set, not to the representative: a start on the set is trivial.
  const State near = eq.nearest_to(traj.states.front());
  if ((traj.states.front() - near).norm() <= 1e-14 * (1.0 + near.norm())) {
    rep.trivial = true;
    return rep;
  }
  rep.dx = fit_exponential_rate(s.t, s.dx);
  rep.dlam = fit_exponential_rate(s.t, s.dlam);
  rep.Bdy = fit_exponential_rate(s.t, s.Bdy);
  rep.Gdy = fit_exponential_rate(s.t, s.Gdy);
  if (eq.kernel_dim() > 0) {
    std::vector<double> dist;
    dist.reserve(traj.size());
    for (const State& z : traj.states) dist.push_back((z - eq.nearest_to(z)).norm());
    rep.dist_set = fit_exponential_rate(s.t, dist);
    rep.dy_plateau_level = s.dy.back();
    const std::size_t q = s.dy.size() - s.dy.size() / 4 - 1;
    const double ref_level = s.dy[q];
    rep.dy_plateaued = std::abs(s.dy.back() - ref_level) <= 1e-6 * std::max(ref_level, 1e-300);
  }
  return rep;
}

ConvergenceReport convergence_report(const ProblemSpec& problem, const Trajectory& traj,
                                     const State& z_star) {
  if (traj.empty()) throw PreconditionError("convergence_report: empty trajectory");
  const DeviationSeries s = deviation_series(problem, traj, z_star);
  ConvergenceReport rep;
  if (starts_at(s.dz, z_star)) {
    rep.trivial = true;
    return rep;
  }
  rep.dz = fit_exponential_rate(s.t, s.dz);
  return rep;
}

SyncReport check_synchronicity(const ProblemSpec& problem, const StepSizes& nu,
                               const Trajectory& traj, const State& z_star) {
  problem.check_state(z_star);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] != static_cast<double>(i)) {
      throw PreconditionError("check_synchronicity: the run must record every iteration");
    }
  }
  const std::size_t N = traj.size();
  std::vector<double> ex(N), el(N), eby(N), ebg(N);
  const Vec grad_star = problem.g().gradient(z_star.y);
  for (std::size_t i = 0; i < N; ++i) {
    const State& z = traj.states[i];
    ex[i] = (z.x - z_star.x).norm();
    el[i] = (z.lam - z_star.lam).norm();
    eby[i] = (problem.B() * (z.y - z_star.y)).norm();
    ebg[i] = (problem.B() * (problem.g().gradient(z.y) - grad_star)).norm();
  }

  SyncReport rep;
  const double ex_max = N ? *std::max_element(ex.begin(), ex.end()) : 0.0;
  const auto all_zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return a == 0.0; });
  };
  if (ex_max == 0.0 && all_zero(el) && all_zero(eby) && all_zero(ebg)) {
    rep.pass = true;
    return rep;
  }

  const auto [s, e] = above_floor(ex, 1e-12 * ex_max);
  const std::size_t burn = s + (e - s) / 10;
  if (e - burn < 10) throw FitError("check_synchronicity: too few iterations to fit the x rate");
  std::vector<double> it(N);
  for (std::size_t i = 0; i < N; ++i) it[i] = static_cast<double>(i);
  const RateFit fit = fit_range(it, logs(ex), burn, e);
  if (!(fit.tau_hat > 0.0)) {
    throw FitError("check_synchronicity: x is not converging linearly (fitted rate " +
                   std::to_string(fit.tau_hat) + ")");
  }
  const double rate = fit.tau_hat;  // -log vartheta
  rep.vartheta_hat = std::exp(-rate);

  double log_cx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = s; i < e; ++i) log_cx = std::max(log_cx, std::log(ex[i]) + rate * i);
  rep.c_x_hat = std::exp(log_cx);

  const SmoothnessConstants& k = problem.constants();
  const double kappa1 = problem.constraint().kappa1();
  const double normA = problem.constraint().norm_A();
  const double normBBt = problem.constraint().omega();
  rep.c_lam = rep.c_x_hat / std::sqrt(kappa1) * (k.ell + 2.0 / nu.x);
  rep.c_y = rep.c_x_hat * normA + 2.0 * rep.c_lam / nu.lam;
  rep.c_g = rep.c_lam * normBBt + 2.0 * rep.c_y / nu.y;

  // Each bound at i uses the x envelope up to iteration i + 3.
  const auto ratio = [&](double obs, double c, std::size_t i) {
    if (obs == 0.0) return 0.0;
    return std::exp(std::log(obs) - std::log(c) + rate * static_cast<double>(i));
  };
  for (std::size_t i = s; i + 3 < e; ++i) {
    rep.ratio_lam = std::max(rep.ratio_lam, ratio(el[i], rep.c_lam, i));
    rep.ratio_By = std::max(rep.ratio_By, ratio(eby[i], rep.c_y, i));
    rep.ratio_Bgradg = std::max(rep.ratio_Bgradg, ratio(ebg[i], rep.c_g, i));
    ++rep.checked;
  }
  const double lim = 1.0 + 1e-6;
  rep.pass = rep.checked > 0 && rep.ratio_lam <= lim && rep.ratio_By <= lim &&
             rep.ratio_Bgradg <= lim;
  return rep;
}

LyapunovMonitor monitor_lyapunov(const ProblemSpec& problem, const Trajectory& traj,
                                 const Certificate& cert, const State& z_star) {
  problem.check_state(z_star);
  LyapunovMonitor mon;
  const std::size_t n = traj.size();
  if (n == 0) return mon;
  mon.t = traj.times;
  mon.V.reserve(n);
  mon.envelope.reserve(n);
  for (const State& z : traj.states) mon.V.push_back(evaluate_V(cert, z, z_star));

  const double tau = cert.params.tau;
  const double t0 = traj.times.front();
  const double V0 = mon.V.front();
  // Rounding level of the quadratic form near z*.
  const double abs_slack = 1e-28 * cert.P.norm() * (1.0 + z_star.stacked().squaredNorm());
  for (std::size_t j = 0; j < n; ++j) mon.envelope.push_back(V0 * std::exp(-tau * (mon.t[j] - t0)));

  if (V0 <= abs_slack) {
    mon.vacuous = std::all_of(mon.V.begin(), mon.V.end(), [&](double v) { return v <= abs_slack; });
  }

  for (std::size_t j = 0; j < n; ++j) {
    const double env = mon.envelope[j];
    if (mon.V[j] > env * (1.0 + 1e-6) + abs_slack) {
      mon.envelope_ok = false;
      const double excess = env > 0.0 ? mon.V[j] / env - 1.0 : std::numeric_limits<double>::infinity();
      if (mon.worst_envelope_index < 0 || excess > mon.worst_envelope_excess) {
        mon.worst_envelope_excess = excess;
        mon.worst_envelope_index = static_cast<long>(j);
      }
    }
  }

  double h = 0.0;
  for (std::size_t j = 1; j < n; ++j) h = std::max(h, mon.t[j] - mon.t[j - 1]);
  const double L = field_scale(problem);
  mon.derivative_tol = 10.0 * h * h * L * L * L;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double dV = (mon.V[j + 1] - mon.V[j - 1]) / (mon.t[j + 1] - mon.t[j - 1]);
    const double excess = dV - (-tau * mon.V[j] + mon.derivative_tol * (1.0 + mon.V[j]));
    if (excess > 0.0) {
      mon.derivative_ok = false;
      if (mon.worst_derivative_index < 0 || excess > mon.worst_derivative_excess) {
        mon.worst_derivative_excess = excess;
        mon.worst_derivative_index = static_cast<long>(j);
      }
    }
  }
  return mon;
}

LocalPhase detect_local_phase(const Trajectory& traj, const State& z_star) {
  std::vector<double> dz;
  dz.reserve(traj.size());
  for (const State& z : traj.states) dz.push_back((z - z_star).norm());
  if (dz.empty()) throw FitError("no exponential tail detected");
  for (double v : dz) {
    if (!std::isfinite(v)) throw FitError("detect_local_phase: trajectory diverges");
  }
  if (dz.back() > dz.front()) throw FitError("detect_local_phase: trajectory diverges");

  const auto [s, e] = above_floor(dz, 1e-12 * dz.front());
  if (e - s < 10) throw FitError("no exponential tail detected");
  const std::vector<double> y = logs(dz);
  const std::vector<double>& t = traj.times;

  // Suffix statistics accumulated backwards, centred on the last sample to
  // keep the sums well conditioned.
  const double tc = t[e - 1], yc = y[e - 1];
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  std::vector<double> r2(e, -1.0), slope(e, 0.0);
  for (std::size_t i = e; i-- > s;) {
    const double a = t[i] - tc, b = y[i] - yc;
    st += a;
    sy += b;
    stt += a * a;
    sty += a * b;
    syy += b * b;
    const double cnt = static_cast<double>(e - i);
    const double vt = cnt * stt - st * st;
    const double vy = cnt * syy - sy * sy;
    const double cv = cnt * sty - st * sy;
    if (e - i >= 10 && vt > 0.0 && vy > 0.0) {
      r2[i] = cv * cv / (vt * vy);
      slope[i] = cv / vt;
    }
  }
  for (std::size_t i = s; i + 10 <= e; ++i) {
    if (r2[i] >= 0.98 && slope[i] < 0.0) {
      RateFit fit = fit_range(t, y, i, e);
      if (fit.r_squared >= 0.98 && fit.tau_hat > 0.0) {
        fit.floor = 1e-12 * dz.front();
        return LocalPhase{t[i], fit};
      }
    }
  }
  throw FitError("no exponential tail detected");
}

}  // namespace pdgd
