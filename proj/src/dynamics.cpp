#include "pdgd/dynamics.hpp"

#include <cmath>

#include "pdgd/linalg.hpp"

namespace pdgd {

void vector_field_stacked(const ProblemSpec& p, const Vec& z, Vec& out) {
  const Dims d = p.dims();
  if (z.size() != d.total()) throw DimensionError("z", d.total(), z.size());
  const TimeConstants& eta = p.eta();
  const Vec x = z.head(d.n);
  const Vec y = z.segment(d.n, d.m);
  const auto lam = z.tail(d.k);
  out.resize(d.total());
  out.head(d.n) = -eta.x * (p.f().gradient(x) + p.A().transpose() * lam);
  out.segment(d.n, d.m) = -eta.y * (p.g().gradient(y) + p.B().transpose() * lam);
  out.tail(d.k) = eta.lam * (p.A() * x + p.B() * y - p.d());
}

State vector_field(const ProblemSpec& p, const State& z) {
  p.check_state(z);
  Vec out;
  vector_field_stacked(p, z.stacked(), out);
  return State::from_stacked(out, p.dims());
}

double field_scale(const ProblemSpec& p) {
  const SmoothnessConstants& s = p.constants();
  return p.eta().max() *
         (s.ell + std::sqrt(p.constraint().kappa2()) + s.rho + p.constraint().norm_B());
}

double default_time_step(const ProblemSpec& p) { return 0.5 / field_scale(p); }

Trajectory integrate(const ProblemSpec& p, const State& z0, double t_end, double dt,
                     IntegrateOptions options) {
  p.check_state(z0);
  if (!(dt > 0.0)) throw PreconditionError("integrate: dt must be positive");
  if (!(t_end >= dt)) throw PreconditionError("integrate: t_end must be at least dt");
  if (options.sample_every < 1) throw PreconditionError("integrate: sample_every must be >= 1");
  if (!z0.all_finite()) throw PreconditionError("integrate: initial state is not finite");

  const Dims d = p.dims();
  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));

  Trajectory traj;
  traj.integrator = "rk4";
  traj.step = dt;
  traj.seed = options.seed;
  const long expected = steps / options.sample_every + 2;
  traj.times.reserve(expected);
  traj.states.reserve(expected);

  Vec z = z0.stacked();
  Vec k1, k2, k3, k4, tmp;
  traj.times.push_back(0.0);
  traj.states.push_back(z0);
  for (long i = 1; i <= steps; ++i) {
    vector_field_stacked(p, z, k1);
    tmp = z + 0.5 * dt * k1;
    vector_field_stacked(p, tmp, k2);
    tmp = z + 0.5 * dt * k2;
    vector_field_stacked(p, tmp, k3);
    tmp = z + dt * k3;
    vector_field_stacked(p, tmp, k4);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t = static_cast<double>(i) * dt;
    if (!z.allFinite()) {
      throw DivergenceError("integrate: non-finite state at t = " + std::to_string(t) +
                                " (dt too large?)",
                            t);
    }
    if (i % options.sample_every == 0 || i == steps) {
      traj.times.push_back(t);
      traj.states.push_back(State::from_stacked(z, d));
    }
  }
  return traj;
}

Trajectory discrete_run(const ProblemSpec& p, const StepSizes& nu, const State& z0, int iters,
                        int sample_every) {
  p.check_state(z0);
  if (iters < 1) throw PreconditionError("discrete_run: iters must be >= 1");
  if (sample_every < 1) throw PreconditionError("discrete_run: sample_every must be >= 1");

  Trajectory traj;
  traj.integrator = "pdgd-discrete";
  traj.step = nu.x;
  traj.times.push_back(0.0);
  traj.states.push_back(z0);

  State z = z0;
  for (int i = 1; i <= iters; ++i) {
    const LagrangianGradients g = lagrangian_gradients(p, z);
    z.x -= nu.x * g.gx;
    z.y -= nu.y * g.gy;
    z.lam += nu.lam * g.gl;
    if (!z.all_finite()) {
      throw DivergenceError("discrete_run: non-finite iterate at i = " + std::to_string(i), i);
    }
    if (i % sample_every == 0 || i == iters) {
      traj.times.push_back(static_cast<double>(i));
      traj.states.push_back(z);
    }
  }
  return traj;
}

namespace {

Mat averaged_hessian(const ObjectiveOracle& o, const Vec& v, const Vec& v_star,
                     const linalg::QuadratureRule& rule) {
  if (const QuadraticForm* q = o.quadratic_form()) return q->Q;
  const Eigen::Index n = v.size();
  Mat H = Mat::Zero(n, n);
  const Vec dv = v - v_star;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    H += rule.weights[i] * o.hessian(v_star + rule.nodes[i] * dv);
  }
  return linalg::symmetrized(H);
}

}  // namespace

MeanValuePair mean_value_pair(const ProblemSpec& p, const State& z, const State& z_star,
                              int quad_nodes) {
  p.check_state(z);
  p.check_state(z_star);
  const linalg::QuadratureRule rule = linalg::gauss_legendre_unit(quad_nodes);

  MeanValuePair out;
  out.F = averaged_hessian(p.f(), z.x, z_star.x, rule);
  out.G = averaged_hessian(p.g(), z.y, z_star.y, rule);

  const Vec gf = p.f().gradient(z.x);
  const Vec gg = p.g().gradient(z.y);
  out.residual_f = (gf - p.f().gradient(z_star.x) - out.F * (z.x - z_star.x)).norm();
  out.residual_g = (gg - p.g().gradient(z_star.y) - out.G * (z.y - z_star.y)).norm();
  if (out.residual_f > 1e-6 * (1.0 + gf.norm()) || out.residual_g > 1e-6 * (1.0 + gg.norm())) {
    throw ConvergenceError("mean_value_pair: quadrature residual too large with " +
                               std::to_string(quad_nodes) + " nodes; use more nodes",
                           std::max(out.residual_f, out.residual_g));
  }
  return out;
}

Mat assemble_W(const Mat& F, const Mat& G, const ProblemSpec& p) {
  const Dims d = p.dims();
  if (F.rows() != d.n || F.cols() != d.n) throw DimensionError("F", d.n, F.rows());
  if (G.rows() != d.m || G.cols() != d.m) throw DimensionError("G", d.m, G.rows());
  const TimeConstants& eta = p.eta();
  Mat W = Mat::Zero(d.total(), d.total());
  W.block(0, 0, d.n, d.n) = -eta.x * F;
  W.block(0, d.n + d.m, d.n, d.k) = -eta.x * p.A().transpose();
  W.block(d.n, d.n, d.m, d.m) = -eta.y * G;
  W.block(d.n, d.n + d.m, d.m, d.k) = -eta.y * p.B().transpose();
  W.block(d.n + d.m, 0, d.k, d.n) = eta.lam * p.A();
  W.block(d.n + d.m, d.n, d.k, d.m) = eta.lam * p.B();
  return W;
}

}  // namespace pdgd
