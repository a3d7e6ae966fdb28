#include "pdgd/equilibrium.hpp"

#include <cmath>

#include "pdgd/linalg.hpp"

namespace pdgd {

State EquilibriumSet::point(const Vec& w) const {
  if (w.size() != kernel_basis.cols()) throw DimensionError("w", kernel_basis.cols(), w.size());
  return State(x_star, y_base + kernel_basis * w, lam_star);
}

State EquilibriumSet::nearest_to(const State& z) const {
  if (kernel_dim() == 0) return representative();
  return point(kernel_basis.transpose() * (z.y - y_base));
}

Mat kernel_intersection_basis(const Mat& B, const Mat& G, double tol) {
  if (G.rows() != G.cols()) throw PreconditionError("kernel_intersection_basis: G must be square");
  if (B.cols() != G.cols()) throw DimensionError("B columns", G.cols(), B.cols());
  Mat stacked(G.rows() + B.rows(), G.cols());
  stacked << G, B;
  return linalg::null_space(stacked, tol);
}

namespace {

Mat kkt_matrix(const ProblemSpec& p, const Mat& Hf, const Mat& Hg) {
  const Dims d = p.dims();
  Mat K = Mat::Zero(d.total(), d.total());
  K.block(0, 0, d.n, d.n) = Hf;
  K.block(0, d.n + d.m, d.n, d.k) = p.A().transpose();
  K.block(d.n, d.n, d.m, d.m) = Hg;
  K.block(d.n, d.n + d.m, d.m, d.k) = p.B().transpose();
  K.block(d.n + d.m, 0, d.k, d.n) = p.A();
  K.block(d.n + d.m, d.n, d.k, d.m) = p.B();
  return K;
}

Vec stacked_residual(const ProblemSpec& p, const Vec& z) {
  const LagrangianGradients g = lagrangian_gradients(p, State::from_stacked(z, p.dims()));
  Vec r(p.dims().total());
  r << g.gx, g.gy, g.gl;
  return r;
}

double block_residual(const ProblemSpec& p, const State& z) {
  return lagrangian_gradients(p, z).max_norm();
}

}  // namespace

EquilibriumSet solve_kkt_quadratic(const ProblemSpec& p, const KktQuadraticOptions& opts) {
  const QuadraticForm* qf = p.f().quadratic_form();
  const QuadraticForm* qg = p.g().quadratic_form();
  if (!qf || !qg) throw PreconditionError("solve_kkt_quadratic: f and g must be quadratic");
  if (!p.constraint().full_row_rank()) {
    throw PreconditionError("solve_kkt_quadratic: A is not of full row rank");
  }
  const Dims d = p.dims();

  Mat Hg = qg->Q;
  Vec lin_g = qg->q;
  if (opts.proximal_center) {
    if (opts.proximal_center->size() != d.m) {
      throw DimensionError("proximal center", d.m, opts.proximal_center->size());
    }
    Hg += opts.proximal_weight * Mat::Identity(d.m, d.m);
    lin_g -= opts.proximal_weight * *opts.proximal_center;
  }
  const Mat K = kkt_matrix(p, qf->Q, Hg);
  Vec rhs(d.total());
  rhs << -qf->q, -lin_g, p.d();

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  // The regularized system is nonsingular; only the plain one needs a rank cut.
  if (opts.proximal_center) {
    cod.setThreshold(Eigen::Default);
  } else {
    cod.setThreshold(opts.rank_tol);
  }
  Vec z = cod.solve(rhs);
  z += cod.solve(rhs - K * z);  // one step of refinement

  const double scale = 1.0 + rhs.norm() + K.norm() * z.norm();
  if (!z.allFinite() || (K * z - rhs).norm() > 1e-8 * scale) {
    throw InfeasibleError("solve_kkt_quadratic: KKT system is inconsistent (no finite optimum)");
  }

  EquilibriumSet eq;
  eq.x_star = z.head(d.n);
  eq.lam_star = z.tail(d.k);
  eq.kernel_basis = kernel_intersection_basis(p.B(), qg->Q, opts.rank_tol);
  const Vec y = z.segment(d.n, d.m);
  eq.y_base = opts.proximal_center ? y : Vec(y - eq.kernel_basis * (eq.kernel_basis.transpose() * y));
  eq.residual = block_residual(p, eq.representative());
  return eq;
}

KktSolution solve_kkt_generic(const ProblemSpec& p, const State& z0, int max_iter) {
  p.check_state(z0);
  if (max_iter < 1) throw PreconditionError("solve_kkt_generic: max_iter must be >= 1");
  const Dims d = p.dims();

  Vec z = z0.stacked();
  Vec r = stacked_residual(p, z);
  auto block_max = [&](const Vec& res) {
    return std::max({res.head(d.n).norm(), res.segment(d.n, d.m).norm(), res.tail(d.k).norm()});
  };

  for (int it = 0; it < max_iter; ++it) {
    const double res = block_max(r);
    if (res <= 1e-10 * (1.0 + z.norm())) {
      // A few full steps more bring the point to rounding level; keep them
      // only while they help.
      for (int polish = 0; polish < 3; ++polish) {
        const State s = State::from_stacked(z, d);
        const Mat J = kkt_matrix(p, p.f().hessian(s.x), p.g().hessian(s.y));
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
        cod.setThreshold(1e-13);
        const Vec trial = z + cod.solve(-r);
        const Vec r_trial = stacked_residual(p, trial);
        if (!(r_trial.allFinite() && r_trial.norm() < r.norm())) break;
        z = trial;
        r = r_trial;
      }
      const State s = State::from_stacked(z, d);
      return KktSolution{s.x, s.y, s.lam, block_max(r), it};
    }
    const State s = State::from_stacked(z, d);
    const Mat J = kkt_matrix(p, p.f().hessian(s.x), p.g().hessian(s.y));
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
    cod.setThreshold(1e-13);
    const Vec step = cod.solve(-r);

    const double r0 = r.norm();
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= 40; ++bt, t *= 0.5) {
      const Vec trial = z + t * step;
      const Vec r_trial = stacked_residual(p, trial);
      if (r_trial.allFinite() && r_trial.norm() <= (1.0 - 1e-4 * t) * r0) {
        z = trial;
        r = r_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("solve_kkt_generic: line search failed", block_max(r));
    }
  }
  const double res = block_max(r);
  if (res <= 1e-10 * (1.0 + z.norm())) {
    const State s = State::from_stacked(z, d);
    return KktSolution{s.x, s.y, s.lam, res, max_iter};
  }
  throw ConvergenceError("solve_kkt_generic: no convergence after " + std::to_string(max_iter) +
                             " iterations (residual " + std::to_string(res) + ")",
                         res);
}

LocalConditionReport check_local_condition(const ProblemSpec& p, const Vec& y_star) {
  if (y_star.size() != p.dims().m) throw DimensionError("y*", p.dims().m, y_star.size());
  const Mat S = p.B().transpose() * p.B() + p.g().hessian(y_star);
  LocalConditionReport rep;
  rep.min_eig = linalg::min_eig(linalg::symmetrized(S));
  rep.holds = rep.min_eig > 1e-9;
  return rep;
}

}  // namespace pdgd
