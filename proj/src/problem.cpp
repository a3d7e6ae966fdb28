#include "pdgd/problem.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "pdgd/linalg.hpp"
#include "pdgd/random.hpp"

namespace pdgd {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kFiniteDiffTol = 1e-6;
constexpr int kConstructionCheckPoints = 4;

Vec ball_point(NormalStream& rng, Eigen::Index dim, double radius) {
  if (dim == 0) return Vec();
  Vec dir = rng.vector(dim);
  const double nrm = dir.norm();
  if (nrm == 0.0) return Vec::Zero(dim);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return dir * (r / nrm);
}

}  // namespace

SmoothnessConstants::SmoothnessConstants(double mu_, double ell_, double rho_,
                                         std::optional<double> gamma_)
    : mu(mu_), ell(ell_), rho(rho_), gamma(gamma_) {
  if (!(mu > 0.0)) throw PreconditionError("mu must be positive");
  if (!(ell >= mu * (1.0 - 1e-12))) throw PreconditionError("ell must be at least mu");
  if (!(rho >= 0.0)) throw PreconditionError("rho must be nonnegative");
  if (gamma && !(*gamma > 0.0)) throw PreconditionError("gamma must be positive when given");
}

// ---------------------------------------------------------------------------
// ObjectiveOracle

ObjectiveOracle ObjectiveOracle::quadratic(Mat Q, Vec q, double q0) {
  if (Q.rows() != Q.cols()) throw PreconditionError("quadratic form: Q must be square");
  if (q.size() != Q.rows()) throw DimensionError("q", Q.rows(), q.size());
  if (linalg::asymmetry(Q) > kSymmetryTol) throw OracleError("quadratic form: Q is not symmetric");
  ObjectiveOracle o;
  o.dim_ = static_cast<int>(Q.rows());
  o.name_ = "quadratic";
  o.quad_ = std::make_shared<QuadraticForm>(QuadraticForm{linalg::symmetrized(Q), std::move(q), q0});
  return o;
}

ObjectiveOracle ObjectiveOracle::zero(int dim) {
  return quadratic(Mat::Zero(dim, dim), Vec::Zero(dim), 0.0);
}

ObjectiveOracle ObjectiveOracle::quartic(int dim) {
  ObjectiveOracle o = generic(
      dim, "quartic", [](const Vec& v) { return v.array().pow(4).sum(); },
      [](const Vec& v) -> Vec { return 4.0 * v.array().cube().matrix(); },
      [](const Vec& v) -> Mat { return (12.0 * v.array().square()).matrix().asDiagonal(); });
  return o;
}

ObjectiveOracle ObjectiveOracle::generic(int dim, std::string name, EvalFn eval, GradFn grad,
                                         HessFn hess) {
  if (dim < 0) throw PreconditionError("oracle dimension must be nonnegative");
  if (!eval || !grad || !hess) throw PreconditionError("generic oracle needs eval, gradient and Hessian");
  ObjectiveOracle o;
  o.dim_ = dim;
  o.name_ = std::move(name);
  o.eval_ = std::move(eval);
  o.grad_ = std::move(grad);
  o.hess_ = std::move(hess);

  NormalStream rng(derived_seed(0x0A11CE, static_cast<std::uint64_t>(dim)));
  for (int p = 0; p <= kConstructionCheckPoints; ++p) {
    const Vec v = p == 0 ? Vec::Zero(dim) : rng.vector(dim);
    const FiniteDifferenceCheck c = finite_difference_check(o, v);
    if (c.asymmetry > kSymmetryTol) {
      throw OracleError("oracle '" + o.name_ + "': Hessian is not symmetric");
    }
    if (c.gradient_error > kFiniteDiffTol) {
      throw OracleError("oracle '" + o.name_ + "': gradient disagrees with finite differences (" +
                        std::to_string(c.gradient_error) + ")");
    }
    if (c.hessian_error > kFiniteDiffTol) {
      throw OracleError("oracle '" + o.name_ + "': Hessian disagrees with finite differences (" +
                        std::to_string(c.hessian_error) + ")");
    }
  }
  return o;
}

void ObjectiveOracle::check_arg(const Vec& v) const {
  if (v.size() != dim_) throw DimensionError(name_ + " argument", dim_, v.size());
}

double ObjectiveOracle::eval(const Vec& v) const {
  check_arg(v);
  if (quad_) return 0.5 * v.dot(quad_->Q * v) + quad_->q.dot(v) + quad_->q0;
  return eval_(v);
}

Vec ObjectiveOracle::gradient(const Vec& v) const {
  check_arg(v);
  if (quad_) return quad_->Q * v + quad_->q;
  return grad_(v);
}

Mat ObjectiveOracle::hessian(const Vec& v) const {
  check_arg(v);
  if (quad_) return quad_->Q;
  return hess_(v);
}

FiniteDifferenceCheck finite_difference_check(const ObjectiveOracle& oracle, const Vec& v) {
  const Eigen::Index n = v.size();
  const double h = 1e-5 * (1.0 + v.norm());
  const Vec grad = oracle.gradient(v);
  const Mat hess = oracle.hessian(v);
  if (grad.size() != n) throw OracleError("gradient has wrong size");
  if (hess.rows() != n || hess.cols() != n) throw OracleError("Hessian has wrong size");

  Vec fd_grad(n);
  Mat fd_hess(n, n);
  Vec e = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e(i) = h;
    fd_grad(i) = (oracle.eval(v + e) - oracle.eval(v - e)) / (2.0 * h);
    fd_hess.col(i) = (oracle.gradient(v + e) - oracle.gradient(v - e)) / (2.0 * h);
    e(i) = 0.0;
  }
  FiniteDifferenceCheck out;
  out.gradient_error = n == 0 ? 0.0 : (fd_grad - grad).norm() / (1.0 + grad.norm());
  out.hessian_error = n == 0 ? 0.0 : (fd_hess - hess).norm() / (1.0 + hess.norm());
  out.asymmetry = linalg::asymmetry(hess);
  return out;
}

// ---------------------------------------------------------------------------
// EqualityConstraint / ProblemSpec

EqualityConstraint::EqualityConstraint(Mat A, Mat B, Vec d)
    : A_(std::move(A)), B_(std::move(B)), d_(std::move(d)) {
  if (B_.rows() != A_.rows()) throw DimensionError("B rows", A_.rows(), B_.rows());
  if (d_.size() != A_.rows()) throw DimensionError("d", A_.rows(), d_.size());
  if (!A_.allFinite() || !B_.allFinite() || !d_.allFinite()) {
    throw PreconditionError("constraint data must be finite");
  }
  if (A_.rows() > 0) {
    const Vec ev = linalg::eigenvalues(A_ * A_.transpose());
    kappa1_ = std::max(ev(0), 0.0);
    kappa2_ = ev(ev.size() - 1);
  }
  omega_ = B_.size() == 0 ? 0.0 : linalg::max_eig(B_.transpose() * B_);
}

bool EqualityConstraint::full_row_rank() const {
  return k() >= 1 && k() <= n() && kappa1_ > 1e-10 * kappa2_;
}

ProblemSpec::ProblemSpec(ObjectiveOracle f, ObjectiveOracle g, EqualityConstraint constraint,
                         SmoothnessConstants constants, TimeConstants eta)
    : f_(std::move(f)),
      g_(std::move(g)),
      c_(std::move(constraint)),
      constants_(constants),
      eta_(eta) {
  if (f_.dim() != c_.n()) throw DimensionError("f (columns of A)", c_.n(), f_.dim());
  if (g_.dim() != c_.m()) throw DimensionError("g (columns of B)", c_.m(), g_.dim());
}

ProblemSpec ProblemSpec::from_quadratics(ObjectiveOracle f, ObjectiveOracle g,
                                         EqualityConstraint constraint, TimeConstants eta) {
  const SmoothnessConstants s = quadratic_constants(f, g);
  return ProblemSpec(std::move(f), std::move(g), std::move(constraint), s, eta);
}

ProblemSpec ProblemSpec::with_constants(SmoothnessConstants constants) const {
  ProblemSpec p = *this;
  p.constants_ = constants;
  return p;
}

ProblemSpec ProblemSpec::with_eta(TimeConstants eta) const {
  ProblemSpec p = *this;
  p.eta_ = eta;
  return p;
}

void ProblemSpec::check_state(const State& z) const {
  if (z.x.size() != c_.n()) throw DimensionError("x", c_.n(), z.x.size());
  if (z.y.size() != c_.m()) throw DimensionError("y", c_.m(), z.y.size());
  if (z.lam.size() != c_.k()) throw DimensionError("lambda", c_.k(), z.lam.size());
}

SmoothnessConstants quadratic_constants(const ObjectiveOracle& f, const ObjectiveOracle& g) {
  const QuadraticForm* qf = f.quadratic_form();
  const QuadraticForm* qg = g.quadratic_form();
  if (!qf || !qg) throw PreconditionError("quadratic_constants needs quadratic f and g");
  const Vec ef = linalg::eigenvalues(qf->Q);
  if (ef.size() == 0) throw PreconditionError("f must have positive dimension");
  const double rho = qg->Q.size() == 0 ? 0.0 : std::max(0.0, linalg::max_eig(qg->Q));
  return SmoothnessConstants(ef(0), ef(ef.size() - 1), rho);
}

std::optional<double> certified_gamma(const ProblemSpec& problem) {
  if (problem.constants().gamma) return problem.constants().gamma;
  if (problem.dims().m == 0) return std::nullopt;
  const Mat BtB = problem.B().transpose() * problem.B();
  Mat S = BtB;
  if (const QuadraticForm* qg = problem.g().quadratic_form()) S += qg->Q;
  const double lam = linalg::min_eig(S);
  if (lam > 1e-9 * std::max(1.0, linalg::max_eig(S))) return lam;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lagrangian

double lagrangian(const ProblemSpec& problem, const State& z) {
  problem.check_state(z);
  const Vec r = problem.A() * z.x + problem.B() * z.y - problem.d();
  return problem.f().eval(z.x) + problem.g().eval(z.y) + z.lam.dot(r);
}

LagrangianGradients lagrangian_gradients(const ProblemSpec& problem, const State& z) {
  problem.check_state(z);
  LagrangianGradients out;
  out.gx = problem.f().gradient(z.x) + problem.A().transpose() * z.lam;
  out.gy = problem.g().gradient(z.y) + problem.B().transpose() * z.lam;
  out.gl = problem.A() * z.x + problem.B() * z.y - problem.d();
  return out;
}

// ---------------------------------------------------------------------------
// Assumption checks

const char* to_string(Assumption4Status s) {
  switch (s) {
    case Assumption4Status::Verified: return "Verified";
    case Assumption4Status::SampledOnly: return "SampledOnly";
    case Assumption4Status::Failed: return "Failed";
  }
  return "?";
}

namespace {

// (y1 - y2)^T B^T B (y1 - y2) + <grad g(y1) - grad g(y2), y1 - y2>, over |y1 - y2|^2
double assumption4_ratio(const ProblemSpec& p, const Vec& y1, const Vec& y2) {
  const Vec dy = y1 - y2;
  const double den = dy.squaredNorm();
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  const double num = (p.B() * dy).squaredNorm() + (p.g().gradient(y1) - p.g().gradient(y2)).dot(dy);
  return num / den;
}

void check_assumption4(const ProblemSpec& p, int n_samples, NormalStream& rng, double radius,
                       AssumptionReport& rep) {
  const int m = p.dims().m;
  if (m == 0) {
    rep.assumption4 = Assumption4Status::Failed;
    return;
  }
  const Mat BtB = p.B().transpose() * p.B();

  if (const QuadraticForm* qg = p.g().quadratic_form()) {
    const Mat S = BtB + qg->Q;
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const double lam = es.eigenvalues()(0);
    if (lam > 1e-9 * std::max(1.0, es.eigenvalues()(m - 1))) {
      rep.assumption4 = Assumption4Status::Verified;
      rep.gamma_estimate = lam;
    } else {
      rep.assumption4 = Assumption4Status::Failed;
      rep.witnesses.push_back({"assumption4", Vec::Zero(m), es.eigenvectors().col(0), lam});
    }
    return;
  }

  // Generic g: a direction v in ker(B) with v^T hess g(y) v = 0 makes the
  // ratio vanish for pairs (y, y + h v) as h -> 0, so no gamma > 0 exists.
  const Mat N = linalg::null_space(p.B(), 1e-10);
  if (N.cols() > 0) {
    std::vector<Vec> points{Vec::Zero(m)};
    for (int i = 0; i < std::min(n_samples, 20); ++i) points.push_back(ball_point(rng, m, radius));
    for (const Vec& y : points) {
      const Mat H = p.g().hessian(y);
      const Mat R = N.transpose() * H * N;
      Eigen::SelfAdjointEigenSolver<Mat> es(linalg::symmetrized(R));
      if (es.eigenvalues()(0) <= 1e-9 * std::max(1.0, linalg::spectral_norm(H))) {
        const Vec v = N * es.eigenvectors().col(0);
        const double h = 1e-3 * (1.0 + y.norm());
        const Vec y2 = y + h * v;
        rep.assumption4 = Assumption4Status::Failed;
        rep.witnesses.push_back({"assumption4", y, y2, assumption4_ratio(p, y2, y)});
        return;
      }
    }
  }
  double gmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const Vec y1 = ball_point(rng, m, radius);
    const Vec y2 = ball_point(rng, m, radius);
    gmin = std::min(gmin, assumption4_ratio(p, y1, y2));
  }
  rep.assumption4 = Assumption4Status::SampledOnly;
  if (gmin > 0.0 && std::isfinite(gmin)) rep.gamma_estimate = gmin;
}

}  // namespace

AssumptionReport validate_assumptions(const ProblemSpec& p, int n_samples, std::uint64_t seed,
                                      double radius) {
  if (n_samples < 1) throw PreconditionError("validate_assumptions: n_samples must be >= 1");
  const Dims dims = p.dims();
  const EqualityConstraint& c = p.constraint();
  const SmoothnessConstants& sc = p.constants();
  NormalStream rng(seed);
  AssumptionReport rep;
  rep.kappa1 = c.kappa1();
  rep.kappa2 = c.kappa2();

  // Rank: exact, from the eigendecomposition of A A^T.
  rep.full_row_rank = c.full_row_rank();
  if (!rep.full_row_rank && dims.k > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(c.A() * c.A().transpose());
    const Vec v = es.eigenvectors().col(0);
    rep.witnesses.push_back({"full_row_rank", v, c.A().transpose() * v, es.eigenvalues()(0)});
  }
  rep.kappa_bounds_ok = rep.full_row_rank;
  for (int i = 0; i < n_samples && rep.kappa_bounds_ok; ++i) {
    const Vec v = rng.vector(dims.k);
    const double nv = v.squaredNorm();
    const double at = (c.A().transpose() * v).squaredNorm();
    if (at < c.kappa1() * nv * (1.0 - 1e-8) || at > c.kappa2() * nv * (1.0 + 1e-8)) {
      rep.kappa_bounds_ok = false;
      rep.witnesses.push_back({"kappa_bounds", v, c.A().transpose() * v, at / nv});
    }
  }

  // Curvature: inner-product inequalities on sampled pairs; exact
  // eigenvalue bounds in addition when the function is quadratic.
  rep.strong_convexity_ok = true;
  if (const QuadraticForm* qf = p.f().quadratic_form()) {
    const Vec ev = linalg::eigenvalues(qf->Q);
    if (ev(0) < sc.mu * (1.0 - 1e-9) || ev(ev.size() - 1) > sc.ell * (1.0 + 1e-9)) {
      rep.strong_convexity_ok = false;
    }
  }
  for (int i = 0; i < n_samples; ++i) {
    const Vec x1 = ball_point(rng, dims.n, radius);
    const Vec x2 = ball_point(rng, dims.n, radius);
    const Vec dx = x1 - x2;
    const double ip = (p.f().gradient(x1) - p.f().gradient(x2)).dot(dx);
    const double q = dx.squaredNorm();
    const double slack = 1e-9 * (sc.ell * q + std::abs(ip));
    if (ip < sc.mu * q - slack || ip > sc.ell * q + slack) {
      rep.strong_convexity_ok = false;
      rep.witnesses.push_back({"strong_convexity", x1, x2, q > 0 ? ip / q : 0.0});
      break;
    }
  }

  rep.g_smoothness_ok = true;
  if (const QuadraticForm* qg = p.g().quadratic_form(); qg && dims.m > 0) {
    const Vec ev = linalg::eigenvalues(qg->Q);
    const double scale = std::max(1.0, std::abs(ev(ev.size() - 1)));
    if (ev(0) < -1e-9 * scale || ev(ev.size() - 1) > sc.rho + 1e-9 * scale) {
      rep.g_smoothness_ok = false;
    }
  }
  for (int i = 0; i < n_samples && dims.m > 0; ++i) {
    const Vec y1 = ball_point(rng, dims.m, radius);
    const Vec y2 = ball_point(rng, dims.m, radius);
    const Vec dy = y1 - y2;
    const double ip = (p.g().gradient(y1) - p.g().gradient(y2)).dot(dy);
    const double q = dy.squaredNorm();
    const double slack = 1e-9 * (sc.rho * q + std::abs(ip));
    if (ip < -slack || ip > sc.rho * q + slack) {
      rep.g_smoothness_ok = false;
      rep.witnesses.push_back({"g_smoothness", y1, y2, q > 0 ? ip / q : 0.0});
      break;
    }
  }

  check_assumption4(p, n_samples, rng, radius, rep);
  return rep;
}

}  // namespace pdgd
