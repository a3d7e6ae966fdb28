#pragma once

// Test-side re-derivations. Nothing here calls the library's diagnostics or
// linalg helpers; norms come straight from Eigen decompositions.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pdgd/experiments.hpp"
#include "pdgd/lyapunov.hpp"
#include "pdgd/random.hpp"

namespace oracle {

using pdgd::Mat;
using pdgd::Vec;

inline double norm2(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

inline double lmin(const Mat& S) {
  if (S.rows() == 0) return std::numeric_limits<double>::infinity();
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()(0);
}

inline double lmax(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(S.rows() - 1);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Hand-coded scalars; infeasible branches are skipped by the caller.
struct Scalars {
  double c1, c2, c3, s1, p1, min_eig_S1, pi, h1, h2, h3, h4, m2, tau;
};

inline Scalars scalars(const pdgd::ProblemSpec& p, const pdgd::SpectralFactorization* fac,
                       double a, double b) {
  const Mat& A = p.A();
  const Mat& B = p.B();
  const double ex = p.eta().x, ey = p.eta().y, el = p.eta().lam;
  const double mu = p.constants().mu, ell = p.constants().ell, rho = p.constants().rho;
  const double k1 = lmin(A * A.transpose()), k2 = lmax(A * A.transpose());
  const double om = B.size() ? lmax(B.transpose() * B) : 0.0;

  Scalars s{};
  s.tau = b * b / a;
  s.c1 = 2 * ex / el * k1 - 2 * ey / el * b * om - b * b / el;
  const double w = ex * ell + b * b / a;
  s.c2 = 2 * a * mu - 2 * k2 - b * b / ex - k2 / (s.c1 * el * el) * w * w;
  s.s1 = a / el - ex / (a * el * el) * k2;
  s.p1 = s.s1 - ey * b * b / (a * el * el) * norm2(B * B.transpose());
  const auto gam = pdgd::certified_gamma(p);
  const double v = b * b / a + ey * rho;
  s.c3 = gam ? 2 * *gam - b / ey - b * om / (s.c1 * el * el) * v * v : 0.0;
  s.m2 = norm2(A.transpose() * B) * (1 + b / (s.c1 * el * el) * w * v);
  if (fac) {
    const Mat& T = fac->T;
    const Mat S = fac->sigma.asDiagonal();
    const Mat TT = T * T.transpose();
    s.pi = lmin(S + TT);
    s.min_eig_S1 = a / ey - b * b * norm2(TT) / (s.s1 * el * el);
    s.h1 = 2 * s.pi - b / ey;
    const double ba = b * b / a;
    s.h2 = b / (s.c1 * el * el) *
           (ba * ba * norm2(TT) + ey * ey * norm2(S * TT * S) + ey * ba * norm2(S * TT + TT * S));
    const double root = norm2(T * A) + b / (s.c1 * el * el) * norm2(A) * w *
                                           (ba * norm2(T) + ey * norm2(B * fac->U * S));
    s.h3 = root * root;
    s.h4 = b * (s.h1 - s.h2) - s.h3 / s.c2;
  }
  return s;
}

// W by hand, block by block.
inline Mat W(const Mat& F, const Mat& G, const pdgd::ProblemSpec& p) {
  const auto d = p.dims();
  const auto& e = p.eta();
  Mat out = Mat::Zero(d.total(), d.total());
  out.block(0, 0, d.n, d.n) = -e.x * F;
  out.block(0, d.n + d.m, d.n, d.k) = -e.x * p.A().transpose();
  out.block(d.n, d.n, d.m, d.m) = -e.y * G;
  out.block(d.n, d.n + d.m, d.m, d.k) = -e.y * p.B().transpose();
  out.block(d.n + d.m, 0, d.k, d.n) = e.lam * p.A();
  out.block(d.n + d.m, d.n, d.k, d.m) = e.lam * p.B();
  return out;
}

// Small random instances for property checks.
inline pdgd::ProblemSpec small_quadratic(std::uint64_t seed, int n = 6, int m = 5, int k = 3,
                                         int rg = 3, pdgd::TimeConstants eta = {}) {
  pdgd::ExperimentConfig c;
  c.n = n;
  c.m = m;
  c.k = k;
  c.r_G = rg;
  c.seed = seed;
  c.eta = eta;
  return pdgd::generate_instance(c);
}

inline pdgd::ProblemSpec small_quartic(std::uint64_t seed, int n = 6, int m = 3, int k = 4,
                                       pdgd::TimeConstants eta = {}) {
  pdgd::ExperimentConfig c;
  c.recipe = pdgd::Recipe::QuarticV_B;
  c.n = n;
  c.m = m;
  c.k = k;
  c.seed = seed;
  c.eta = eta;
  return pdgd::generate_instance(c);
}

// 1-d toy: f = x^2/2 (or scaled), g = 0 on R^m, A = a, B = b, d.
inline pdgd::ProblemSpec scalar(double fq, int m, double a, double b, double d,
                                pdgd::TimeConstants eta = {}) {
  using namespace pdgd;
  Mat Bm = Mat::Constant(1, m, b);
  return ProblemSpec::from_quadratics(ObjectiveOracle::quadratic(Mat::Constant(1, 1, fq), Vec::Zero(1)),
                                      ObjectiveOracle::zero(m),
                                      EqualityConstraint(Mat::Constant(1, 1, a), Bm, Vec::Constant(1, d)),
                                      eta);
}

}  // namespace oracle
