#include "pdgd/lyapunov.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "pdgd/dynamics.hpp"
#include "pdgd/linalg.hpp"
#include "pdgd/random.hpp"

namespace pdgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double min_eig_or_inf(const Mat& S) { return S.rows() == 0 ? kInf : linalg::min_eig(S); }

}  // namespace

const char* to_string(CertificateKind kind) { return kind == CertificateKind::P1 ? "P1" : "P2"; }

CertificateKind certificate_kind_from_string(const std::string& s) {
  std::string u = s;
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "P1") return CertificateKind::P1;
  if (u == "P2") return CertificateKind::P2;
  throw PreconditionError("unknown certificate kind '" + s + "' (expected p1 or p2)");
}

// ---------------------------------------------------------------------------
// Factorization

SpectralFactorization build_spectral_factorization(const Mat& G, const Mat& B, double tol) {
  if (G.rows() != G.cols()) throw PreconditionError("build_spectral_factorization: G must be square");
  if (B.cols() != G.cols()) throw DimensionError("B columns", G.cols(), B.cols());
  const Eigen::Index m = G.rows();
  const Eigen::Index k = B.rows();

  SpectralFactorization out;
  if (m == 0) {
    out.U = Mat(0, 0);
    out.sigma = Vec(0);
    out.T = Mat(0, k);
    out.kernel = Mat(0, 0);
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(linalg::symmetrized(G));
  const Vec& ev = es.eigenvalues();
  const double gnorm = std::max(std::abs(ev(0)), std::abs(ev(m - 1)));
  if (ev(0) < -tol * std::max(1.0, gnorm)) {
    std::ostringstream msg;
    msg << "build_spectral_factorization: G is not positive semidefinite (eigenvalue " << ev(0)
        << ")";
    throw CertificateError(msg.str());
  }

  std::vector<Eigen::Index> pos, zero;
  for (Eigen::Index i = m - 1; i >= 0; --i) {
    (gnorm > 0.0 && ev(i) > tol * gnorm ? pos : zero).push_back(i);
  }
  const Eigen::Index l = static_cast<Eigen::Index>(pos.size());
  Mat U1(m, l), Z(m, static_cast<Eigen::Index>(zero.size()));
  Vec s1(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    U1.col(j) = es.eigenvectors().col(pos[j]);
    s1(j) = ev(pos[j]);
  }
  for (Eigen::Index j = 0; j < Z.cols(); ++j) Z.col(j) = es.eigenvectors().col(zero[j]);

  // Split ker(G) into the part B sees (r columns) and ker(G) with ker(B) intersected.
  Eigen::Index r = 0;
  Mat U2(m, 0), N = Z;
  const double bnorm = linalg::spectral_norm(B);
  if (Z.cols() > 0 && k > 0 && bnorm > 0.0) {
    const Mat R = Z.transpose() * B.transpose();
    Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > tol * bnorm) ++r;
    }
    const Mat Zrot = Z * svd.matrixU();
    U2 = Zrot.leftCols(r);
    N = Zrot.rightCols(Z.cols() - r);
  }

  out.l = static_cast<int>(l);
  out.r = static_cast<int>(r);
  out.U.resize(m, l + r);
  out.U << U1, U2;
  out.sigma = Vec::Zero(l + r);
  out.sigma.head(l) = s1;
  out.T = out.U.transpose() * B.transpose();
  out.kernel = N;
  return out;
}

// ---------------------------------------------------------------------------
// Parameters and diagnostics

CertificateParams CertificateParams::make(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw PreconditionError("certificate: alpha must be positive and finite");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("certificate: beta must lie in (0, 1)");
  return CertificateParams{alpha, beta, beta * beta / alpha};
}

bool CertificateDiagnostics::all_ok() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.ok; });
}

const Condition* CertificateDiagnostics::first_violation() const {
  for (const Condition& c : conditions) {
    if (!c.ok) return &c;
  }
  return nullptr;
}

CertificateConstants certificate_constants(const ProblemSpec& problem,
                                           const SpectralFactorization* fac) {
  CertificateConstants c;
  const SmoothnessConstants& s = problem.constants();
  const EqualityConstraint& con = problem.constraint();
  c.eta = problem.eta();
  c.mu = s.mu;
  c.ell = s.ell;
  c.rho = s.rho;
  c.kappa1 = con.kappa1();
  c.kappa2 = con.kappa2();
  c.omega = con.omega();
  c.gamma = certified_gamma(problem);
  c.m = problem.dims().m;
  c.norm_A = con.norm_A();
  c.norm_AtB = linalg::spectral_norm(problem.A().transpose() * problem.B());
  c.norm_BBt = con.omega();

  if (fac) {
    c.has_factorization = true;
    c.u_cols = static_cast<int>(fac->U.cols());
    const Mat& T = fac->T;
    const Mat S = fac->Sigma();
    const Mat TTt = T * T.transpose();
    c.pi = min_eig_or_inf(S + TTt);
    c.norm_TTt = linalg::spectral_norm(TTt);
    c.norm_STTS = linalg::spectral_norm(S * TTt * S);
    c.norm_STT_sym = linalg::spectral_norm(S * TTt + TTt * S);
    c.norm_TA = linalg::spectral_norm(T * problem.A());
    c.norm_T = linalg::spectral_norm(T);
    c.norm_BUS = linalg::spectral_norm(problem.B() * fac->U * S);
    c.norm_TtT = linalg::spectral_norm(T.transpose() * T);
  }
  return c;
}

CertificateDiagnostics compute_diagnostics(const CertificateConstants& k, CertificateKind kind,
                                           double alpha, double beta) {
  const double ex = k.eta.x, ey = k.eta.y, el = k.eta.lam;
  const double el2 = el * el;
  const double b2 = beta * beta;
  const double b2a = b2 / alpha;

  CertificateDiagnostics d;
  auto add = [&](const char* name, double value) {
    d.conditions.push_back(Condition{name, value, value > 0.0});
  };

  d.c1 = 2.0 * (ex / el) * k.kappa1 - 2.0 * (ey / el) * beta * k.omega - b2 / el;
  const bool c1_ok = d.c1 > 0.0;
  const double inv_c1 = c1_ok ? 1.0 / (d.c1 * el2) : kInf;

  const double gx = ex * k.ell + b2a;
  d.c2 = c1_ok ? 2.0 * alpha * k.mu - 2.0 * k.kappa2 - b2 / ex - k.kappa2 * inv_c1 * gx * gx : -kInf;
  const bool c2_ok = d.c2 > 0.0;

  d.s1 = alpha / el - (ex / (alpha * el2)) * k.kappa2;
  d.p1 = d.s1 - (ey * b2 / (alpha * el2)) * k.norm_BBt;

  add("c1", d.c1);
  add("c2", d.c2);

  if (kind == CertificateKind::P1) {
    if (!k.has_factorization) {
      throw PreconditionError("compute_diagnostics: P1 needs the spectral factorization");
    }
    d.pi = k.pi;
    d.min_eig_S1 = d.s1 > 0.0 ? alpha / ey - (b2 / (d.s1 * el2)) * k.norm_TTt : -kInf;
    d.h1 = 2.0 * d.pi - beta / ey;
    if (c1_ok) {
      d.h2 = beta * inv_c1 *
             (b2a * b2a * k.norm_TTt + ey * ey * k.norm_STTS + ey * b2a * k.norm_STT_sym);
      const double root =
          k.norm_TA + beta * inv_c1 * k.norm_A * gx * (b2a * k.norm_T + ey * k.norm_BUS);
      d.h3 = root * root;
    } else {
      d.h2 = kInf;
      d.h3 = kInf;
    }
    const double h3_over_c2 = c2_ok ? d.h3 / d.c2 : kInf;
    d.h4 = beta * (d.h1 - d.h2) - h3_over_c2;

    add("h1-h2-beta", d.h1 - d.h2 - beta);
    add("beta^2-h3/c2", b2 - h3_over_c2);
    add("h4", d.h4);
    add("s1", d.s1);
    add("min_eig_S1", d.min_eig_S1);
    add("alpha/eta_x-kappa2/eta_lam^2", alpha / ex - k.kappa2 / el2);
    add("alpha/eta_y-beta^2/eta_lam^2", alpha / ey - b2 / el2);
    add("alpha/eta_lam-1-|T^T T|", alpha / el - 1.0 - k.norm_TtT);
  } else {
    const double inv_c2 = c2_ok ? 1.0 / d.c2 : kInf;
    add("beta^2-1/c2", b2 - inv_c2);
    add("p1", d.p1);
    if (k.m > 0) {
      const double gy = b2a + ey * k.rho;
      if (!k.gamma) {
        d.c3 = -kInf;
      } else {
        d.c3 = c1_ok ? 2.0 * *k.gamma - beta / ey - beta * k.omega * inv_c1 * gy * gy : -kInf;
      }
      d.m2_bound = c1_ok ? k.norm_AtB * (1.0 + beta * inv_c1 * gx * gy) : kInf;
      add("c3", d.c3);
      add("c3-beta*|M2|^2", d.c3 - beta * d.m2_bound * d.m2_bound);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Certificate assembly

namespace {

void check_params(const CertificateParams& p) {
  const CertificateParams ref = CertificateParams::make(p.alpha, p.beta);
  if (ref.tau != p.tau) throw PreconditionError("certificate: tau must equal beta^2 / alpha");
}

Mat assemble_P(const ProblemSpec& problem, CertificateKind kind, const CertificateParams& prm,
               const SpectralFactorization* fac) {
  const Dims d = problem.dims();
  const TimeConstants& eta = problem.eta();
  Mat P = Mat::Zero(d.total(), d.total());
  P.block(0, 0, d.n, d.n) = (prm.alpha / eta.x) * Mat::Identity(d.n, d.n);
  if (kind == CertificateKind::P1) {
    P.block(d.n, d.n, d.m, d.m) = (prm.alpha / eta.y) * (fac->U * fac->U.transpose());
  } else {
    P.block(d.n, d.n, d.m, d.m) = (prm.alpha / eta.y) * Mat::Identity(d.m, d.m);
  }
  P.block(d.n + d.m, d.n + d.m, d.k, d.k) = (prm.alpha / eta.lam) * Mat::Identity(d.k, d.k);
  const Mat At = problem.A().transpose() / eta.lam;
  const Mat Bt = -(prm.beta / eta.lam) * problem.B().transpose();
  P.block(0, d.n + d.m, d.n, d.k) = At;
  P.block(d.n + d.m, 0, d.k, d.n) = At.transpose();
  P.block(d.n, d.n + d.m, d.m, d.k) = Bt;
  P.block(d.n + d.m, d.n, d.k, d.m) = Bt.transpose();
  return P;
}

const Mat& quadratic_G(const ProblemSpec& problem) {
  const QuadraticForm* qg = problem.g().quadratic_form();
  if (!qg) throw CertificateError("P1 certificate requires a quadratic g");
  return qg->Q;
}

}  // namespace

Certificate build_certificate(const ProblemSpec& problem, CertificateKind kind,
                              const CertificateParams& params) {
  check_params(params);
  std::optional<SpectralFactorization> fac;
  if (kind == CertificateKind::P1) {
    fac = build_spectral_factorization(quadratic_G(problem), problem.B());
  }
  Certificate cert{kind, assemble_P(problem, kind, params, fac ? &*fac : nullptr), params, fac, {}};
  const CertificateConstants k = certificate_constants(problem, fac ? &*fac : nullptr);
  cert.diagnostics = compute_diagnostics(k, kind, params.alpha, params.beta);
  cert.diagnostics.min_eig_P = linalg::min_eig(cert.P);
  return cert;
}

// ---------------------------------------------------------------------------
// Search

CertificateParams search_parameters(const ProblemSpec& problem, CertificateKind kind,
                                    const SearchOptions& opt) {
  if (opt.beta_min_exponent < 1 || opt.beta_max_exponent < opt.beta_min_exponent) {
    throw PreconditionError("search_parameters: invalid beta exponent range");
  }
  std::optional<SpectralFactorization> fac;
  if (kind == CertificateKind::P1) {
    fac = build_spectral_factorization(quadratic_G(problem), problem.B());
  }
  const CertificateConstants k = certificate_constants(problem, fac ? &*fac : nullptr);
  const TimeConstants& eta = problem.eta();

  // Every condition improves monotonically in alpha, so feasibility of a
  // beta is decided at a very large alpha.
  constexpr double kAlphaLimit = 1e150;
  const double alpha0 = std::max({eta.x * k.ell, eta.lam, 1.0});
  auto feasible = [&](double a, double b) { return compute_diagnostics(k, kind, a, b).all_ok(); };

  std::optional<CertificateParams> best;
  for (int e = opt.beta_min_exponent; e <= opt.beta_max_exponent; ++e) {
    const double beta = std::ldexp(1.0, -e);
    if (!feasible(kAlphaLimit, beta)) continue;
    double hi = alpha0;
    double lo = 0.0;
    while (!feasible(hi, beta)) {
      lo = hi;
      hi *= 2.0;
      if (hi > kAlphaLimit) break;
    }
    if (hi > kAlphaLimit) continue;
    if (lo > 0.0) {
      for (int i = 0; i < opt.bisection_steps && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid, beta) ? hi : lo) = mid;
      }
    }
    const CertificateParams cand = CertificateParams::make(hi, beta);
    if (!best || cand.tau > best->tau) best = cand;
  }
  if (best) return *best;

  const double beta = std::ldexp(1.0, -opt.beta_max_exponent);
  const CertificateDiagnostics diag = compute_diagnostics(k, kind, kAlphaLimit, beta);
  std::ostringstream msg;
  msg << "search_parameters(" << to_string(kind) << "): no feasible (alpha, beta) for beta in [2^-"
      << opt.beta_max_exponent << ", 2^-" << opt.beta_min_exponent << "]; violated at beta = " << beta
      << ", alpha -> inf:";
  for (const Condition& c : diag.conditions) {
    if (!c.ok) msg << ' ' << c.name << " = " << c.value << ';';
  }
  throw CertificateError(msg.str());
}

// ---------------------------------------------------------------------------
// Decrease matrix

QAssembly assemble_Q(const ProblemSpec& problem, const Certificate& cert, const Mat& F,
                     const Mat& G) {
  const Dims d = problem.dims();
  const TimeConstants& eta = problem.eta();
  const double a = cert.params.alpha, b = cert.params.beta, tau = cert.params.tau;
  const Mat W = assemble_W(F, G, problem);
  const Mat& P = cert.P;
  if (P.rows() != d.total()) throw DimensionError("P", d.total(), P.rows());

  QAssembly q;
  q.Q = linalg::symmetrized(-W.transpose() * P - P * W - tau * P);

  const Mat& A = problem.A();
  const Mat& B = problem.B();
  const Mat In = Mat::Identity(d.n, d.n);
  const Mat Im = Mat::Identity(d.m, d.m);
  const Mat Ik = Mat::Identity(d.k, d.k);
  q.Qx = 2.0 * a * F - 2.0 * A.transpose() * A - (b * b / eta.x) * In;
  q.Qxy = (b - 1.0) * A.transpose() * B;
  q.Qxlam = (eta.x / eta.lam) * F * A.transpose() - (b * b / (a * eta.lam)) * A.transpose();
  if (cert.kind == CertificateKind::P1) {
    const Mat UUt = cert.factorization->U * cert.factorization->U.transpose();
    q.Qy = 2.0 * a * G + 2.0 * b * B.transpose() * B - (b * b / eta.y) * UUt;
  } else {
    q.Qy = 2.0 * a * G + 2.0 * b * B.transpose() * B - (b * b / eta.y) * Im;
  }
  q.Qylam = (b * b * b / (a * eta.lam)) * B.transpose() - (b * eta.y / eta.lam) * G * B.transpose();
  q.Qlam = 2.0 * (eta.x / eta.lam) * A * A.transpose() -
           2.0 * (b * eta.y / eta.lam) * B * B.transpose() - (b * b / eta.lam) * Ik;

  Mat Qb = Mat::Zero(d.total(), d.total());
  Qb.block(0, 0, d.n, d.n) = q.Qx;
  Qb.block(d.n, d.n, d.m, d.m) = q.Qy;
  Qb.block(d.n + d.m, d.n + d.m, d.k, d.k) = q.Qlam;
  Qb.block(0, d.n, d.n, d.m) = q.Qxy;
  Qb.block(d.n, 0, d.m, d.n) = q.Qxy.transpose();
  Qb.block(0, d.n + d.m, d.n, d.k) = q.Qxlam;
  Qb.block(d.n + d.m, 0, d.k, d.n) = q.Qxlam.transpose();
  Qb.block(d.n, d.n + d.m, d.m, d.k) = q.Qylam;
  Qb.block(d.n + d.m, d.n, d.k, d.m) = q.Qylam.transpose();

  q.mismatch = (Qb - q.Q).norm();
  q.scale = W.norm() * P.norm();
  if (q.mismatch > 1e-9 * q.scale) {
    std::ostringstream msg;
    msg << "assemble_Q: block forms disagree with -W^T P - P W - tau P (mismatch " << q.mismatch
        << ", scale " << q.scale << ")";
    throw ConsistencyError(msg.str());
  }
  return q;
}

SchurRoute schur_route(const QAssembly& q) {
  const Eigen::Index n = q.Qx.rows(), m = q.Qy.rows(), k = q.Qlam.rows();
  SchurRoute out;
  out.min_eig_lam = min_eig_or_inf(q.Qlam);

  Mat top(n + m, n + m);
  top << q.Qx, q.Qxy, q.Qxy.transpose(), q.Qy;
  Mat S = top;
  if (k > 0) {
    Mat C(n + m, k);
    C << q.Qxlam, q.Qylam;
    S -= C * q.Qlam.ldlt().solve(C.transpose());
  }
  S = linalg::symmetrized(S);
  const Mat Sx = S.topLeftCorner(n, n);
  out.min_eig_x = min_eig_or_inf(Sx);
  Mat Sy = S.bottomRightCorner(m, m);
  if (n > 0 && m > 0) {
    const Mat Sxy = S.topRightCorner(n, m);
    Sy -= Sxy.transpose() * Sx.ldlt().solve(Sxy);
  }
  out.min_eig_y = min_eig_or_inf(linalg::symmetrized(Sy));
  return out;
}

// ---------------------------------------------------------------------------
// Verification

PositivityReport verify_positivity(const Mat& P, bool require_definite) {
  if (P.rows() != P.cols()) throw PreconditionError("verify_positivity: matrix must be square");
  PositivityReport rep;
  const Vec ev = linalg::eigenvalues(P);
  if (ev.size() == 0) {
    rep.pass = true;
    return rep;
  }
  rep.min_eig = ev(0);
  rep.max_eig = ev(ev.size() - 1);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 1e-8 * rep.max_eig) ++rep.zero_count;
  }
  rep.pass = require_definite ? rep.min_eig > 1e-10 * rep.max_eig
                              : rep.min_eig >= -1e-8 * rep.max_eig;
  return rep;
}

PositivityReport verify_positivity(const Certificate& cert) {
  if (cert.kind == CertificateKind::P2) return verify_positivity(cert.P, true);

  PositivityReport rep = verify_positivity(cert.P, false);
  const Mat& N = cert.factorization->kernel;
  const Eigen::Index q = N.cols();
  rep.expected_zeros = static_cast<int>(q);
  // Kernel states: zero in x and lam, y along ker(G) and ker(B) intersected.
  const Eigen::Index total = cert.P.rows();
  const Eigen::Index m = N.rows();
  const Eigen::Index nx = total - m - cert.factorization->T.cols();
  for (Eigen::Index j = 0; j < q; ++j) {
    Vec v = Vec::Zero(total);
    v.segment(nx, m) = N.col(j);
    rep.null_residual = std::max(rep.null_residual, (cert.P * v).norm());
  }
  const double scale = std::max(rep.max_eig, std::numeric_limits<double>::min());
  rep.null_residual /= scale;

  const Vec ev = linalg::eigenvalues(cert.P);
  const bool next_positive = q >= ev.size() || ev(q) > 1e-8 * rep.max_eig;
  rep.pass = rep.pass && rep.zero_count == q && rep.null_residual <= 1e-8 && next_positive;
  return rep;
}

std::pair<double, double> decrease_at(const ProblemSpec& problem, const Certificate& cert,
                                      const Mat& F, const Mat& G) {
  const QAssembly q = assemble_Q(problem, cert, F, G);
  const Vec ev = linalg::eigenvalues(q.Q);
  if (ev.size() == 0) return {0.0, 0.0};
  return {ev(0), std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)))};
}

namespace {

int resolve_threads(int requested, int work) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("PDGD_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, std::max(1, work));
}

}  // namespace

DecreaseReport verify_decrease_sampled(const ProblemSpec& problem, const Certificate& cert,
                                       int n_samples, std::uint64_t seed, int threads) {
  if (n_samples < 1) throw PreconditionError("verify_decrease_sampled: n_samples must be >= 1");
  const Dims d = problem.dims();
  const SmoothnessConstants& s = problem.constants();
  const QuadraticForm* qg = problem.g().quadratic_form();
  if (cert.kind == CertificateKind::P1 && !qg) {
    throw CertificateError("verify_decrease_sampled: P1 certificate requires a quadratic g");
  }

  std::vector<std::pair<double, double>> results(static_cast<std::size_t>(n_samples));
  auto work = [&](int first, int stride) {
    for (int i = first; i < n_samples; i += stride) {
      NormalStream rng(derived_seed(seed, static_cast<std::uint64_t>(i)));
      const Mat F = random_symmetric_with_spectrum(d.n, s.mu, s.ell, rng);
      const Mat G = qg ? qg->Q : random_symmetric_with_spectrum(d.m, 0.0, s.rho, rng);
      results[static_cast<std::size_t>(i)] = decrease_at(problem, cert, F, G);
    }
  };

  const int nt = resolve_threads(threads, n_samples);
  if (nt == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, nt);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  DecreaseReport rep;
  rep.n_samples = n_samples;
  rep.min_eig = kInf;
  for (int i = 0; i < n_samples; ++i) {
    const auto& [lo, sc] = results[static_cast<std::size_t>(i)];
    if (lo < rep.min_eig) {
      rep.min_eig = lo;
      rep.worst_sample = i;
    }
    rep.max_scale = std::max(rep.max_scale, sc);
  }
  rep.pass = rep.min_eig >= -1e-8 * rep.max_scale;
  return rep;
}

double evaluate_V(const Certificate& cert, const State& z, const State& z_star) {
  const Vec dz = z.stacked() - z_star.stacked();
  if (dz.size() != cert.P.rows()) throw DimensionError("state", cert.P.rows(), dz.size());
  return dz.dot(cert.P * dz);
}

}  // namespace pdgd
