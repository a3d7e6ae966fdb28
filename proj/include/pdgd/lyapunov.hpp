#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdgd/problem.hpp"

namespace pdgd {

enum class CertificateKind { P1, P2 };

const char* to_string(CertificateKind kind);
CertificateKind certificate_kind_from_string(const std::string& s);

/// Eigen-basis of G adapted to B: the first l columns of U span range(G)
/// (eigenvalues sigma > 0), the next r span the part of ker(G) seen by B.
/// Then G = U Sigma U^T, B^T = U T, and `kernel` completes U to an
/// orthonormal basis of R^m with ker(G) and ker(B) intersected.
struct SpectralFactorization {
  Mat U;
  Vec sigma;  // length l + r, last r entries zero
  Mat T;      // (l + r) x k
  Mat kernel;
  int l = 0;
  int r = 0;

  Mat Sigma() const { return sigma.asDiagonal(); }
};

/// Throws CertificateError if G has an eigenvalue below -tol max(1, |G|).
SpectralFactorization build_spectral_factorization(const Mat& G, const Mat& B, double tol = 1e-10);

/// alpha > 0, 0 < beta < 1, tau = beta^2 / alpha.
struct CertificateParams {
  double alpha;
  double beta;
  double tau;

  static CertificateParams make(double alpha, double beta);
};

struct Condition {
  std::string name;
  double value;  // margin; the condition holds iff ok
  bool ok;
};

/// Closed-form scalars that make the blockwise Schur-complement argument go
/// through. `pi` is the smallest eigenvalue of Sigma + T T^T, `m2_bound`
/// bounds |M2| uniformly over admissible F, G (used by P2 only).
struct CertificateDiagnostics {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double s1 = 0.0;
  double min_eig_S1 = 0.0;
  double p1 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
  double h4 = 0.0;
  double pi = 0.0;
  double m2_bound = 0.0;
  double min_eig_P = std::numeric_limits<double>::quiet_NaN();
  double min_eig_Q_samples = std::numeric_limits<double>::quiet_NaN();
  std::vector<Condition> conditions;

  bool all_ok() const;
  /// First failing condition, if any.
  const Condition* first_violation() const;
};

/// Problem data entering the closed-form conditions. Norms are spectral.
struct CertificateConstants {
  TimeConstants eta;
  double mu = 0.0;
  double ell = 0.0;
  double rho = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double omega = 0.0;
  std::optional<double> gamma;
  int m = 0;
  double norm_A = 0.0;
  double norm_AtB = 0.0;
  double norm_BBt = 0.0;
  // From the spectral factorization (P1 only).
  bool has_factorization = false;
  int u_cols = 0;
  double pi = 0.0;
  double norm_TTt = 0.0;
  double norm_STTS = 0.0;
  double norm_STT_sym = 0.0;  // |Sigma T T^T + T T^T Sigma|
  double norm_TA = 0.0;
  double norm_T = 0.0;
  double norm_BUS = 0.0;
  double norm_TtT = 0.0;
};

CertificateConstants certificate_constants(const ProblemSpec& problem,
                                           const SpectralFactorization* factorization);

/// Evaluates every scalar and the list of named conditions for the given kind.
CertificateDiagnostics compute_diagnostics(const CertificateConstants& constants,
                                           CertificateKind kind, double alpha, double beta);

struct Certificate {
  CertificateKind kind;
  Mat P;
  CertificateParams params;
  std::optional<SpectralFactorization> factorization;
  CertificateDiagnostics diagnostics;
};

/// Assembles P1 (needs quadratic g) or P2 and fills the diagnostics,
/// including min_eig_P.
Certificate build_certificate(const ProblemSpec& problem, CertificateKind kind,
                              const CertificateParams& params);

struct SearchOptions {
  int beta_min_exponent = 1;
  int beta_max_exponent = 40;
  int bisection_steps = 60;
};

/// Geometric grid beta = 2^-e; for each beta with all beta-conditions
/// satisfiable, the smallest alpha (doubling from max(eta_x ell, eta_lam, 1),
/// then bisection) meeting every condition. Returns the pair with the
/// largest tau. Throws CertificateError naming a violated condition if no
/// grid point works.
CertificateParams search_parameters(const ProblemSpec& problem, CertificateKind kind,
                                    const SearchOptions& options = {});

/// -W^T P - P W - tau P together with its printed block forms.
struct QAssembly {
  Mat Q;
  Mat Qx;
  Mat Qy;
  Mat Qlam;
  Mat Qxy;
  Mat Qxlam;
  Mat Qylam;
  double mismatch = 0.0;
  double scale = 0.0;
};

/// Throws ConsistencyError if the block forms and the direct product differ
/// by more than 1e-9 * |W| |P| (Frobenius).
QAssembly assemble_Q(const ProblemSpec& problem, const Certificate& cert, const Mat& F,
                     const Mat& G);

/// Minimum eigenvalues along the two-step Schur route: Q_lam, then the
/// x block of the first complement, then the remaining y block.
struct SchurRoute {
  double min_eig_lam = 0.0;
  double min_eig_x = 0.0;
  double min_eig_y = 0.0;

  bool psd(double tol) const { return min_eig_lam > 0 && min_eig_x > 0 && min_eig_y >= -tol; }
};

SchurRoute schur_route(const QAssembly& q);

struct PositivityReport {
  double min_eig = 0.0;
  double max_eig = 0.0;
  int zero_count = 0;        // eigenvalues at or below 1e-8 max_eig
  int expected_zeros = 0;    // kernel dimension (P1) or 0
  double null_residual = 0.0;
  bool pass = false;
};

/// P1: lambda_min >= -1e-8 lambda_max, P1 v = 0 on the kernel states, and
/// the next eigenvalue is positive. P2: lambda_min > 1e-10 lambda_max.
PositivityReport verify_positivity(const Certificate& cert);

/// Plain definiteness check for an arbitrary symmetric matrix.
PositivityReport verify_positivity(const Mat& P, bool require_definite);

struct DecreaseReport {
  int n_samples = 0;
  double min_eig = 0.0;
  double max_scale = 0.0;  // max |Q|_2 over samples
  int worst_sample = -1;
  bool pass = false;
};

/// lambda_min(Q) and |Q|_2 for one admissible pair.
std::pair<double, double> decrease_at(const ProblemSpec& problem, const Certificate& cert,
                                      const Mat& F, const Mat& G);

/// Samples F with spectrum uniform in [mu, ell] (Haar conjugated) and G with
/// spectrum in [0, rho] (or the fixed G of a quadratic g). Per-sample seeds
/// make the result independent of `threads` (0 = PDGD_THREADS or hardware).
DecreaseReport verify_decrease_sampled(const ProblemSpec& problem, const Certificate& cert,
                                       int n_samples, std::uint64_t seed, int threads = 0);

/// (z - z*)^T P (z - z*)
double evaluate_V(const Certificate& cert, const State& z, const State& z_star);

}  // namespace pdgd
