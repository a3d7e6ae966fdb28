#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdgd/types.hpp"

namespace pdgd {

/// Curvature constants: f is mu-strongly convex and ell-smooth, g is
/// convex and rho-smooth; gamma is the optional modulus of
/// y^T B^T B y + <grad g(y1) - grad g(y2), y1 - y2> >= gamma |y1 - y2|^2.
struct SmoothnessConstants {
  double mu;
  double ell;
  double rho;
  std::optional<double> gamma;

  SmoothnessConstants(double mu_, double ell_, double rho_, std::optional<double> gamma_ = {});
};

enum class OracleKind { Quadratic, Generic };

/// 0.5 v^T Q v + q^T v + q0
struct QuadraticForm {
  Mat Q;
  Vec q;
  double q0 = 0.0;
};

/// Function value, gradient and Hessian of a twice differentiable function.
///
/// Generic oracles are cross-checked against central finite differences at
/// construction, so a mistyped gradient or Hessian fails early with an
/// OracleError instead of corrupting the mean-value matrices downstream.
class ObjectiveOracle {
 public:
  using EvalFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  static ObjectiveOracle quadratic(Mat Q, Vec q, double q0 = 0.0);
  /// The identically zero function on R^dim (a degenerate quadratic).
  static ObjectiveOracle zero(int dim);
  /// sum_i v_i^4
  static ObjectiveOracle quartic(int dim);
  static ObjectiveOracle generic(int dim, std::string name, EvalFn eval, GradFn grad, HessFn hess);

  int dim() const { return dim_; }
  OracleKind kind() const { return quad_ ? OracleKind::Quadratic : OracleKind::Generic; }
  const std::string& name() const { return name_; }
  /// Null unless kind() == Quadratic.
  const QuadraticForm* quadratic_form() const { return quad_.get(); }

  double eval(const Vec& v) const;
  Vec gradient(const Vec& v) const;
  Mat hessian(const Vec& v) const;

 private:
  ObjectiveOracle() = default;
  void check_arg(const Vec& v) const;

  int dim_ = 0;
  std::string name_;
  std::shared_ptr<const QuadraticForm> quad_;
  EvalFn eval_;
  GradFn grad_;
  HessFn hess_;
};

/// Worst relative disagreement between an oracle and central differences.
struct FiniteDifferenceCheck {
  double gradient_error = 0.0;
  double hessian_error = 0.0;
  double asymmetry = 0.0;
};

/// Central differences with step h = 1e-5 (1 + |v|).
FiniteDifferenceCheck finite_difference_check(const ObjectiveOracle& oracle, const Vec& v);

/// A x + B y = d together with the spectral constants that the certificates
/// consume: kappa1 = lambda_min(A A^T), kappa2 = lambda_max(A A^T) and
/// omega = lambda_max(B^T B). A rank-deficient A is accepted here so that
/// validate_assumptions can report it.
class EqualityConstraint {
 public:
  EqualityConstraint(Mat A, Mat B, Vec d);

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  const Vec& d() const { return d_; }
  int k() const { return static_cast<int>(A_.rows()); }
  int n() const { return static_cast<int>(A_.cols()); }
  int m() const { return static_cast<int>(B_.cols()); }

  double kappa1() const { return kappa1_; }
  double kappa2() const { return kappa2_; }
  double omega() const { return omega_; }
  double norm_A() const { return std::sqrt(kappa2_); }
  double norm_B() const { return std::sqrt(omega_); }

  bool full_row_rank() const;

 private:
  Mat A_;
  Mat B_;
  Vec d_;
  double kappa1_ = 0.0;
  double kappa2_ = 0.0;
  double omega_ = 0.0;
};

/// min f(x) + g(y) s.t. A x + B y = d, plus the time constants of the flow.
class ProblemSpec {
 public:
  ProblemSpec(ObjectiveOracle f, ObjectiveOracle g, EqualityConstraint constraint,
              SmoothnessConstants constants, TimeConstants eta = {});

  /// Curvature constants read off the quadratic forms of f and g.
  static ProblemSpec from_quadratics(ObjectiveOracle f, ObjectiveOracle g,
                                     EqualityConstraint constraint, TimeConstants eta = {});

  ProblemSpec with_constants(SmoothnessConstants constants) const;
  ProblemSpec with_eta(TimeConstants eta) const;

  const ObjectiveOracle& f() const { return f_; }
  const ObjectiveOracle& g() const { return g_; }
  const EqualityConstraint& constraint() const { return c_; }
  const Mat& A() const { return c_.A(); }
  const Mat& B() const { return c_.B(); }
  const Vec& d() const { return c_.d(); }
  const SmoothnessConstants& constants() const { return constants_; }
  const TimeConstants& eta() const { return eta_; }
  Dims dims() const { return {c_.n(), c_.m(), c_.k()}; }

  bool g_is_quadratic() const { return g_.kind() == OracleKind::Quadratic; }
  bool f_is_quadratic() const { return f_.kind() == OracleKind::Quadratic; }

  /// Throws DimensionError naming the first block whose size is wrong.
  void check_state(const State& z) const;

 private:
  ObjectiveOracle f_;
  ObjectiveOracle g_;
  EqualityConstraint c_;
  SmoothnessConstants constants_;
  TimeConstants eta_;
};

/// mu/ell from the eigenvalues of Q_f, rho from Q_g. Both must be quadratic.
SmoothnessConstants quadratic_constants(const ObjectiveOracle& f, const ObjectiveOracle& g);

/// A gamma that holds as a matrix bound B^T B + G(y) >= gamma I for every
/// admissible mean-value matrix G(y): the user-supplied constant if present,
/// lambda_min(B^T B + G) for quadratic g, lambda_min(B^T B) otherwise.
/// Empty when the bound is not positive.
std::optional<double> certified_gamma(const ProblemSpec& problem);

/// f(x) + g(y) + lam^T (A x + B y - d)
double lagrangian(const ProblemSpec& problem, const State& z);

struct LagrangianGradients {
  Vec gx;
  Vec gy;
  Vec gl;

  double max_norm() const { return std::max({gx.norm(), gy.norm(), gl.norm()}); }
};

LagrangianGradients lagrangian_gradients(const ProblemSpec& problem, const State& z);

enum class Assumption4Status { Verified, SampledOnly, Failed };

const char* to_string(Assumption4Status s);

/// A pair of points (or a single direction) at which a checked inequality
/// fails; `value` is the offending ratio or eigenvalue.
struct Witness {
  std::string check;
  Vec first;
  Vec second;
  double value = 0.0;
};

struct AssumptionReport {
  bool full_row_rank = false;
  bool kappa_bounds_ok = false;
  bool strong_convexity_ok = false;
  bool g_smoothness_ok = false;
  Assumption4Status assumption4 = Assumption4Status::Failed;
  std::optional<double> gamma_estimate;
  std::vector<Witness> witnesses;
  double kappa1 = 0.0;
  double kappa2 = 0.0;

  /// Rank and curvature checks, the ones every result needs.
  bool core_ok() const {
    return full_row_rank && kappa_bounds_ok && strong_convexity_ok && g_smoothness_ok;
  }
};

/// Rank and kappa checks are exact (eigendecomposition of A A^T). The
/// convexity and smoothness inequalities are evaluated on n_samples random
/// pairs drawn uniformly from the ball of the given radius. The gamma condition is
/// decided exactly for quadratic g; for generic g a flat Hessian direction
/// inside ker(B) proves failure, otherwise the result is SampledOnly.
AssumptionReport validate_assumptions(const ProblemSpec& problem, int n_samples,
                                      std::uint64_t seed, double radius = 10.0);

}  // namespace pdgd
