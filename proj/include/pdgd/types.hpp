#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "pdgd/errors.hpp"

namespace pdgd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Block sizes of the stacked variable z = (x, y, lambda).
struct Dims {
  int n = 0;
  int m = 0;
  int k = 0;

  int total() const { return n + m + k; }
  bool operator==(const Dims&) const = default;
};

/// Primal-dual state: primal blocks x, y and the multiplier lambda.
struct State {
  Vec x;
  Vec y;
  Vec lam;

  State() = default;
  State(Vec x_, Vec y_, Vec lam_) : x(std::move(x_)), y(std::move(y_)), lam(std::move(lam_)) {}

  static State zeros(const Dims& d) {
    return State(Vec::Zero(d.n), Vec::Zero(d.m), Vec::Zero(d.k));
  }

  Dims dims() const {
    return {static_cast<int>(x.size()), static_cast<int>(y.size()), static_cast<int>(lam.size())};
  }

  Vec stacked() const {
    Vec z(x.size() + y.size() + lam.size());
    z << x, y, lam;
    return z;
  }

  static State from_stacked(const Eigen::Ref<const Vec>& z, const Dims& d) {
    if (z.size() != d.total()) throw DimensionError("z", d.total(), z.size());
    return State(z.head(d.n), z.segment(d.n, d.m), z.tail(d.k));
  }

  bool all_finite() const { return x.allFinite() && y.allFinite() && lam.allFinite(); }

  State operator-(const State& o) const { return State(x - o.x, y - o.y, lam - o.lam); }
  State operator+(const State& o) const { return State(x + o.x, y + o.y, lam + o.lam); }
  State operator*(double s) const { return State(x * s, y * s, lam * s); }

  double norm() const {
    return std::sqrt(x.squaredNorm() + y.squaredNorm() + lam.squaredNorm());
  }
};

/// Time constants of the continuous flow; all strictly positive.
struct TimeConstants {
  double x = 1.0;
  double y = 1.0;
  double lam = 1.0;

  TimeConstants() = default;
  TimeConstants(double eta_x, double eta_y, double eta_lam) : x(eta_x), y(eta_y), lam(eta_lam) {
    if (!(x > 0 && y > 0 && lam > 0)) {
      throw PreconditionError("time constants must be positive");
    }
  }
  static TimeConstants uniform(double eta) { return {eta, eta, eta}; }

  double max() const { return std::max({x, y, lam}); }
};

/// Step sizes of the discrete iteration; all strictly positive.
struct StepSizes {
  double x;
  double y;
  double lam;

  StepSizes(double nu_x, double nu_y, double nu_lam) : x(nu_x), y(nu_y), lam(nu_lam) {
    if (!(x > 0 && y > 0 && lam > 0)) {
      throw PreconditionError("step sizes must be positive");
    }
  }
  static StepSizes uniform(double nu) { return {nu, nu, nu}; }
};

}  // namespace pdgd
