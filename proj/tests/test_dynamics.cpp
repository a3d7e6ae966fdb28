#include <doctest.h>

#include "oracles.hpp"
#include "pdgd/analysis.hpp"
#include "pdgd/dynamics.hpp"
#include "pdgd/equilibrium.hpp"

using namespace pdgd;

namespace {

// n = m = k = 1, f = x^2/2, g = 0, A = B = 1, d = 0
ProblemSpec unit_toy() { return oracle::scalar(1.0, 1, 1.0, 1.0, 0.0); }

// Same without y.
ProblemSpec spiral_toy() { return oracle::scalar(1.0, 0, 1.0, 0.0, 0.0); }

}  // namespace

TEST_CASE("vector field hand value") {
  const State z(Vec::Ones(1), Vec::Zero(1), Vec::Zero(1));
  const State v = vector_field(unit_toy(), z);
  CHECK(v.x(0) == doctest::Approx(-1.0));
  CHECK(v.y(0) == doctest::Approx(0.0));
  CHECK(v.lam(0) == doctest::Approx(1.0));
}

TEST_CASE("vector field is descent in primal, ascent in dual") {
  const ProblemSpec p = oracle::small_quadratic(5, 6, 5, 3, 3, TimeConstants(2.0, 3.0, 0.5));
  NormalStream rng(8);
  const State z = State::from_stacked(rng.vector(p.dims().total()), p.dims());
  const LagrangianGradients g = lagrangian_gradients(p, z);
  const State v = vector_field(p, z);
  CHECK((v.x + 2.0 * g.gx).norm() < 1e-12);
  CHECK((v.y + 3.0 * g.gy).norm() < 1e-12);
  CHECK((v.lam - 0.5 * g.gl).norm() < 1e-12);

  Vec out;
  vector_field_stacked(p, z.stacked(), out);
  CHECK((out - v.stacked()).norm() == 0.0);
}

TEST_CASE("W hand value and consistency with the field") {
  const ProblemSpec p = unit_toy();
  const Mat W = assemble_W(Mat::Ones(1, 1), Mat::Zero(1, 1), p);
  Mat want(3, 3);
  want << -1, 0, -1, 0, 0, -1, 1, 1, 0;
  CHECK((W - want).norm() == 0.0);

  const ProblemSpec q = oracle::small_quartic(2, 5, 3, 4, TimeConstants(1.5, 0.7, 2.0));
  const KktSolution s = solve_kkt_generic(q, State::zeros(q.dims()));
  NormalStream rng(12);
  for (int i = 0; i < 10; ++i) {
    const State z = State::from_stacked(rng.vector(q.dims().total()), q.dims());
    const MeanValuePair mv = mean_value_pair(q, z, s.state());
    const Vec lhs = vector_field(q, z).stacked();
    const Vec rhs = oracle::W(mv.F, mv.G, q) * (z - s.state()).stacked();
    CHECK((lhs - rhs).norm() <= 1e-8 * std::max(1.0, lhs.norm()));
    CHECK((assemble_W(mv.F, mv.G, q) - oracle::W(mv.F, mv.G, q)).norm() == 0.0);
  }
}

TEST_CASE("mean-value matrices") {
  // quartic, m = 1, y = 1, y* = 0: G = int 12 s^2 ds = 4
  const ProblemSpec q = ProblemSpec(ObjectiveOracle::quadratic(Mat::Identity(1, 1), Vec::Zero(1)),
                                    ObjectiveOracle::quartic(1),
                                    EqualityConstraint(Mat::Identity(1, 1), Mat::Zero(1, 1), Vec::Zero(1)),
                                    SmoothnessConstants(1.0, 1.0, 12.0));
  const State z(Vec::Zero(1), Vec::Ones(1), Vec::Zero(1));
  const MeanValuePair mv = mean_value_pair(q, z, State::zeros(q.dims()));
  CHECK(mv.G(0, 0) == doctest::Approx(4.0).epsilon(1e-14));

  // quadratic f: F = Q for any pair; G constant across z
  const ProblemSpec p = oracle::small_quadratic(9);
  NormalStream rng(3);
  const State a = State::from_stacked(rng.vector(p.dims().total()), p.dims());
  const State b = State::from_stacked(rng.vector(p.dims().total()), p.dims());
  const MeanValuePair m1 = mean_value_pair(p, a, b);
  const MeanValuePair m2 = mean_value_pair(p, b, a);
  CHECK((m1.F - p.f().quadratic_form()->Q).norm() < 1e-10);
  CHECK((m1.G - m2.G).norm() < 1e-10);

  // spectrum inside [mu, ell]
  const Vec ev = oracle::lmin(m1.F) * Vec::Ones(1);
  CHECK(ev(0) >= p.constants().mu - 1e-8);
  CHECK(oracle::lmax(m1.F) <= p.constants().ell + 1e-8);
}

TEST_CASE("integrate from the equilibrium stays there") {
  const ProblemSpec p = oracle::small_quadratic(13);
  const EquilibriumSet eq = solve_kkt_quadratic(p);
  const Trajectory t = integrate(p, eq.representative(), 5.0, default_time_step(p));
  for (const State& s : t.states) CHECK((s - eq.representative()).norm() < 1e-9);
}

TEST_CASE("spiral toy decays at rate one half") {
  const ProblemSpec p = spiral_toy();
  const State z0(Vec::Ones(1), Vec(0), Vec::Zero(1));
  const Trajectory t = integrate(p, z0, 30.0, 0.01, {10, 0});
  std::vector<double> norms;
  for (const State& s : t.states) norms.push_back(s.norm());
  const RateFit fit = fit_exponential_rate(t.times, norms);
  CHECK(fit.tau_hat > 0.0);
  CHECK(fit.tau_hat == doctest::Approx(0.5).epsilon(0.05));
  CHECK(t.times.back() == doctest::Approx(30.0));
}

TEST_CASE("RK4 error ratio is about sixteen") {
  const ProblemSpec p = spiral_toy();
  const State z0(Vec::Ones(1), Vec(0), Vec::Zero(1));
  auto final = [&](double dt) { return integrate(p, z0, 2.0, dt).back(); };
  const State a = final(0.2), b = final(0.1), c = final(0.05);
  const double ratio = (a - b).norm() / (b - c).norm();
  CHECK(ratio > 8.0);
  CHECK(ratio < 32.0);
}

TEST_CASE("integrate preconditions and divergence") {
  const ProblemSpec p = unit_toy();
  const State z0(Vec::Ones(1), Vec::Zero(1), Vec::Zero(1));
  CHECK_THROWS_AS(integrate(p, z0, 1.0, 0.0), PreconditionError);
  CHECK_THROWS_AS(integrate(p, z0, 1.0, 0.1, {0, 0}), PreconditionError);
  CHECK_THROWS_AS(integrate(p, State(Vec::Ones(2), Vec::Zero(1), Vec::Zero(1)), 1.0, 0.1), DimensionError);
  // far past the stability limit of RK4
  CHECK_THROWS_AS(integrate(p, z0, 20000.0, 50.0), DivergenceError);
}

TEST_CASE("discrete iteration hand step") {
  const ProblemSpec p = spiral_toy();
  const State z0(Vec::Ones(1), Vec(0), Vec::Zero(1));
  const Trajectory t = discrete_run(p, StepSizes::uniform(0.1), z0, 1);
  REQUIRE(t.size() == 2);
  CHECK(t.states[1].x(0) == doctest::Approx(0.9));
  CHECK(t.states[1].lam(0) == doctest::Approx(0.1));

  const ProblemSpec q = oracle::small_quadratic(13);
  const EquilibriumSet eq = solve_kkt_quadratic(q);
  const Trajectory u = discrete_run(q, StepSizes::uniform(1e-3), eq.representative(), 50);
  for (const State& s : u.states) CHECK((s - eq.representative()).norm() < 1e-9);
}
