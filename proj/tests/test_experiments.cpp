#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "pdgd/experiments.hpp"
#include "pdgd/io.hpp"
#include "pdgd/linalg.hpp"

using namespace pdgd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdgd_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("full-size quadratic instance structure") {
  ExperimentConfig c;  // 60, 50, 20, r_G 40, seed 42
  const ProblemSpec p = generate_instance(c);
  CHECK(p.dims() == Dims{60, 50, 20});
  const Mat N = kernel_intersection_basis(p.B(), p.g().quadratic_form()->Q);
  const Vec e1 = Vec::Unit(50, 0);
  CHECK((N * (N.transpose() * e1) - e1).norm() < 1e-10);
  CHECK(p.constants().mu >= 5.0 - 1e-9);
}

TEST_CASE("mu is at least five for any seed") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    CHECK(oracle::small_quadratic(s).constants().mu >= 5.0 - 1e-9);
    CHECK(oracle::small_quartic(s).constants().mu >= 5.0 - 1e-9);
  }
}

TEST_CASE("same seed gives the same instance JSON") {
  ExperimentConfig c;
  c.n = 12;
  c.m = 9;
  c.k = 5;
  c.r_G = 4;
  c.seed = 99;
  const std::string a = io::instance_to_json(generate_instance(c), "QuadraticV_A", 99).dump();
  const std::string b = io::instance_to_json(generate_instance(c), "QuadraticV_A", 99).dump();
  CHECK(a == b);
  c.seed = 100;
  CHECK(io::instance_to_json(generate_instance(c), "QuadraticV_A", 100).dump() != a);
}

TEST_CASE("instance JSON round trip") {
  for (const Recipe r : {Recipe::QuadraticV_A, Recipe::QuarticV_B}) {
    ExperimentConfig c;
    c.recipe = r;
    c.n = 8;
    c.m = 5;
    c.k = 4;
    c.r_G = 3;
    c.eta = TimeConstants(1.5, 2.0, 0.5);
    const ProblemSpec p = generate_instance(c);
    const State z0 = initial_state(c, p.dims());
    const io::Json j = io::instance_to_json(p, to_string(r), c.seed, z0);
    const io::LoadedInstance back = io::instance_from_json(io::Json::parse(j.dump()));
    CHECK((back.problem.A() - p.A()).norm() == 0.0);
    CHECK((back.problem.B() - p.B()).norm() == 0.0);
    CHECK((back.problem.d() - p.d()).norm() == 0.0);
    CHECK(back.problem.constants().rho == p.constants().rho);
    CHECK(back.problem.eta().lam == 0.5);
    CHECK(back.problem.g_is_quadratic() == p.g_is_quadratic());
    REQUIRE(back.z0);
    CHECK((back.z0->stacked() - z0.stacked()).norm() == 0.0);
    NormalStream rng(1);
    const Vec y = rng.vector(5);
    CHECK(back.problem.g().eval(y) == p.g().eval(y));
    CHECK(back.seed == c.seed);
  }
}

TEST_CASE("config JSON round trip and validation") {
  ExperimentConfig c;
  c.recipe = Recipe::QuarticV_B;
  c.m = 20;
  c.k = 10;
  c.seed = 7;
  c.t_end = 12.5;
  c.dt = 0.01;
  c.eta = TimeConstants::uniform(5.0);
  const ExperimentConfig d = io::config_from_json(io::config_to_json(c));
  CHECK(d.recipe == c.recipe);
  CHECK(d.k == 10);
  CHECK(d.seed == 7);
  CHECK(d.t_end == 12.5);
  REQUIRE(d.dt);
  CHECK(*d.dt == 0.01);
  CHECK(d.eta.x == 5.0);

  CHECK(recipe_from_string("quartic") == Recipe::QuarticV_B);
  CHECK(recipe_from_string("QuadraticV_A") == Recipe::QuadraticV_A);
  CHECK_THROWS_AS(recipe_from_string("cubic"), PreconditionError);
  CHECK_THROWS_AS(io::config_from_json(io::Json{{"n", 0}}), PreconditionError);
  CHECK_THROWS_AS(io::config_from_json(io::Json{{"r_G", 50}}), PreconditionError);
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::number(std::nan("")).is_null());
}

TEST_CASE("larger time constants give a faster fitted rate") {
  double rate[2];
  int i = 0;
  for (double eta : {1.0, 5.0}) {
    ExperimentConfig c;
    c.n = 10;
    c.m = 8;
    c.k = 4;
    c.r_G = 4;
    c.eta = TimeConstants::uniform(eta);
    const ProblemSpec p = generate_instance(c);
    const EquilibriumSet eq = solve_kkt_quadratic(p);
    const Trajectory t = integrate(p, initial_state(c, p.dims()), 20.0, default_time_step(p), {2, 0});
    rate[i++] = convergence_report(p, t, eq).dx->tau_hat;
  }
  CHECK(rate[1] > rate[0]);
}

TEST_CASE("run_experiment writes its artefacts") {
  ExperimentConfig c;
  c.n = 10;
  c.m = 8;
  c.k = 4;
  c.r_G = 4;
  c.t_end = 40.0;
  c.decrease_samples = 50;
  c.assumption_samples = 50;
  c.output_dir = scratch("quad").string();
  CHECK(run_experiment(c) == 0);
  for (const char* f : {"config.json", "instance.json", "trajectory.csv", "rates.json", "certificate.json",
                        "lyapunov_envelope.csv"}) {
    CHECK(fs::exists(fs::path(c.output_dir) / f));
  }
  const io::Json rates = io::read_json_file((fs::path(c.output_dir) / "rates.json").string());
  CHECK(rates.at("pass").get<bool>());
  const io::Json cert = io::read_json_file((fs::path(c.output_dir) / "certificate.json").string());
  CHECK(cert.at("kind") == "P1");
  std::ifstream csv(fs::path(c.output_dir) / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,norm_dx,norm_dlam,norm_Bdy,norm_Gdy,norm_dy,V1,V2");
  fs::remove_all(c.output_dir);
}

TEST_CASE("run_experiment records failures") {
  ExperimentConfig c;
  c.recipe = Recipe::QuarticV_B;
  c.n = 6;
  c.m = 3;
  c.k = 4;
  c.t_end = 1e-9;
  c.dt = 0.1;  // t_end < dt
  c.assumption_samples = 10;
  c.output_dir = scratch("fail").string();
  CHECK(run_experiment(c) == 2);
  const io::Json f = io::read_json_file((fs::path(c.output_dir) / "failure.json").string());
  CHECK(f.at("stage") == "integrate");
  fs::remove_all(c.output_dir);
}

TEST_CASE("region constants cover the trajectory") {
  const ProblemSpec p = oracle::small_quartic(8, 6, 3, 4);
  const KktSolution s = solve_kkt_generic(p, State::zeros(p.dims()));
  NormalStream rng(4);
  const State z0 = State::from_stacked(rng.vector(p.dims().total()), p.dims());
  const auto [q, R] = region_constants(p, z0, s.state());
  CHECK(q.constants().rho >= 12.0 * R * R - 1e-9);
  const Trajectory t = integrate(q, z0, 10.0, default_time_step(q));
  for (const State& z : t.states) CHECK(z.y.cwiseAbs().maxCoeff() <= R + 1e-9);
}
