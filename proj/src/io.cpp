#include "pdgd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "pdgd/random.hpp"

namespace pdgd::io {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json matrix_to_json(const Mat& M) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  }
  return Json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Mat matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DimensionError("matrix data", static_cast<long>(rows * cols), static_cast<long>(data.size()));
  }
  Mat M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  }
  return M;
}

Json vector_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vec vector_from_json(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

namespace {

Json eta_to_json(const TimeConstants& e) { return Json{{"x", e.x}, {"y", e.y}, {"lam", e.lam}}; }

TimeConstants eta_from_json(const Json& j) {
  if (j.is_number()) return TimeConstants::uniform(j.get<double>());
  return TimeConstants(j.at("x").get<double>(), j.at("y").get<double>(), j.at("lam").get<double>());
}

Json state_to_json(const State& z) {
  return Json{{"x", vector_to_json(z.x)}, {"y", vector_to_json(z.y)}, {"lam", vector_to_json(z.lam)}};
}

State state_from_json(const Json& j) {
  return State(vector_from_json(j.at("x")), vector_from_json(j.at("y")), vector_from_json(j.at("lam")));
}

Json oracle_to_json(const ObjectiveOracle& o) {
  if (const QuadraticForm* q = o.quadratic_form()) {
    return Json{{"kind", "quadratic"}, {"Q", matrix_to_json(q->Q)}, {"q", vector_to_json(q->q)}, {"q0", q->q0}};
  }
  if (o.name() == "quartic") return Json{{"kind", "quartic"}, {"dim", o.dim()}};
  throw PreconditionError("instance_to_json: cannot serialize generic oracle '" + o.name() + "'");
}

ObjectiveOracle oracle_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    return ObjectiveOracle::quadratic(matrix_from_json(j.at("Q")), vector_from_json(j.at("q")),
                                      j.value("q0", 0.0));
  }
  if (kind == "quartic") return ObjectiveOracle::quartic(j.at("dim").get<int>());
  throw PreconditionError("unknown objective kind '" + kind + "'");
}

}  // namespace

Json config_to_json(const ExperimentConfig& c) {
  Json j{{"recipe", to_string(c.recipe)},
         {"n", c.n},
         {"m", c.m},
         {"k", c.k},
         {"r_G", c.r_G},
         {"seed", c.seed},
         {"eta", eta_to_json(c.eta)},
         {"t_end", c.t_end},
         {"dt", c.dt ? Json(*c.dt) : Json(nullptr)},
         {"output_dir", c.output_dir},
         {"target_samples", c.target_samples},
         {"assumption_samples", c.assumption_samples},
         {"decrease_samples", c.decrease_samples}};
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (j.contains("recipe")) c.recipe = recipe_from_string(j.at("recipe").get<std::string>());
  if (c.recipe == Recipe::QuarticV_B) {
    c.m = 20;
    c.k = 30;
  }
  c.n = j.value("n", c.n);
  c.m = j.value("m", c.m);
  c.k = j.value("k", c.k);
  c.r_G = j.value("r_G", c.r_G);
  c.seed = j.value("seed", c.seed);
  if (j.contains("eta")) c.eta = eta_from_json(j.at("eta"));
  c.t_end = j.value("t_end", c.t_end);
  if (j.contains("dt") && !j.at("dt").is_null()) c.dt = j.at("dt").get<double>();
  c.output_dir = j.value("output_dir", c.output_dir);
  c.target_samples = j.value("target_samples", c.target_samples);
  c.assumption_samples = j.value("assumption_samples", c.assumption_samples);
  c.decrease_samples = j.value("decrease_samples", c.decrease_samples);
  c.validate();
  return c;
}

Json instance_to_json(const ProblemSpec& p, const std::string& recipe, std::uint64_t seed,
                      const std::optional<State>& z0) {
  const SmoothnessConstants& s = p.constants();
  const Dims d = p.dims();
  Json j{{"generator", NormalStream::kAlgorithm},
         {"recipe", recipe},
         {"seed", seed},
         {"n", d.n},
         {"m", d.m},
         {"k", d.k},
         {"f", oracle_to_json(p.f())},
         {"g", oracle_to_json(p.g())},
         {"A", matrix_to_json(p.A())},
         {"B", matrix_to_json(p.B())},
         {"d", vector_to_json(p.d())},
         {"constants",
          Json{{"mu", s.mu}, {"ell", s.ell}, {"rho", s.rho}, {"gamma", s.gamma ? Json(*s.gamma) : Json(nullptr)}}},
         {"eta", eta_to_json(p.eta())}};
  if (z0) j["z0"] = state_to_json(*z0);
  return j;
}

LoadedInstance instance_from_json(const Json& j) {
  const Json& c = j.at("constants");
  std::optional<double> gamma;
  if (c.contains("gamma") && !c.at("gamma").is_null()) gamma = c.at("gamma").get<double>();
  SmoothnessConstants sc(c.at("mu").get<double>(), c.at("ell").get<double>(), c.at("rho").get<double>(), gamma);
  EqualityConstraint con(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")), vector_from_json(j.at("d")));
  ProblemSpec p(oracle_from_json(j.at("f")), oracle_from_json(j.at("g")), std::move(con), sc,
                j.contains("eta") ? eta_from_json(j.at("eta")) : TimeConstants{});
  std::optional<State> z0;
  if (j.contains("z0")) {
    z0 = state_from_json(j.at("z0"));
    p.check_state(*z0);
  }
  return LoadedInstance{std::move(p), j.value("seed", std::uint64_t{0}), std::move(z0)};
}

Json fit_to_json(const RateFit& f) {
  return Json{{"tau_hat", number(f.tau_hat)},     {"c_hat", number(f.c_hat)},
              {"r_squared", number(f.r_squared)}, {"window", Json::array({f.start, f.end})},
              {"floor", number(f.floor)}};
}

Json assumptions_to_json(const AssumptionReport& r) {
  Json w = Json::array();
  for (const Witness& x : r.witnesses) {
    w.push_back(Json{{"check", x.check},
                     {"first", vector_to_json(x.first)},
                     {"second", vector_to_json(x.second)},
                     {"value", number(x.value)}});
  }
  return Json{{"full_row_rank", r.full_row_rank},
              {"kappa_bounds_ok", r.kappa_bounds_ok},
              {"strong_convexity_ok", r.strong_convexity_ok},
              {"g_smoothness_ok", r.g_smoothness_ok},
              {"assumption4_ok", to_string(r.assumption4)},
              {"gamma_estimate", r.gamma_estimate ? number(*r.gamma_estimate) : Json(nullptr)},
              {"kappa1", number(r.kappa1)},
              {"kappa2", number(r.kappa2)},
              {"witnesses", std::move(w)}};
}

namespace {

Json local_json(const std::optional<LocalConditionReport>& lc) {
  if (!lc) return Json(nullptr);
  return Json{{"min_eig", number(lc->min_eig)}, {"holds", lc->holds}};
}

}  // namespace

Json equilibrium_to_json(const EquilibriumSet& eq, const std::optional<LocalConditionReport>& lc) {
  return Json{{"x_star", vector_to_json(eq.x_star)},
              {"lam_star", vector_to_json(eq.lam_star)},
              {"y_base", vector_to_json(eq.y_base)},
              {"kernel_dim", eq.kernel_dim()},
              {"kernel_basis", matrix_to_json(eq.kernel_basis)},
              {"residual", number(eq.residual)},
              {"local_condition", local_json(lc)}};
}

Json equilibrium_to_json(const KktSolution& s, const std::optional<LocalConditionReport>& lc) {
  return Json{{"x_star", vector_to_json(s.x_star)},
              {"lam_star", vector_to_json(s.lam_star)},
              {"y_star", vector_to_json(s.y_star)},
              {"kernel_dim", 0},
              {"residual", number(s.residual)},
              {"iterations", s.iterations},
              {"local_condition", local_json(lc)}};
}

Json convergence_to_json(const ConvergenceReport& r) {
  Json fits = Json::object();
  const std::pair<const char*, const std::optional<RateFit>*> named[] = {
      {"dx", &r.dx}, {"dlam", &r.dlam}, {"Bdy", &r.Bdy}, {"Gdy", &r.Gdy}, {"dz", &r.dz}, {"dist_set", &r.dist_set}};
  for (const auto& [name, fit] : named) {
    if (*fit) fits[name] = fit_to_json(**fit);
  }
  Json j{{"trivial", r.trivial}, {"fits", std::move(fits)}};
  if (r.dy_plateau_level) {
    j["dy_plateau_level"] = number(*r.dy_plateau_level);
    j["dy_plateaued"] = r.dy_plateaued;
  }
  return j;
}

Json sync_to_json(const SyncReport& r) {
  return Json{{"c_x_hat", number(r.c_x_hat)},
              {"vartheta_hat", number(r.vartheta_hat)},
              {"bounds", Json{{"c_lam", number(r.c_lam)}, {"c_y", number(r.c_y)}, {"c_g", number(r.c_g)}}},
              {"empirical_max_ratios",
               Json{{"lam", number(r.ratio_lam)}, {"By", number(r.ratio_By)}, {"Bgradg", number(r.ratio_Bgradg)}}},
              {"checked", r.checked},
              {"pass", r.pass}};
}

Json monitor_to_json(const LyapunovMonitor& m) {
  return Json{{"pass", m.pass()},
              {"vacuous", m.vacuous},
              {"envelope_ok", m.envelope_ok},
              {"derivative_ok", m.derivative_ok},
              {"worst_envelope_index", m.worst_envelope_index},
              {"worst_envelope_excess", number(m.worst_envelope_excess)},
              {"worst_derivative_index", m.worst_derivative_index},
              {"worst_derivative_excess", number(m.worst_derivative_excess)},
              {"derivative_tol", number(m.derivative_tol)},
              {"samples", m.V.size()}};
}

Json positivity_to_json(const PositivityReport& r) {
  return Json{{"min_eig", number(r.min_eig)},
              {"max_eig", number(r.max_eig)},
              {"zero_count", r.zero_count},
              {"expected_zeros", r.expected_zeros},
              {"null_residual", number(r.null_residual)},
              {"pass", r.pass}};
}

Json decrease_to_json(const DecreaseReport& r) {
  return Json{{"n_samples", r.n_samples},
              {"min_eig", number(r.min_eig)},
              {"max_scale", number(r.max_scale)},
              {"worst_sample", r.worst_sample},
              {"pass", r.pass}};
}

Json certificate_to_json(const Certificate& c) {
  const CertificateDiagnostics& d = c.diagnostics;
  Json conds = Json::array();
  for (const Condition& x : d.conditions) {
    conds.push_back(Json{{"name", x.name}, {"value", number(x.value)}, {"ok", x.ok}});
  }
  Json diag{{"c1", number(d.c1)}, {"c2", number(d.c2)}, {"c3", number(d.c3)}, {"s1", number(d.s1)},
            {"min_eig_S1", number(d.min_eig_S1)}, {"p1", number(d.p1)}, {"h1", number(d.h1)},
            {"h2", number(d.h2)}, {"h3", number(d.h3)}, {"h4", number(d.h4)}, {"pi", number(d.pi)},
            {"m2_bound", number(d.m2_bound)}};
  return Json{{"kind", to_string(c.kind)},
              {"alpha", number(c.params.alpha)},
              {"beta", number(c.params.beta)},
              {"tau", number(c.params.tau)},
              {"min_eig_P", number(d.min_eig_P)},
              {"min_eig_Q_sampled", number(d.min_eig_Q_samples)},
              {"diagnostics", std::move(diag)},
              {"conditions", std::move(conds)}};
}

void write_trajectory_csv(std::ostream& os, const DeviationSeries& s, const std::vector<double>* V1,
                          const std::vector<double>* V2) {
  os << "t,norm_dx,norm_dlam,norm_Bdy,norm_Gdy,norm_dy,V1,V2\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    os << format_double(s.t[i]) << ',' << format_double(s.dx[i]) << ',' << format_double(s.dlam[i]) << ','
       << format_double(s.Bdy[i]) << ',' << format_double(s.Gdy[i]) << ',' << format_double(s.dy[i]) << ',';
    if (V1) os << format_double((*V1)[i]);
    os << ',';
    if (V2) os << format_double((*V2)[i]);
    os << '\n';
  }
}

void write_envelope_csv(std::ostream& os, const LyapunovMonitor& m) {
  os << "t,V,bound\n";
  for (std::size_t i = 0; i < m.t.size(); ++i) {
    os << format_double(m.t[i]) << ',' << format_double(m.V[i]) << ',' << format_double(m.envelope[i]) << '\n';
  }
}

void write_states_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.empty()) return;
  const Dims d = traj.states.front().dims();
  os << 't';
  for (int i = 1; i <= d.n; ++i) os << ",x" << i;
  for (int i = 1; i <= d.m; ++i) os << ",y" << i;
  for (int i = 1; i <= d.k; ++i) os << ",lam" << i;
  os << '\n';
  for (std::size_t j = 0; j < traj.size(); ++j) {
    os << format_double(traj.times[j]);
    const Vec z = traj.states[j].stacked();
    for (Eigen::Index i = 0; i < z.size(); ++i) os << ',' << format_double(z(i));
    os << '\n';
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw PreconditionError("invalid JSON in '" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace pdgd::io
