// pdgd: generate instances, run experiments, certify, summarize.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "pdgd/experiments.hpp"
#include "pdgd/io.hpp"

namespace fs = std::filesystem;
using pdgd::io::Json;

namespace {

int cmd_gen(const std::string& recipe, int n, int m, int k, int rg, std::uint64_t seed,
            const std::string& out) {
  pdgd::ExperimentConfig c;
  c.recipe = pdgd::recipe_from_string(recipe);
  c.n = n;
  c.m = m;
  c.k = k;
  c.r_G = rg;
  c.seed = seed;
  const pdgd::ProblemSpec p = pdgd::generate_instance(c);
  const pdgd::State z0 = pdgd::initial_state(c, p.dims());
  const Json j = pdgd::io::instance_to_json(p, pdgd::to_string(c.recipe), seed, z0);
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    pdgd::io::write_json_file(out, j);
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  pdgd::ExperimentConfig c = pdgd::io::config_from_json(pdgd::io::read_json_file(config_path));
  if (!out_override.empty()) c.output_dir = out_override;
  const int rc = pdgd::run_experiment(c);
  std::cout << c.output_dir << ": " << (rc == 0 ? "PASS" : rc == 1 ? "FAIL (checks)" : "ERROR") << '\n';
  if (rc == 2) {
    const Json f = pdgd::io::read_json_file((fs::path(c.output_dir) / "failure.json").string());
    std::cerr << "stage " << f.at("stage").get<std::string>() << ": " << f.at("error").get<std::string>()
              << '\n';
  }
  return rc;
}

int cmd_certify(const std::string& instance_path, const std::string& kind_name, int samples,
                const std::string& out) {
  const pdgd::io::LoadedInstance inst = pdgd::io::instance_from_json(pdgd::io::read_json_file(instance_path));
  const pdgd::CertificateKind kind = pdgd::certificate_kind_from_string(kind_name);
  const pdgd::CertificateParams params = pdgd::search_parameters(inst.problem, kind);
  pdgd::Certificate cert = pdgd::build_certificate(inst.problem, kind, params);
  const pdgd::PositivityReport pos = pdgd::verify_positivity(cert);
  const pdgd::DecreaseReport dec = pdgd::verify_decrease_sampled(inst.problem, cert, samples, inst.seed);
  cert.diagnostics.min_eig_Q_samples = dec.min_eig;

  Json j = pdgd::io::certificate_to_json(cert);
  j["positivity"] = pdgd::io::positivity_to_json(pos);
  j["decrease_sampled"] = pdgd::io::decrease_to_json(dec);
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    pdgd::io::write_json_file(out, j);
  }
  return cert.diagnostics.all_ok() && pos.pass && dec.pass ? 0 : 1;
}

std::string cell(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return "-";
  const Json& v = j.at(key);
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number()) {
    std::ostringstream s;
    s << std::setprecision(4) << v.get<double>();
    return s.str();
  }
  return v.dump();
}

int cmd_report(const std::string& dir) {
  std::vector<fs::path> runs;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name == "rates.json" || name == "failure.json") runs.push_back(e.path().parent_path());
  }
  std::sort(runs.begin(), runs.end());
  runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
  if (runs.empty()) {
    std::cerr << "no runs under " << dir << '\n';
    return 1;
  }

  std::cout << std::left << std::setw(32) << "run" << std::setw(14) << "recipe" << std::setw(12) << "tau_dx"
            << std::setw(12) << "tau_dz" << std::setw(12) << "t_delta" << std::setw(12) << "cert_tau"
            << "pass\n";
  bool all = true;
  for (const fs::path& r : runs) {
    const std::string name = fs::relative(r, dir).string();
    if (fs::exists(r / "failure.json")) {
      const Json f = pdgd::io::read_json_file((r / "failure.json").string());
      std::cout << std::setw(32) << name << "ERROR at " << f.value("stage", "?") << ": " << f.value("error", "")
                << '\n';
      all = false;
      continue;
    }
    const Json rates = pdgd::io::read_json_file((r / "rates.json").string());
    const Json& fits = rates.at("convergence").at("fits");
    const Json none = Json::object();
    const Json& fdx = fits.contains("dx") ? fits.at("dx") : none;
    const Json& fdz = fits.contains("dz") ? fits.at("dz") : none;
    const Json& lp = rates.contains("local_phase") ? rates.at("local_phase") : none;
    Json cert = none;
    if (fs::exists(r / "certificate.json")) cert = pdgd::io::read_json_file((r / "certificate.json").string());
    const bool pass = rates.value("pass", false);
    all = all && pass;
    std::cout << std::setw(32) << name << std::setw(14) << rates.value("recipe", "?") << std::setw(12)
              << cell(fdx, "tau_hat") << std::setw(12) << cell(fdz, "tau_hat") << std::setw(12)
              << cell(lp, "t_delta") << std::setw(12) << cell(cert, "tau") << (pass ? "yes" : "no") << '\n';
  }
  return all ? 0 : 1;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_batch(const std::string& config_path, const std::string& etas, const std::string& seeds) {
  const pdgd::ExperimentConfig base = pdgd::io::config_from_json(pdgd::io::read_json_file(config_path));
  std::vector<pdgd::ExperimentConfig> jobs;
  const std::vector<double> seed_list = seeds.empty() ? std::vector<double>{double(base.seed)} : parse_list(seeds);
  for (double s : seed_list) {
    for (double eta : parse_list(etas)) {
      pdgd::ExperimentConfig c = base;
      c.seed = static_cast<std::uint64_t>(s);
      c.eta = pdgd::TimeConstants::uniform(eta);
      std::ostringstream dir;
      dir << "seed_" << c.seed << "_eta_" << eta;
      c.output_dir = (fs::path(base.output_dir) / dir.str()).string();
      jobs.push_back(c);
    }
  }
  int threads = 1;
  if (const char* env = std::getenv("PDGD_THREADS")) threads = std::max(1, std::atoi(env));
  threads = std::min<int>(threads, static_cast<int>(jobs.size()));

  std::vector<int> rc(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex io_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      rc[i] = pdgd::run_experiment(jobs[i]);
      std::lock_guard<std::mutex> lock(io_mu);
      std::cout << jobs[i].output_dir << ": " << (rc[i] == 0 ? "PASS" : "FAIL") << '\n';
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return std::any_of(rc.begin(), rc.end(), [](int r) { return r != 0; }) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual gradient dynamics: simulation, certificates, rate analysis"};
  app.require_subcommand(1);

  std::string recipe = "quadratic", out, config, instance, kind = "p1", dir, etas = "1,5", seeds;
  int n = 60, m = 50, k = 20, rg = 40, samples = 1000;
  std::uint64_t seed = 42;

  CLI::App* gen = app.add_subcommand("gen", "Generate a seeded instance as JSON");
  gen->add_option("--recipe", recipe, "quadratic or quartic")->capture_default_str();
  gen->add_option("--n", n)->capture_default_str();
  gen->add_option("--m", m)->capture_default_str();
  gen->add_option("--k", k)->capture_default_str();
  gen->add_option("--rg", rg, "rank of G0 (quadratic recipe)")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out, "output file (stdout if omitted)");

  CLI::App* run = app.add_subcommand("run", "Run the experiment pipeline for a config file");
  run->add_option("--config", config)->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "override output_dir");

  CLI::App* cert = app.add_subcommand("certify", "Search, build and verify a certificate");
  cert->add_option("--instance", instance)->required()->check(CLI::ExistingFile);
  cert->add_option("--kind", kind, "p1 or p2")->capture_default_str();
  cert->add_option("--samples", samples, "sampled decrease checks")->capture_default_str();
  cert->add_option("--out", out, "output file (stdout if omitted)");

  CLI::App* report = app.add_subcommand("report", "Summarize run directories");
  report->add_option("--dir", dir)->required()->check(CLI::ExistingDirectory);

  CLI::App* batch = app.add_subcommand("batch", "Run a config over several eta values and seeds");
  batch->add_option("--config", config)->required()->check(CLI::ExistingFile);
  batch->add_option("--etas", etas, "comma-separated uniform time constants")->capture_default_str();
  batch->add_option("--seeds", seeds, "comma-separated seeds (config seed if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(recipe, n, m, k, rg, seed, out);
    if (*run) return cmd_run(config, out);
    if (*cert) return cmd_certify(instance, kind, samples, out);
    if (*report) return cmd_report(dir);
    if (*batch) return cmd_batch(config, etas, seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
