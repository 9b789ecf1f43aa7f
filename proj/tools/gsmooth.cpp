#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gsmooth/gsmooth.hpp>

namespace fs = std::filesystem;
using namespace gsmooth;

namespace {

struct TheoremArgs {
  std::string theorem = "adam-rho-lt-2";
  std::string objective = "quartic";
  std::size_t dim = 0;
  double eps = 0.3, delta = 0.1, sigma = 0.1, lambda = 1.0;
  std::optional<double> beta_sq;
  bool search = false;
  Calibration calib;
};

void add_theorem_flags(CLI::App* c, TheoremArgs& a) {
  c->add_option("--theorem", a.theorem, "adam-rho-lt-2 | adam-rho-lt-1 | vradam-rho-lt-2 | vradam-rho-lt-1")
      ->check(CLI::IsMember({"adam-rho-lt-2", "adam-rho-lt-1", "vradam-rho-lt-2", "vradam-rho-lt-1"}));
  c->add_option("--objective", a.objective, "builtin objective name");
  c->add_option("--dim", a.dim, "dimension (default 10, 2 for rosenbrock_like)");
  c->add_option("--eps", a.eps, "target gradient norm");
  c->add_option("--delta", a.delta, "failure probability");
  c->add_option("--sigma", a.sigma, "noise bound");
  c->add_option("--lambda", a.lambda, "adaptive stepsize floor");
  c->add_option("--beta-sq", a.beta_sq, "second-moment parameter");
  c->add_flag("--search", a.search, "grid-search the calibration constants");
  c->add_option("--c1", a.calib.c1);
  c->add_option("--c2", a.calib.c2);
  c->add_option("--c", a.calib.c);
  c->add_option("--C1", a.calib.C1);
  c->add_option("--C2", a.calib.C2);
  c->add_option("--C", a.calib.C);
}

int cmd_params(const TheoremArgs& a) {
  const bool vr = a.theorem.rfind("vradam", 0) == 0;
  const Variant var = a.theorem.find("lt-1") != std::string::npos ? Variant::rho_lt_1 : Variant::rho_lt_2;
  const std::size_t dim = a.dim ? a.dim : (a.objective == "rosenbrock_like" ? 2 : 10);
  const ObjectiveSpec spec = builtin(a.objective, dim);
  const Problem p = make_problem(spec, spec.x1_default, a.sigma, a.lambda, a.delta, a.eps);
  std::optional<Schedule> s;
  if (a.search) {
    s = vr ? calibrate_vradam(p, var, a.beta_sq) : calibrate_adam(p, var, a.beta_sq);
    if (!s) throw ConfigError("calibration search found no admissible constants");
  } else {
    s = vr ? schedule_vradam(p, var, a.calib, a.beta_sq) : schedule_adam(p, var, a.calib, a.beta_sq);
  }
  json j = schedule_json(*s);
  j["objective"] = a.objective;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out, bool canonical,
            std::optional<unsigned> workers) {
  ExperimentConfig cfg = load_config(path);
  apply_seed_env(cfg);
  if (seed) cfg.master_seed = *seed;
  if (!out.empty()) cfg.output.dir = out;
  if (canonical) cfg.output.canonical = true;
  if (workers) cfg.workers = *workers;
  const ExperimentResult r = run_experiment(cfg);
  std::cout << to_json(r.aggregate, cfg.output.canonical).dump(2) << '\n';
  return r.exit_code;
}

int cmd_verify() {
  int fails = 0;
  for (const auto& row : verify_all()) {
    std::printf("%-4s  %-40s  %s\n", row.pass ? "PASS" : "FAIL", row.name.c_str(), row.detail.c_str());
    if (!row.pass) ++fails;
  }
  std::printf("%d failed\n", fails);
  return fails ? 1 : 0;
}

int cmd_certify(const std::string& name, std::size_t dim, std::size_t samples, std::uint64_t seed,
                std::optional<double> fit_rho) {
  if (!dim) dim = name == "rosenbrock_like" ? 2 : 10;
  const ObjectiveSpec spec = builtin(name, dim);
  RngStream rng(seed, 0);
  json j;
  j["objective"] = name;
  j["dim"] = dim;
  if (fit_rho) {
    const SmoothConstants c = fit_l0lrho(spec, *fit_rho, samples, rng, spec.sample_box);
    j["fitted"] = {{"L0", c.L0}, {"Lrho", c.Lrho}, {"rho", c.rho}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  const CertificationReport rep = certify_l0lrho(spec, samples, rng);
  j["constants"] = {{"L0", spec.constants.L0}, {"Lrho", spec.constants.Lrho}, {"rho", spec.constants.rho}};
  j["samples_checked"] = rep.samples_checked;
  j["violations"] = rep.violations.size();
  j["certified_globally"] = spec.certified_globally;
  j["passed"] = rep.passed();
  std::cout << j.dump(2) << '\n';
  return rep.passed() ? 0 : 1;
}

std::string cell_name(const std::string& obj, double eps, double sigma) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_eps%g_sigma%g", obj.c_str(), eps, sigma);
  return buf;
}

int cmd_sweep(const std::string& path, std::vector<std::string> objectives, std::vector<double> epss,
              std::vector<double> sigmas, const std::string& out) {
  const ExperimentConfig base = load_config(path);
  if (objectives.empty()) objectives = {base.objective};
  if (epss.empty()) epss = {base.schedule.eps.value_or(0.3)};
  if (sigmas.empty()) sigmas = {base.noise.sigma};
  int code = 0;
  json index = json::array();
  for (const auto& obj : objectives)
    for (double eps : epss)
      for (double sigma : sigmas) {
        ExperimentConfig cfg = base;
        apply_seed_env(cfg);
        if (obj != base.objective) {
          cfg.objective = obj;
          cfg.x1.reset();
          if (obj == "rosenbrock_like" && cfg.dim % 2) cfg.dim = 2;
        }
        cfg.schedule.eps = eps;
        cfg.noise.sigma = sigma;
        if (sigma > 0.0 && cfg.noise.kind == NoiseKind::zero) cfg.noise.kind = NoiseKind::sphere;
        const std::string name = cell_name(obj, eps, sigma);
        cfg.output.dir = out + "/" + name;
        json row = {{"cell", name}, {"objective", obj}, {"eps", eps}, {"sigma", sigma}};
        try {
          const ExperimentResult r = run_experiment(cfg);
          row["exit_code"] = r.exit_code;
          code = std::max(code, r.exit_code);
        } catch (const ConfigError& e) {
          row["error"] = e.what();
          row["exit_code"] = 2;
        }
        std::cout << row.dump() << '\n';
        index.push_back(row);
      }
  fs::create_directories(out);
  write_json(out + "/sweep.json", index);
  return code;
}

std::vector<Row> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> c;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() != 11) throw ConfigError("malformed CSV row in " + path);
    Row r;
    r.t = std::stoull(c[0]);
    r.f = std::strtod(c[1].c_str(), nullptr);
    r.grad_norm = std::strtod(c[2].c_str(), nullptr);
    r.eps_norm = std::strtod(c[3].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

int cmd_plot(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("no such run directory: " + dir);
  const std::regex pat("run([0-9]+)\\.csv");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (std::regex_match(e.path().filename().string(), pat)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::smatch m;
    const std::string fn = f.filename().string();
    std::regex_match(fn, m, pat);
    write_plots(dir + "/plots", std::stoull(m[1]), read_csv(f.string()));
  }
  std::printf("%zu runs plotted into %s/plots\n", files.size(), dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsmooth: Adam and VRAdam under (L0,Lrho) smoothness"};
  app.require_subcommand(1);

  TheoremArgs targs;
  auto* params = app.add_subcommand("params", "print a theorem schedule as JSON");
  add_theorem_flags(params, targs);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool canonical = false;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config, "experiment JSON")->required();
  run->add_option("--seed", seed, "master seed (default 42)");
  run->add_option("--out", out, "output directory");
  run->add_flag("--canonical", canonical, "omit wall-clock fields");
  run->add_option("--workers", workers, "worker threads");

  auto* verify = app.add_subcommand("verify", "run the standalone verifiers");

  std::string cname = "quartic";
  std::size_t cdim = 0, csamples = 10000;
  std::uint64_t cseed = 42;
  std::optional<double> fit_rho;
  auto* certify = app.add_subcommand("certify", "check (L0,Lrho) constants of a builtin");
  certify->add_option("--objective", cname)->required();
  certify->add_option("--dim", cdim);
  certify->add_option("--samples", csamples);
  certify->add_option("--seed", cseed);
  certify->add_option("--fit-rho", fit_rho, "fit constants for this rho instead");

  std::vector<std::string> sobj;
  std::vector<double> seps, ssig;
  std::string sconfig, sout = "sweep";
  auto* sweep = app.add_subcommand("sweep", "grid over objective, eps and sigma");
  sweep->add_option("--config", sconfig, "base experiment JSON")->required();
  sweep->add_option("--objective", sobj)->delimiter(',');
  sweep->add_option("--eps", seps)->delimiter(',');
  sweep->add_option("--sigma", ssig)->delimiter(',');
  sweep->add_option("--out", sout);

  std::string pdir;
  auto* plot = app.add_subcommand("plot", "write SVG curves for a run directory");
  plot->add_option("--dir", pdir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*params) return cmd_params(targs);
    if (*run) return cmd_run(config, seed, out, canonical, workers);
    if (*verify) return cmd_verify();
    if (*certify) return cmd_certify(cname, cdim, csamples, cseed, fit_rho);
    if (*sweep) return cmd_sweep(sconfig, sobj, seps, ssig, sout);
    if (*plot) return cmd_plot(pdir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
