// One line per acceptance criterion; exit status 1 if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <gsmooth/gsmooth.hpp>

using namespace gsmooth;
namespace fs = std::filesystem;

namespace {

// Counters accumulated over every run the acceptance suite performs.
struct Tally {
  std::map<std::string, CheckCounter> matched;  // runs with β = β_sq
  std::map<std::string, CheckCounter> all;
  std::uint64_t runs = 0, lower_applicable = 0, lower_violations = 0;

  void add(const std::vector<RunSummary>& rs, bool beta_matched) {
    for (const auto& s : rs) {
      ++runs;
      if (s.lower_check_applicable) {
        ++lower_applicable;
        if (!s.lower_holds) ++lower_violations;
      }
      for (const auto& [k, c] : s.violations) {
        for (auto* m : {&all, beta_matched ? &matched : nullptr}) {
          if (!m) continue;
          auto& t = (*m)[k];
          t.checked += c.checked;
          t.skipped += c.skipped;
          t.violated += c.violated;
        }
      }
    }
  }
};

Tally tally;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string counter_text(const std::map<std::string, CheckCounter>& m, const std::string& k) {
  auto it = m.find(k);
  if (it == m.end()) return k + " 0/0";
  return k + " " + std::to_string(it->second.violated) + "/" + std::to_string(it->second.checked);
}

bool clean(const std::map<std::string, CheckCounter>& m, const std::string& k) {
  auto it = m.find(k);
  return it != m.end() && it->second.checked > 0 && it->second.violated == 0;
}

ExperimentResult run_json(const json& j, bool beta_matched) {
  ExperimentResult r = run_experiment(parse_config(j));
  tally.add(r.runs, beta_matched);
  return r;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || s <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] C%d %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

// Explicit-mode config with η set to min{r/D, σβ/(DL)}.
json moment_config(const std::string& name, std::size_t dim, double sigma, double beta, std::uint64_t T) {
  json j = {{"objective", {{"name", name}, {"dim", dim}}},
            {"noise", {{"kind", "sphere"}, {"sigma", sigma}}},
            {"algorithm", "adam_rescaled"},
            {"schedule", {{"mode", "explicit"}, {"beta", beta}, {"eta", 1.0}, {"lambda", 1.0}, {"T", T}}},
            {"runs", 100}};
  const Resolved r = resolve(parse_config(j));
  const auto& tc = r.tc;
  j["schedule"]["eta"] = std::min(tc.r / tc.D, sigma * beta / (tc.D * tc.L));
  return j;
}

std::vector<ExperimentResult> c4_results;

}  // namespace

int main() {
  criterion(1, "raw vs rescaled Adam", 5.0, [] {
    const VerifierRow row = verify_equivalence(10, 10000);
    return Outcome{row.pass, row.detail + " (limit 1e-9)"};
  });

  criterion(3, "alpha-sum bound", 1.0, [] {
    int bad = 0, n = 0;
    for (const auto& r : verify_alpha_sums()) {
      ++n;
      if (!r.pass) ++bad;
    }
    return Outcome{bad == 0, std::to_string(n - bad) + "/" + std::to_string(n) + " grid points pass"};
  });

  criterion(4, "momentum-error bound", 0, [] {
    std::string d;
    bool ok = true;
    for (const char* name : {"quartic", "rational_barrier"}) {
      ExperimentResult r = run_json(moment_config(name, 10, 0.1, 0.1, 2000), true);
      const auto& m = r.aggregate.totals;
      ok = ok && clean(m, "C3.moment") && m.at("C3.moment").skipped == 0;
      d += std::string(name) + ": " + counter_text(m, "C3.moment") + " violated/checked; ";
      c4_results.push_back(std::move(r));
    }
    return Outcome{ok, d + "100 runs each"};
  });

  criterion(6, "gradient boundedness, quartic rho<1 schedule", 600.0, [] {
    json j = {{"objective", {{"name", "quartic"}, {"dim", 10}}},
              {"noise", {{"kind", "sphere"}, {"sigma", 0.03}}},
              {"algorithm", "adam_rescaled"},
              {"schedule",
               {{"mode", "theorem"},
                {"variant", "rho_lt_1"},
                {"lambda", 100.0},
                {"delta", 0.1},
                {"eps", 0.3},
                {"calibration", {{"search", true}}}}},
              {"runs", 200}};
    const ExperimentResult r = run_json(j, true);
    const auto& a = r.aggregate;
    const double thr = 0.9 - 3.0 * std::sqrt(0.09 / 200.0);
    const bool ok = a.frac_tau_full >= thr && a.frac_avg_ok >= thr;
    return Outcome{ok, "T=" + std::to_string(r.resolved.hp.T) + ", tau=T+1 in " + fmt("%.3f", a.frac_tau_full) +
                           ", avg<=eps^2 in " + fmt("%.3f", a.frac_avg_ok) + " (threshold " + fmt("%.3f", thr) +
                           "), upper flag " + fmt("%.3f", a.frac_upper)};
  });

  criterion(8, "I1/I2 after calibration", 1.0, [] {
    struct Case {
      const char* name;
      Variant v;
    };
    int ok = 0, n = 0;
    for (Case c : {Case{"quadratic", Variant::rho_lt_2}, Case{"quartic", Variant::rho_lt_1},
                   Case{"rational_barrier", Variant::rho_lt_2}})
      for (double eps : {0.5, 0.3}) {
        ++n;
        const ObjectiveSpec s = builtin(c.name, 10);
        const auto sc = calibrate_adam(make_problem(s, s.x1_default, 0.1, 1.0, 0.1, eps), c.v);
        if (sc && sc->cq.I1_le_I2 && sc->cq.avg_le_eps2) ++ok;
      }
    return Outcome{ok == n, std::to_string(ok) + "/" + std::to_string(n) + " schedules pass both flags"};
  });

  criterion(9, "VRAdam chain", 600.0, [] {
    json j = {{"objective", {{"name", "quartic"}, {"dim", 10}, {"x1", std::vector<double>(10, 0.1 / std::sqrt(10.0))}}},
              {"noise", {{"kind", "sphere"}, {"sigma", 0.1}}},
              {"algorithm", "vradam"},
              {"schedule",
               {{"mode", "theorem"},
                {"variant", "rho_lt_1"},
                {"lambda", 20.0},
                {"delta", 0.1},
                {"eps", 0.5},
                {"calibration", {{"search", true}}}}},
              {"runs", 500}};
    const ExperimentResult r = run_json(j, false);
    const auto& a = r.aggregate;
    const auto& m = a.totals;
    const bool ident = clean(m, "D.identity");
    const bool wt = clean(m, "D4.wt");
    const bool d8 = a.mean_eps_tau_sq <= 1.2 * a.eps_tau_bound;
    const bool pi_ok = r.resolved.schedule->pi.passed();

    // zero noise, same hyperparameters
    const auto& hp = r.resolved.hp;
    json z = j;
    z["noise"] = {{"kind", "zero"}};
    z["schedule"] = {{"mode", "explicit"}, {"beta", hp.beta}, {"beta_sq", hp.beta_sq}, {"eta", hp.eta},
                     {"lambda", hp.lambda}, {"T", hp.T},       {"S1", hp.S1}};
    z["runs"] = 5;
    const ExperimentResult zr = run_json(z, false);
    double max_eps = 0.0;
    for (const auto& s : zr.runs) max_eps = std::max(max_eps, s.max_eps_norm);
    const bool zero = max_eps <= 1e-12;

    const bool ok = ident && wt && d8 && pi_ok && zero;
    return Outcome{ok, "(a) " + counter_text(m, "D.identity") + ", (b) " + counter_text(m, "D4.wt") +
                           ", (c) max|eps| " + fmt("%.3g", max_eps) + ", (d) mean|eps_tau|^2 " +
                           fmt("%.4g", a.mean_eps_tau_sq) + " vs 1.2*" + fmt("%.4g", a.eps_tau_bound) +
                           ", parameter inequalities " + (pi_ok ? "hold" : "fail") + ", T=" + std::to_string(hp.T)};
  });

  criterion(7, "lower-bound contradiction arm", 0, [] {
    json j = json::parse(R"({"objective":{"name":"rosenbrock_like","dim":2,"x1":[0,0]},
      "noise":{"kind":"sphere","sigma":0.01},"algorithm":"adam_rescaled",
      "schedule":{"mode":"explicit","beta":0.0003,"eta":1,"lambda":1e-6,"T":100000},"runs":5})");
    const Resolved base = resolve(parse_config(j));
    const auto& tc = base.tc;
    const double cap = std::min(tc.r / tc.D, tc.G / (4.0 * tc.D * tc.L));
    // raise η by doubling until a probe shows τ ≤ T, never beyond the cap
    double eta = cap / 256.0;
    for (;;) {
      j["schedule"]["eta"] = eta;
      const ExperimentResult probe = run_experiment(parse_config(j));
      bool stopped = false;
      for (const auto& s : probe.runs) stopped |= s.tau <= probe.resolved.hp.T;
      if (stopped || eta >= cap) break;
      eta = std::min(2.0 * eta, cap);
    }
    j["runs"] = 50;
    const std::uint64_t before_app = tally.lower_applicable, before_v = tally.lower_violations;
    const ExperimentResult r = run_json(j, true);
    const std::uint64_t app = tally.lower_applicable - before_app, viol = tally.lower_violations - before_v;
    const bool stress_ok = app > 0 && viol == 0;
    const bool global_ok = tally.lower_violations == 0;
    return Outcome{stress_ok && global_ok, "stress eta=" + fmt("%.4g", eta) + " (cap " + fmt("%.4g", cap) + "): " +
                                               std::to_string(app) + "/50 runs with tau<=T, " + std::to_string(viol) +
                                               " violations; all acceptance runs: " +
                                               std::to_string(tally.lower_applicable) + " checked, " +
                                               std::to_string(tally.lower_violations) + " violations"};
  });

  criterion(2, "Jensen and update bound", 0, [] {
    const auto& m = tally.matched;
    const bool ok = clean(m, "update.jensen") && clean(m, "update.bound");
    return Outcome{ok, counter_text(m, "update.jensen") + ", " + counter_text(m, "update.bound") +
                           " violated/checked steps over matched-beta runs"};
  });

  criterion(5, "descent inequality", 0, [] {
    const auto& m = tally.all;
    const bool ok = clean(m, "C4.descent") && clean(m, "D6.descent");
    return Outcome{ok, counter_text(m, "C4.descent") + ", " + counter_text(m, "D6.descent") +
                           " violated/checked over " + std::to_string(tally.runs) + " runs"};
  });

  criterion(10, "analytical verifiers", 30.0, [] {
    std::vector<VerifierRow> rows;
    rows.push_back(verify_gronwall_l0l1());
    for (auto& r : verify_local_smoothness_all(10000)) rows.push_back(std::move(r));
    for (auto& r : verify_counterexamples(10.0, 10.0)) rows.push_back(std::move(r));
    std::string bad;
    for (const auto& r : rows)
      if (!r.pass) bad += r.name + " (" + r.detail + "); ";
    return Outcome{bad.empty(), bad.empty() ? rows[0].detail + ", local smoothness 0 violations on 7 builtins, "
                                              "counterexamples strict"
                                            : bad};
  });

  criterion(11, "determinism", 0, [] {
    const fs::path root = fs::temp_directory_path() / "gsmooth_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);
    json j = json::parse(R"({"objective":{"name":"quartic","dim":10},"noise":{"kind":"sphere","sigma":0.1},
      "algorithm":"adam_rescaled","schedule":{"mode":"explicit","beta":0.9,"eta":0.001,"lambda":1,"T":2000},
      "runs":3,"master_seed":42})");
    std::ofstream(root / "cfg.json") << j.dump(2);
    const std::string cli = GSMOOTH_CLI;
    for (const char* out : {"a", "b"}) {
      const std::string cmd = cli + " run --canonical --config " + (root / "cfg.json").string() + " --out " +
                              (root / out).string() + " > /dev/null";
      const int rc = std::system(cmd.c_str());
      if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) return Outcome{false, "run failed: " + cmd};
    }
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    int files = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
      const fs::path other = root / "b" / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other))
        return Outcome{false, e.path().filename().string() + " differs"};
      ++files;
    }
    return Outcome{files == 5, std::to_string(files) + " files byte-identical across two CLI runs"};
  });

  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
