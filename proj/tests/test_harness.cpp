#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gsmooth/harness.hpp>

using namespace gsmooth;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"({"objective":{"name":"quartic","dim":4},"noise":{"kind":"sphere","sigma":0.1},
  "algorithm":"adam_rescaled",
  "schedule":{"mode":"explicit","beta":0.9,"eta":0.001,"lambda":1,"T":500,"eps":0.3},
  "runs":4,"output":{"canonical":true}})";

json base() { return json::parse(kBase); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path tmpdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gsmooth_test_" + name);
  fs::remove_all(p);
  return p;
}

int sh_raw(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int sh(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, StrictKeys) {
  json j = base();
  j["objective"]["dimm"] = 3;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["extra"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["schedule"]["variant"] = "rho_lt_2";  // not an explicit-mode key
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, Validation) {
  json j = base();
  j["runs"] = 0;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["schedule"]["delta"] = 1.5;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["schedule"]["eps"] = 0;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["schedule"].erase("eta");
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["schedule"]["eta"] = "big";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["noise"]["kind"] = "cauchy";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["checks"] = {{"enabled", {"C4.descent", "Z.bogus"}}};
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base();
  j["objective"]["x1"] = {1.0, 2.0};
  EXPECT_THROW(resolve(parse_config(j)), ConfigError);
  j = base();
  j["objective"] = {{"name", "rational_inv"}, {"dim", 2}, {"x1", {-1.0, 1.0}}};
  EXPECT_THROW(resolve(parse_config(j)), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ExplicitDefaultsG) {
  const Resolved r = resolve(parse_config(base()));
  const double g1 = norm2(r.spec.gradient(r.x1));
  EXPECT_DOUBLE_EQ(r.tc.G, std::max({2.0, 0.2, 2.0 * g1}));
  EXPECT_EQ(r.tc.mode, DMode::adam_matched);
  EXPECT_EQ(r.hp.beta_sq, 0.9);
}

TEST(Config, TheoremMode) {
  json j = base();
  j["objective"] = {{"name", "quartic"}, {"dim", 10}};
  j["noise"] = {{"kind", "sphere"}, {"sigma", 0.03}};
  j["schedule"] = {{"mode", "theorem"}, {"variant", "rho_lt_1"}, {"lambda", 100}, {"delta", 0.1}, {"eps", 0.3},
                   {"calibration", {{"search", true}}}};
  const Resolved r = resolve(parse_config(j));
  ASSERT_TRUE(r.schedule.has_value());
  EXPECT_TRUE(r.schedule->cq.passed());
  EXPECT_EQ(r.hp.T, r.schedule->hp.T);
}

TEST(Harness, GoldenQuadraticRun) {
  json j = json::parse(R"({"objective":{"name":"quadratic","dim":3},"noise":{"kind":"zero"},
    "schedule":{"mode":"explicit","beta":0.9,"eta":0.1,"lambda":1,"T":1000},"runs":1})");
  const ExperimentResult r = run_experiment(parse_config(j));
  ASSERT_EQ(r.runs.size(), 1u);
  const RunSummary& s = r.runs[0];
  EXPECT_EQ(s.tau, 1001u);
  ASSERT_TRUE(s.avg_sq_grad.has_value());
  // the t = 1 term alone contributes 3/T, so the average is pinned to its golden value
  EXPECT_NEAR(*s.avg_sq_grad, 0.025973, 1e-5);
  EXPECT_LT(s.final_f, 1e-8);
  for (const auto& [k, c] : s.violations) EXPECT_EQ(c.violated, 0u) << k;
  EXPECT_EQ(r.exit_code, 0);
}

TEST(Harness, ByteIdenticalOutputs) {
  json j = base();
  const fs::path a = tmpdir("det_a"), b = tmpdir("det_b");
  j["output"]["dir"] = a.string();
  j["workers"] = 1;
  run_experiment(parse_config(j));
  j["output"]["dir"] = b.string();
  j["workers"] = 3;
  run_experiment(parse_config(j));
  for (const char* f : {"config.json", "aggregate.json", "run000.csv", "run003.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Harness, CsvLayout) {
  json j = base();
  const fs::path d = tmpdir("csv");
  j["output"]["dir"] = d.string();
  j["runs"] = 1;
  run_experiment(parse_config(j));
  std::ifstream in(d / "run000.csv");
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "t,f,grad_norm,eps_norm,gamma_norm,w_norm,update_norm,step_min,step_max,descent_residual,tau_flag");
  std::getline(in, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
  const std::string f = row.substr(2, row.find(',', 2) - 2);
  EXPECT_EQ(std::strtod(f.c_str(), nullptr), builtin("quartic", 4).value(builtin("quartic", 4).x1_default));
  std::size_t lines = 1;
  while (std::getline(in, row)) ++lines;
  EXPECT_EQ(lines, 500u);
}

TEST(Harness, AggregateShape) {
  json j = base();
  const fs::path d = tmpdir("agg");
  j["output"]["dir"] = d.string();
  run_experiment(parse_config(j));
  const json a = json::parse(slurp(d / "aggregate.json"));
  EXPECT_FALSE(a.contains("wall_clock_s"));
  for (const char* k : {"fraction_tau_full", "fraction_avg_sq_grad_ok", "fraction_upper_flag"}) {
    EXPECT_GE(a[k].get<double>(), 0.0);
    EXPECT_LE(a[k].get<double>(), 1.0);
  }
  for (auto it = a["violation_totals"].begin(); it != a["violation_totals"].end(); ++it)
    EXPECT_TRUE(parse_lemma_id(it.key()).has_value()) << it.key();
  EXPECT_EQ(a["run_summaries"].size(), 4u);
  EXPECT_EQ(a["run_summaries"][2]["run_id"], 2);
  const json c = json::parse(slurp(d / "config.json"));
  EXPECT_EQ(c["hyperparams"]["T"], 500);
}

TEST(Harness, WallClockOutsideCanonical) {
  json j = base();
  j["output"]["canonical"] = false;
  j["runs"] = 1;
  const ExperimentResult r = run_experiment(parse_config(j));
  EXPECT_TRUE(to_json(r.aggregate, false).contains("wall_clock_s"));
}

TEST(Harness, SeedChangesOutput) {
  json j = base();
  j["runs"] = 1;
  j["master_seed"] = 1;
  const auto a = run_experiment(parse_config(j)).runs[0].final_f;
  j["master_seed"] = 2;
  const auto b = run_experiment(parse_config(j)).runs[0].final_f;
  EXPECT_NE(a, b);
}

TEST(Harness, SeedEnvOverride) {
  ExperimentConfig c = parse_config(base());
  ::setenv("GSMOOTH_SEED", "977", 1);
  apply_seed_env(c);
  ::unsetenv("GSMOOTH_SEED");
  EXPECT_EQ(c.master_seed, 977u);
  ::setenv("GSMOOTH_SEED", "abc", 1);
  EXPECT_THROW(apply_seed_env(c), ConfigError);
  ::unsetenv("GSMOOTH_SEED");
}

TEST(Harness, CsvStride) {
  EXPECT_EQ(csv_stride(1000), 1u);
  EXPECT_EQ(csv_stride(1'000'000), 1u);
  EXPECT_EQ(csv_stride(1'000'001), 2u);
  EXPECT_LE((3'500'000 + csv_stride(3'500'000) - 1) / csv_stride(3'500'000), 1'000'000u);
}

TEST(Harness, DivergentRunIsRecordedNotFatal) {
  json j = json::parse(R"({"objective":{"name":"double_exp","dim":1},"noise":{"kind":"sphere","sigma":10},
    "schedule":{"mode":"explicit","beta":1,"eta":8,"lambda":1e-6,"T":100},"runs":2})");
  const ExperimentResult r = run_experiment(parse_config(j));
  EXPECT_TRUE(r.runs[0].aborted_at.has_value());
  EXPECT_EQ(r.aggregate.aborted, 2u);
}

#ifdef GSMOOTH_CLI
TEST(Cli, ExitCodes) {
  const std::string cli = GSMOOTH_CLI;
  EXPECT_EQ(sh(cli + " run --config /nonexistent.json"), 2);
  EXPECT_EQ(sh(cli + " frobnicate"), 2);
  EXPECT_EQ(sh(cli + " params --no-such-flag"), 2);
  EXPECT_EQ(sh(cli + " params --theorem adam-rho-lt-1 --objective exp1d"), 2);
  EXPECT_EQ(sh(cli + " certify --objective quadratic --samples 1000"), 0);
}

TEST(Cli, ParamsKeys) {
  const fs::path out = tmpdir("params") ;
  fs::create_directories(out);
  const std::string cli = GSMOOTH_CLI;
  ASSERT_EQ(sh_raw(cli + " params --theorem adam-rho-lt-1 --objective quartic --eps 0.3 --delta 0.1 > " +
               (out / "p.json").string()),
            0);
  const json p = json::parse(slurp(out / "p.json"));
  for (const char* k : {"G", "r", "L", "D", "beta", "beta_sq", "eta", "T"}) EXPECT_TRUE(p.contains(k)) << k;
}

TEST(Cli, RunAndPlot) {
  const fs::path d = tmpdir("cli_run");
  fs::create_directories(d);
  json j = base();
  j["runs"] = 2;
  std::ofstream(d / "cfg.json") << j.dump();
  const std::string cli = GSMOOTH_CLI;
  EXPECT_EQ(sh(cli + " run --config " + (d / "cfg.json").string() + " --out " + (d / "o").string()), 0);
  EXPECT_TRUE(fs::exists(d / "o" / "run001.csv"));
  EXPECT_EQ(sh(cli + " plot --dir " + (d / "o").string()), 0);
  EXPECT_TRUE(fs::exists(d / "o" / "plots" / "run001_grad_norm.svg"));
  EXPECT_EQ(sh(cli + " sweep --config " + (d / "cfg.json").string() + " --eps 0.3,0.5 --sigma 0,0.1 --out " +
               (d / "sw").string()),
            0);
  EXPECT_TRUE(fs::exists(d / "sw" / "quartic_eps0.5_sigma0.1" / "aggregate.json"));
}
#endif

TEST(Harness, ShippedConfigsParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(GSMOOTH_CONFIGS)) {
    SCOPED_TRACE(e.path().string());
    const ExperimentConfig c = load_config(e.path().string());
    EXPECT_NO_THROW(resolve(c));
    ++n;
  }
  EXPECT_GE(n, 3);
}
