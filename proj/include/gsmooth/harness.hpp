#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "monitor.hpp"
#include "objectives.hpp"
#include "optimizers.hpp"
#include "oracle.hpp"
#include "theory.hpp"

namespace gsmooth {

using json = nlohmann::json;

inline constexpr std::uint64_t kMaxRunT = 2'000'000'000ULL;
inline constexpr std::uint64_t kMaxCsvRows = 1'000'000ULL;

struct ScheduleConfig {
  bool theorem = false;
  // explicit
  HyperParams hp;
  std::optional<double> G;
  std::optional<DMode> d_mode;
  // theorem
  Variant variant = Variant::rho_lt_2;
  bool calibrate = false;
  Calibration calib;
  std::optional<double> beta_sq;
  // both
  double lambda = 1.0;
  double delta = 0.1;
  std::optional<double> eps;
};

struct OutputConfig {
  std::string dir;
  bool csv = true;
  bool plots = false;
  bool canonical = false;
};

struct ExperimentConfig {
  std::string objective = "quartic";
  std::size_t dim = 10;
  std::optional<Vector> x1;
  NoiseModel noise;
  Algorithm algorithm = Algorithm::adam_rescaled;
  ScheduleConfig schedule;
  std::uint64_t runs = 1;
  std::uint64_t master_seed = 42;
  LemmaCheckConfig checks;
  OutputConfig output;
  unsigned workers = 0;
};

namespace detail {

inline void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

template <class T>
std::optional<T> opt(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return get<T>(j, key, where);
}

inline Variant parse_variant(const std::string& s) {
  if (s == "rho_lt_2" || s == "rho-lt-2") return Variant::rho_lt_2;
  if (s == "rho_lt_1" || s == "rho-lt-1") return Variant::rho_lt_1;
  throw ConfigError("unknown schedule variant: " + s);
}

inline DMode parse_dmode(const std::string& s) {
  if (s == "adam_matched") return DMode::adam_matched;
  if (s == "adam_general") return DMode::adam_general;
  if (s == "vr_thm1") return DMode::vr_thm1;
  if (s == "vr_thm2") return DMode::vr_thm2;
  throw ConfigError("unknown d_mode: " + s);
}

}  // namespace detail

inline std::string to_string(Variant v) { return v == Variant::rho_lt_2 ? "rho_lt_2" : "rho_lt_1"; }

inline std::string to_string(DMode m) {
  switch (m) {
    case DMode::adam_matched: return "adam_matched";
    case DMode::adam_general: return "adam_general";
    case DMode::vr_thm1: return "vr_thm1";
    case DMode::vr_thm2: return "vr_thm2";
  }
  return "?";
}

inline ExperimentConfig parse_config(const json& j) {
  using detail::get;
  using detail::only_keys;
  using detail::opt;
  only_keys(j, {"objective", "noise", "algorithm", "schedule", "runs", "master_seed", "checks", "output", "workers"},
            "config");
  ExperimentConfig c;

  const json& o = j.at("objective");
  only_keys(o, {"name", "dim", "x1"}, "objective");
  c.objective = get<std::string>(o, "name", "objective");
  c.dim = opt<std::size_t>(o, "dim", "objective").value_or(c.objective == "rosenbrock_like" ? 2 : 10);
  if (auto x = opt<std::vector<double>>(o, "x1", "objective")) c.x1 = Vector(*x);

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    only_keys(n, {"kind", "sigma", "component"}, "noise");
    c.noise.kind = parse_noise_kind(get<std::string>(n, "kind", "noise"));
    c.noise.sigma = opt<double>(n, "sigma", "noise").value_or(0.0);
    if (auto m = opt<std::string>(n, "component", "noise")) c.noise.component = parse_component_model(*m);
    if (!(c.noise.sigma >= 0.0)) throw ConfigError("noise.sigma must be nonnegative");
  }

  if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());

  const json& s = j.at("schedule");
  const std::string mode = get<std::string>(s, "mode", "schedule");
  auto& sc = c.schedule;
  if (mode == "explicit") {
    only_keys(s, {"mode", "beta", "beta_sq", "eta", "lambda", "T", "S1", "G", "delta", "eps", "d_mode"}, "schedule");
    sc.hp.beta = get<double>(s, "beta", "schedule");
    sc.hp.beta_sq = opt<double>(s, "beta_sq", "schedule").value_or(sc.hp.beta);
    sc.hp.eta = get<double>(s, "eta", "schedule");
    sc.hp.lambda = sc.lambda = get<double>(s, "lambda", "schedule");
    sc.hp.T = get<std::uint64_t>(s, "T", "schedule");
    sc.hp.S1 = opt<std::uint64_t>(s, "S1", "schedule").value_or(1);
    sc.G = opt<double>(s, "G", "schedule");
    sc.delta = opt<double>(s, "delta", "schedule").value_or(0.1);
    sc.eps = opt<double>(s, "eps", "schedule");
    if (auto d = opt<std::string>(s, "d_mode", "schedule")) sc.d_mode = detail::parse_dmode(*d);
  } else if (mode == "theorem") {
    only_keys(s, {"mode", "variant", "lambda", "delta", "eps", "beta_sq", "calibration"}, "schedule");
    sc.theorem = true;
    sc.variant = detail::parse_variant(get<std::string>(s, "variant", "schedule"));
    sc.lambda = get<double>(s, "lambda", "schedule");
    sc.delta = get<double>(s, "delta", "schedule");
    sc.eps = get<double>(s, "eps", "schedule");
    sc.beta_sq = opt<double>(s, "beta_sq", "schedule");
    if (s.contains("calibration")) {
      const json& cj = s.at("calibration");
      only_keys(cj, {"search", "c1", "c2", "c", "C1", "C2", "C"}, "calibration");
      sc.calibrate = opt<bool>(cj, "search", "calibration").value_or(false);
      auto& k = sc.calib;
      k.c1 = opt<double>(cj, "c1", "calibration").value_or(k.c1);
      k.c2 = opt<double>(cj, "c2", "calibration").value_or(k.c2);
      k.c = opt<double>(cj, "c", "calibration").value_or(k.c);
      k.C1 = opt<double>(cj, "C1", "calibration").value_or(k.C1);
      k.C2 = opt<double>(cj, "C2", "calibration").value_or(k.C2);
      k.C = opt<double>(cj, "C", "calibration").value_or(k.C);
    }
  } else {
    throw ConfigError("schedule.mode must be 'explicit' or 'theorem'");
  }
  if (!(sc.delta > 0.0 && sc.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (sc.eps && !(*sc.eps > 0.0)) throw ConfigError("eps must be positive");

  c.runs = opt<std::uint64_t>(j, "runs", "config").value_or(1);
  if (c.runs < 1) throw ConfigError("runs must be at least 1");
  c.master_seed = opt<std::uint64_t>(j, "master_seed", "config").value_or(42);

  if (j.contains("checks")) {
    const json& k = j.at("checks");
    only_keys(k, {"enabled", "slack_rel", "fail_policy"}, "checks");
    if (auto ids = opt<std::vector<std::string>>(k, "enabled", "checks"))
      for (const auto& id : *ids) {
        auto l = parse_lemma_id(id);
        if (!l) throw ConfigError("unknown lemma id: " + id);
        c.checks.enabled.insert(*l);
      }
    c.checks.slack_rel = opt<double>(k, "slack_rel", "checks").value_or(c.checks.slack_rel);
    if (!(c.checks.slack_rel >= 0.0)) throw ConfigError("slack_rel must be nonnegative");
    if (auto p = opt<std::string>(k, "fail_policy", "checks")) {
      if (*p == "record")
        c.checks.fail_policy = FailPolicy::record;
      else if (*p == "abort")
        c.checks.fail_policy = FailPolicy::abort;
      else
        throw ConfigError("fail_policy must be 'record' or 'abort'");
    }
  }
  if (j.contains("output")) {
    const json& k = j.at("output");
    only_keys(k, {"dir", "csv", "plots", "canonical"}, "output");
    c.output.dir = opt<std::string>(k, "dir", "output").value_or("");
    c.output.csv = opt<bool>(k, "csv", "output").value_or(true);
    c.output.plots = opt<bool>(k, "plots", "output").value_or(false);
    c.output.canonical = opt<bool>(k, "canonical", "output").value_or(false);
  }
  c.workers = opt<unsigned>(j, "workers", "config").value_or(0);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// Everything a run needs, with the schedule evaluated.
struct Resolved {
  ExperimentConfig cfg;
  ObjectiveSpec spec;
  Vector x1;
  HyperParams hp;
  TheoryConstants tc;
  std::optional<Schedule> schedule;
};

inline Resolved resolve(const ExperimentConfig& cfg) {
  Resolved r;
  r.cfg = cfg;
  r.spec = builtin(cfg.objective, cfg.dim);
  r.x1 = cfg.x1 ? *cfg.x1 : r.spec.x1_default;
  if (r.x1.size() != r.spec.dim) throw ConfigError("x1 has the wrong dimension");
  if (!r.spec.in_domain(r.x1)) throw ConfigError("x1 lies outside the objective's domain");
  const double sigma = cfg.noise.effective_sigma();
  const auto& sc = cfg.schedule;
  const bool vr = cfg.algorithm == Algorithm::vradam;

  if (sc.theorem) {
    const Problem p = make_problem(r.spec, r.x1, sigma, sc.lambda, sc.delta, *sc.eps);
    std::optional<Schedule> s;
    if (sc.calibrate) {
      s = vr ? calibrate_vradam(p, sc.variant, sc.beta_sq) : calibrate_adam(p, sc.variant, sc.beta_sq);
      if (!s) throw ConfigError("calibration search found no admissible constants");
    } else {
      s = vr ? schedule_vradam(p, sc.variant, sc.calib, sc.beta_sq) : schedule_adam(p, sc.variant, sc.calib, sc.beta_sq);
    }
    if (s->T_real > static_cast<double>(kMaxRunT))
      throw ConfigError("schedule horizon T is too large to run (" + std::to_string(s->T_real) + ")");
    r.hp = s->hp;
    r.tc = s->tc;
    r.schedule = s;
  } else {
    r.hp = sc.hp;
    const double g1 = norm2(r.spec.gradient(r.x1));
    const double G = sc.G.value_or(std::max({2.0 * sc.lambda, 2.0 * sigma, 2.0 * g1}));
    if (!(G > 0.0)) throw ConfigError("G must be positive");
    DMode mode = sc.d_mode.value_or(vr ? DMode::vr_thm2
                                       : (r.hp.beta == r.hp.beta_sq ? DMode::adam_matched : DMode::adam_general));
    r.tc = constants(r.spec.constants, G, sc.lambda, r.spec.dim, mode, r.hp.beta_sq);
    r.tc.Delta1 = r.spec.value(r.x1) - r.spec.f_inf;
    r.tc.iota = std::log(1.0 / sc.delta);
    r.tc.delta = sc.delta;
    r.tc.eps_target = sc.eps.value_or(0.0);
    r.tc.sigma = sigma;
    r.tc.grad1_norm = g1;
    if (r.hp.T > kMaxRunT) throw ConfigError("T is too large to run");
  }
  r.hp.validate(cfg.algorithm);
  return r;
}

struct RunSummary {
  std::uint64_t run_id = 0;
  std::uint64_t tau = 0, tau1 = 0, tau2 = 0, tau_half = 0;
  std::optional<double> avg_sq_grad;
  bool avg_ok = false;
  double max_grad_norm = 0.0;
  double final_f = 0.0;
  double S = 0.0;
  bool upper_flag = false;
  bool lower_check_applicable = false;
  bool lower_holds = true;
  double eps_tau_sq = 0.0;
  double d7_aggregate = 0.0;
  double martingale = 0.0;
  bool martingale_exceeded = false;
  double max_identity_residual = 0.0;
  double max_eps_norm = 0.0;
  std::map<std::string, CheckCounter> violations;
  std::optional<std::uint64_t> aborted_at;
  std::string abort_cause;
  bool hard_violation = false;
};

struct RunResult {
  RunSummary summary;
  TrajectoryRecord record;
};

inline std::uint64_t csv_stride(std::uint64_t T) { return T > kMaxCsvRows ? (T + kMaxCsvRows - 1) / kMaxCsvRows : 1; }

inline RunResult run_trajectory(const Resolved& r, std::uint64_t run_id, bool keep_rows) {
  const auto& spec = r.spec;
  const auto& hp = r.hp;
  const auto& noise = r.cfg.noise;
  const std::size_t d = spec.dim;
  RngStream rng(r.cfg.master_seed, run_id);
  Monitor mon(spec, r.tc, hp, r.cfg.checks, keep_rows, csv_stride(hp.T));
  mon.begin(r.x1);

  auto fail_next = [&](std::uint64_t t) {
    if (t < hp.T) mon.mark_abort(t + 1, mon.next_error());
  };

  if (r.cfg.algorithm == Algorithm::vradam) {
    VRAdamState st;
    bool ok = true;
    try {
      const Vector m1 = megabatch_gradient(spec, r.x1, hp.S1, noise, rng);
      st = vradam_init_from(r.x1, m1, hp);
      ok = mon.observe_vradam_init(r.x1, st, m1);
      if (!ok) fail_next(1);
    } catch (const NumericalFailure& e) {
      mon.mark_abort(1, std::string("numerical failure: ") + e.what());
      ok = false;
    }
    for (std::uint64_t t = 2; ok && t <= hp.T; ++t) {
      if (mon.abort_requested()) {
        mon.mark_abort(t, "lemma violation");
        break;
      }
      const SampleTicket ticket = draw(noise, rng, d, t);
      VRAdamState next;
      Vector g_cur, g_prev;
      try {
        g_cur = mon.true_grad() + noise_term(st.x, ticket);
        g_prev = mon.prev_true_grad() + noise_term(st.x_prev, ticket);
        next = vradam_step(st, g_cur, g_prev, hp);
      } catch (const std::runtime_error& e) {
        mon.mark_abort(t, std::string("numerical failure: ") + e.what());
        break;
      }
      if (!mon.observe_vradam(st, next, g_cur, g_prev)) {
        fail_next(t);
        break;
      }
      st = std::move(next);
    }
  } else {
    AdamState st = AdamState::init(r.x1);
    const bool raw = r.cfg.algorithm == Algorithm::adam_raw;
    for (std::uint64_t t = 1; t <= hp.T; ++t) {
      if (mon.abort_requested()) {
        mon.mark_abort(t, "lemma violation");
        break;
      }
      const SampleTicket ticket = draw(noise, rng, d, t);
      const Vector g = mon.true_grad() + noise_term(st.x, ticket);
      AdamState next;
      try {
        next = raw ? adam_step_raw(st, g, hp) : adam_step_rescaled(st, g, hp);
      } catch (const NumericalFailure& e) {
        mon.mark_abort(t, std::string("numerical failure: ") + e.what());
        break;
      }
      if (!mon.observe_adam(st, next, g)) {
        fail_next(t);
        break;
      }
      st = std::move(next);
    }
  }

  const SummaryVerdict v = mon.close();
  RunResult out;
  out.record = std::move(mon.record());
  const auto& rec = out.record;
  auto& s = out.summary;
  s.run_id = run_id;
  s.tau = rec.tau;
  s.tau1 = rec.tau1;
  s.tau2 = rec.tau2;
  s.tau_half = rec.tau_half;
  s.avg_sq_grad = v.avg_sq_grad;
  s.avg_ok = v.avg_ok;
  s.max_grad_norm = rec.max_grad_norm;
  s.final_f = rec.final_f;
  s.S = v.S;
  s.upper_flag = v.upper_flag;
  s.lower_check_applicable = v.lower_applicable;
  s.lower_holds = v.lower_holds;
  s.eps_tau_sq = v.eps_tau_sq;
  s.d7_aggregate = v.d7_aggregate;
  s.martingale = v.martingale;
  s.martingale_exceeded = v.martingale_exceeded;
  s.max_identity_residual = rec.max_identity_residual;
  s.max_eps_norm = rec.max_eps_norm;
  s.violations = rec.violations_map();
  s.aborted_at = rec.aborted_at;
  s.abort_cause = rec.abort_cause;
  s.hard_violation = v.hard_violation;
  return out;
}

struct AggregateReport {
  std::uint64_t runs = 0;
  std::uint64_t aborted = 0;
  double frac_tau_full = 0.0;       // τ = T+1
  double frac_avg_ok = 0.0;         // among τ = T+1 runs
  double frac_upper = 0.0;
  double upper_threshold = 0.0;
  bool upper_ok = false;
  std::uint64_t martingale_exceeded = 0;
  double martingale_allowed = 0.0;
  bool martingale_ok = false;
  double mean_eps_tau_sq = 0.0;
  double eps_tau_bound = 0.0;  // λΔ1β/η
  double mean_d7 = 0.0;
  double d7_bound = 0.0;  // 4σ²β²T − mean ‖ε_τ‖²
  std::uint64_t lower_applicable = 0;
  std::uint64_t hard_violations = 0;
  std::map<std::string, CheckCounter> totals;
  double wall_clock_s = 0.0;
};

inline AggregateReport aggregate(const Resolved& r, const std::vector<RunSummary>& runs) {
  AggregateReport a;
  a.runs = runs.size();
  const double N = static_cast<double>(runs.size());
  std::uint64_t full = 0, avg_ok = 0, upper = 0;
  for (const auto& s : runs) {
    if (s.aborted_at) ++a.aborted;
    if (s.tau == r.hp.T + 1 && !s.aborted_at) {
      ++full;
      if (s.avg_ok) ++avg_ok;
    }
    if (s.upper_flag) ++upper;
    if (s.martingale_exceeded) ++a.martingale_exceeded;
    if (s.lower_check_applicable) ++a.lower_applicable;
    if (s.hard_violation) ++a.hard_violations;
    a.mean_eps_tau_sq += s.eps_tau_sq / N;
    a.mean_d7 += s.d7_aggregate / N;
    for (const auto& [k, c] : s.violations) {
      auto& t = a.totals[k];
      t.checked += c.checked;
      t.skipped += c.skipped;
      t.violated += c.violated;
    }
  }
  const double dl = r.tc.delta;
  a.frac_tau_full = static_cast<double>(full) / N;
  a.frac_avg_ok = full ? static_cast<double>(avg_ok) / static_cast<double>(full) : 0.0;
  a.frac_upper = static_cast<double>(upper) / N;
  a.upper_threshold = 1.0 - dl - 3.0 * std::sqrt(dl * (1.0 - dl) / N);
  a.upper_ok = a.frac_upper >= a.upper_threshold;
  a.martingale_allowed = dl * N + 3.0 * std::sqrt(dl * N);
  a.martingale_ok = static_cast<double>(a.martingale_exceeded) <= a.martingale_allowed;
  const auto& hp = r.hp;
  a.eps_tau_bound = hp.lambda * r.tc.Delta1 * hp.beta / hp.eta;
  a.d7_bound = 4.0 * r.tc.sigma * r.tc.sigma * hp.beta * hp.beta * static_cast<double>(hp.T) - a.mean_eps_tau_sq;
  return a;
}

inline json to_json(const CheckCounter& c) {
  return {{"checked", c.checked}, {"skipped", c.skipped}, {"violated", c.violated}};
}

inline json to_json(const RunSummary& s) {
  json v = json::object();
  for (const auto& [k, c] : s.violations) v[k] = to_json(c);
  return {{"run_id", s.run_id},
          {"tau", s.tau},
          {"tau1", s.tau1},
          {"tau2", s.tau2},
          {"tau_half", s.tau_half},
          {"avg_sq_grad", s.avg_sq_grad ? json(*s.avg_sq_grad) : json(nullptr)},
          {"avg_ok", s.avg_ok},
          {"max_grad_norm", s.max_grad_norm},
          {"final_f", s.final_f},
          {"S", s.S},
          {"upper_flag", s.upper_flag},
          {"lower_check_applicable", s.lower_check_applicable},
          {"lower_holds", s.lower_holds},
          {"eps_tau_sq", s.eps_tau_sq},
          {"d7_aggregate", s.d7_aggregate},
          {"martingale", s.martingale},
          {"martingale_exceeded", s.martingale_exceeded},
          {"violations", v},
          {"aborted_at", s.aborted_at ? json(*s.aborted_at) : json(nullptr)},
          {"abort_cause", s.abort_cause}};
}

inline json to_json(const HyperParams& hp) {
  return {{"beta", hp.beta}, {"beta_sq", hp.beta_sq}, {"eta", hp.eta},
          {"lambda", hp.lambda}, {"T", hp.T},           {"S1", hp.S1}};
}

inline json to_json(const TheoryConstants& tc) {
  return {{"G", tc.G},         {"r", tc.r},          {"L", tc.L},         {"D", tc.D},
          {"E", tc.E},         {"Delta1", tc.Delta1}, {"iota", tc.iota},   {"delta", tc.delta},
          {"eps", tc.eps_target}, {"sigma", tc.sigma}, {"lambda", tc.lambda}, {"grad1_norm", tc.grad1_norm},
          {"d", tc.d},         {"d_mode", to_string(tc.mode)}};
}

// Flat schedule JSON as printed by `params`.
inline json schedule_json(const Schedule& s) {
  json j = to_json(s.tc);
  const json h = to_json(s.hp);
  for (auto it = h.begin(); it != h.end(); ++it) j[it.key()] = it.value();
  j["T_real"] = s.T_real;
  j["variant"] = to_string(s.variant);
  j["algorithm"] = s.vr ? "vradam" : "adam";
  j["calibration"] = {{"c1", s.calib.c1}, {"c2", s.calib.c2}, {"c", s.calib.c},      {"C1", s.calib.C1},
                      {"C2", s.calib.C2}, {"C", s.calib.C},   {"theta", s.calib.theta}};
  if (s.vr) {
    json pi = json::array();
    for (int i = 0; i < 4; ++i) pi.push_back({{"lhs", s.pi.lhs[i]}, {"rhs", s.pi.rhs[i]}, {"holds", s.pi.holds[i]}});
    j["param_inequalities"] = pi;
  } else {
    j["I1"] = s.cq.I1;
    j["I2"] = s.cq.I2;
    j["I1_over_T"] = s.cq.I1_over_T;
    j["I1_le_I2"] = s.cq.I1_le_I2;
    j["I1_over_T_le_eps2"] = s.cq.avg_le_eps2;
  }
  return j;
}

inline json to_json(const AggregateReport& a, bool canonical) {
  json t = json::object();
  for (const auto& [k, c] : a.totals) t[k] = to_json(c);
  json j = {{"runs", a.runs},
            {"aborted", a.aborted},
            {"fraction_tau_full", a.frac_tau_full},
            {"fraction_avg_sq_grad_ok", a.frac_avg_ok},
            {"fraction_upper_flag", a.frac_upper},
            {"upper_threshold", a.upper_threshold},
            {"upper_ok", a.upper_ok},
            {"martingale_exceeded", a.martingale_exceeded},
            {"martingale_allowed", a.martingale_allowed},
            {"martingale_ok", a.martingale_ok},
            {"mean_eps_tau_sq", a.mean_eps_tau_sq},
            {"eps_tau_bound", a.eps_tau_bound},
            {"mean_d7_aggregate", a.mean_d7},
            {"d7_bound", a.d7_bound},
            {"lower_applicable", a.lower_applicable},
            {"hard_violations", a.hard_violations},
            {"violation_totals", t}};
  if (!canonical) j["wall_clock_s"] = a.wall_clock_s;
  return j;
}

inline json config_echo(const Resolved& r) {
  const auto& c = r.cfg;
  json x1 = r.x1.data();
  json j = {{"objective", {{"name", c.objective}, {"dim", c.dim}, {"x1", x1}}},
            {"noise",
             {{"kind", to_string(c.noise.kind)},
              {"sigma", c.noise.sigma},
              {"component", c.noise.component == ComponentModel::linear ? "linear" : "sinusoidal"}}},
            {"algorithm", to_string(c.algorithm)},
            {"runs", c.runs},
            {"master_seed", c.master_seed},
            {"hyperparams", to_json(r.hp)},
            {"constants", to_json(r.tc)}};
  if (r.schedule) j["schedule"] = schedule_json(*r.schedule);
  json en = json::array();
  for (auto l : c.checks.enabled) en.push_back(lemma_id(l));
  j["checks"] = {{"enabled", en},
                 {"slack_rel", c.checks.slack_rel},
                 {"fail_policy", c.checks.fail_policy == FailPolicy::record ? "record" : "abort"}};
  return j;
}

inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline const char* kCsvHeader =
    "t,f,grad_norm,eps_norm,gamma_norm,w_norm,update_norm,step_min,step_max,descent_residual,tau_flag";

inline void write_csv(const std::string& path, const std::vector<Row>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << kCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.t << ',' << fmt17(r.f) << ',' << fmt17(r.grad_norm) << ',' << fmt17(r.eps_norm) << ','
        << fmt17(r.gamma_norm) << ',' << fmt17(r.w_norm) << ',' << fmt17(r.update_norm) << ','
        << fmt17(r.step_min) << ',' << fmt17(r.step_max) << ',' << fmt17(r.descent_residual) << ',' << r.tau_flag
        << '\n';
}

inline std::string run_file_name(std::uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run%03llu.csv", static_cast<unsigned long long>(id));
  return buf;
}

// Minimal SVG line chart.
inline void write_svg(const std::string& path, const std::string& title, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  const double W = 640, H = 360, pad = 40;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    if (first) {
      x0 = x1 = xs[i];
      y0 = y1 = ys[i];
      first = false;
    }
    x0 = std::min(x0, xs[i]);
    x1 = std::max(x1, xs[i]);
    y0 = std::min(y0, ys[i]);
    y1 = std::max(y1, ys[i]);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << pad << "\" y=\"20\" font-family=\"monospace\" font-size=\"12\">" << title << " [" << fmt17(y0)
      << ", " << fmt17(y1) << "]</text>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    const double px = pad + (W - 2 * pad) * (xs[i] - x0) / (x1 - x0);
    const double py = H - pad - (H - 2 * pad) * (ys[i] - y0) / (y1 - y0);
    out << px << ',' << py << ' ';
  }
  out << "\"/>\n</svg>\n";
}

inline void write_plots(const std::string& dir, std::uint64_t id, const std::vector<Row>& rows) {
  std::filesystem::create_directories(dir);
  std::vector<double> t, f, g, e;
  for (const auto& r : rows) {
    t.push_back(static_cast<double>(r.t));
    f.push_back(r.f);
    g.push_back(r.grad_norm);
    e.push_back(r.eps_norm);
  }
  char stem[32];
  std::snprintf(stem, sizeof stem, "run%03llu", static_cast<unsigned long long>(id));
  write_svg(dir + "/" + stem + "_grad_norm.svg", "grad_norm", t, g);
  write_svg(dir + "/" + stem + "_eps_norm.svg", "eps_norm", t, e);
  write_svg(dir + "/" + stem + "_f.svg", "f", t, f);
}

struct ExperimentResult {
  Resolved resolved;
  std::vector<RunSummary> runs;
  AggregateReport aggregate;
  int exit_code = 0;
};

inline unsigned worker_count(unsigned requested, std::uint64_t runs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, runs));
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.resolved = resolve(cfg);
  const Resolved& r = res.resolved;
  const auto& out = cfg.output;
  const bool persist = !out.dir.empty();
  const bool keep_rows = persist && (out.csv || out.plots);
  if (persist) {
    std::filesystem::create_directories(out.dir);
    write_json(out.dir + "/config.json", config_echo(r));
  }

  res.runs.resize(cfg.runs);
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mu;
  std::string err;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t id = next++;
      if (id >= cfg.runs) return;
      try {
        RunResult rr = run_trajectory(r, id, keep_rows);
        if (persist && out.csv) write_csv(out.dir + "/" + run_file_name(id), rr.record.rows);
        if (persist && out.plots) write_plots(out.dir + "/plots", id, rr.record.rows);
        res.runs[id] = std::move(rr.summary);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (err.empty()) err = e.what();
      }
    }
  };
  const unsigned nw = worker_count(cfg.workers, cfg.runs);
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!err.empty()) throw std::runtime_error(err);

  res.aggregate = aggregate(r, res.runs);
  res.aggregate.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (persist) {
    json j = to_json(res.aggregate, out.canonical);
    json runs = json::array();
    for (const auto& s : res.runs) runs.push_back(to_json(s));
    j["run_summaries"] = runs;
    write_json(out.dir + "/aggregate.json", j);
  }
  res.exit_code = res.aggregate.hard_violations > 0 ? 1 : 0;
  return res;
}

// Seed override from the environment.
inline void apply_seed_env(ExperimentConfig& cfg) {
  if (const char* s = std::getenv("GSMOOTH_SEED")) {
    try {
      cfg.master_seed = std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError("GSMOOTH_SEED is not an unsigned integer");
    }
  }
}

}  // namespace gsmooth
