#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "objectives.hpp"
#include "optimizers.hpp"
#include "oracle.hpp"
#include "theory.hpp"

namespace gsmooth {

struct VerifierRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {
template <class T>
std::string str(const T& v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}
}  // namespace detail

struct EquivalenceReport {
  double max_rel_dev = 0.0;
  std::uint64_t steps = 0;
};

// Raw and rescaled Adam driven by the same samples; deviation ‖x_raw − x_res‖ / ‖x_res‖.
inline EquivalenceReport adam_equivalence(const ObjectiveSpec& spec, const Vector& x1, const NoiseModel& noise,
                                          const HyperParams& hp, std::uint64_t seed, std::uint64_t stream) {
  RngStream rng(seed, stream);
  AdamState a = AdamState::init(x1), b = AdamState::init(x1);
  EquivalenceReport rep;
  for (std::uint64_t t = 1; t <= hp.T; ++t) {
    const SampleTicket tk = draw(noise, rng, spec.dim, t);
    a = adam_step_raw(a, component_gradient(spec, a.x, tk), hp);
    b = adam_step_rescaled(b, component_gradient(spec, b.x, tk), hp);
    const double den = std::max(norm2(b.x), 1e-300);
    rep.max_rel_dev = std::max(rep.max_rel_dev, norm2(a.x - b.x) / den);
    ++rep.steps;
  }
  return rep;
}

inline VerifierRow verify_equivalence(std::uint64_t seeds = 10, std::uint64_t T = 10000, std::uint64_t master = 42) {
  const ObjectiveSpec spec = builtin("quartic", 10);
  const NoiseModel noise{NoiseKind::sphere, 0.1, ComponentModel::linear};
  HyperParams hp;
  hp.beta = hp.beta_sq = 0.9;
  hp.T = T;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < seeds; ++s)
    worst = std::max(worst, adam_equivalence(spec, spec.x1_default, noise, hp, master, s).max_rel_dev);
  return {"adam raw/rescaled equivalence", worst <= 1e-9, "max rel deviation " + detail::str(worst)};
}

inline std::vector<VerifierRow> verify_alpha_sums() {
  std::vector<VerifierRow> rows;
  for (double beta : {1.0, 0.5, 0.1, 0.01, 0.001})
    for (std::uint64_t T : {10ULL, 1000ULL, 100000ULL}) {
      const AlphaSum a = alpha_sum_bound(beta, T);
      rows.push_back({"alpha sum beta=" + detail::str(beta) + " T=" + std::to_string(T), a.pass,
                      detail::str(a.sum) + " <= " + detail::str(a.bound)});
    }
  return rows;
}

// Equality case of ℓ(u) = L0 + L1 u, where u' = ℓ(u) has a closed form.
inline VerifierRow verify_gronwall_l0l1(double L0 = 1.0, double L1 = 2.0, double u0 = 0.5, double a = 0.0,
                                        double b = 1.0) {
  auto ell = [=](double v) { return L0 + L1 * v; };
  auto u = [=](double t) { return (u0 + L0 / L1) * std::exp(L1 * (t - a)) - L0 / L1; };
  const GronwallReport rep = verify_gronwall(ell, u, a, b);
  const bool ok = rep.passed && rep.max_abs_slack <= 1e-6;
  return {"gronwall (L0,L1) equality case", ok, "max |slack| " + detail::str(rep.max_abs_slack)};
}

inline VerifierRow verify_gronwall_constant(double c = 3.0, double u0 = 0.25) {
  auto ell = [=](double) { return c; };
  auto u = [=](double t) { return u0 + c * t; };
  const GronwallReport rep = verify_gronwall(ell, u, 0.0, 2.0);
  const bool ok = rep.passed && rep.max_abs_slack <= 1e-9;
  return {"gronwall constant equality case", ok, "max |slack| " + detail::str(rep.max_abs_slack)};
}

// G from the default Adam schedule: rho_lt_2, σ=0.1, λ=1, δ=0.1, ε=0.3.
inline double default_schedule_G(const ObjectiveSpec& spec) {
  const Problem p = make_problem(spec, spec.x1_default, 0.1, 1.0, 0.1, 0.3);
  return schedule_adam(p, Variant::rho_lt_2, Calibration{}).tc.G;
}

inline std::size_t verify_dim(const std::string&) { return 2; }

inline std::vector<VerifierRow> verify_local_smoothness_all(std::size_t n_pairs = 10000, std::uint64_t seed = 42) {
  std::vector<VerifierRow> rows;
  std::uint64_t stream = 0;
  for (const auto& name : builtin_names()) {
    const ObjectiveSpec spec = builtin(name, verify_dim(name));
    RngStream rng(seed, 1000 + stream++);
    const double G = default_schedule_G(spec);
    const LocalSmoothnessReport rep = verify_local_smoothness(spec, G, n_pairs, rng);
    const bool ok = rep.pairs == n_pairs && rep.total_violations() == 0;
    rows.push_back({"local smoothness " + name, ok,
                    std::to_string(rep.pairs) + " pairs, " + std::to_string(rep.total_violations()) +
                        " violations, G=" + detail::str(G)});
  }
  return rows;
}

inline std::vector<VerifierRow> verify_counterexamples(double L0 = 10.0, double L1 = 10.0) {
  std::vector<VerifierRow> rows;
  for (auto [kind, name] : {std::pair{CounterexampleKind::rational, "rational_inv"},
                            std::pair{CounterexampleKind::double_exp, "double_exp"}}) {
    const double x = counterexample_l0l1(kind, L0, L1);
    rows.push_back({std::string("counterexample ") + name, counterexample_holds(kind, x, L0, L1),
                    "x=" + detail::str(x)});
  }
  return rows;
}

inline std::vector<VerifierRow> verify_all() {
  std::vector<VerifierRow> rows;
  rows.push_back(verify_gronwall_constant());
  rows.push_back(verify_gronwall_l0l1());
  for (auto& r : verify_local_smoothness_all()) rows.push_back(std::move(r));
  for (auto& r : verify_alpha_sums()) rows.push_back(std::move(r));
  rows.push_back(verify_equivalence());
  for (auto& r : verify_counterexamples()) rows.push_back(std::move(r));
  return rows;
}

}  // namespace gsmooth
