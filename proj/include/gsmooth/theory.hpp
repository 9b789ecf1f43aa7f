#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "objectives.hpp"
#include "optimizers.hpp"

namespace gsmooth {

enum class DMode { adam_matched, adam_general, vr_thm1, vr_thm2 };
enum class Variant { rho_lt_2, rho_lt_1 };

inline constexpr double kRMax = 1e6;

struct TheoryConstants {
  double G = 0.0;
  double r = 0.0;
  double L = 0.0;
  double D = 0.0;
  double E = 0.0;  // VRAdam only
  double Delta1 = 0.0;
  double iota = 0.0;
  double delta = 0.1;
  double eps_target = 0.0;
  // problem scalars carried along for the monitor
  double sigma = 0.0;
  double lambda = 1.0;
  double grad1_norm = 0.0;
  std::size_t d = 1;
  DMode mode = DMode::adam_matched;
};

struct Calibration {
  double c1 = 1.0, c2 = 1.0, c = 1.0;
  double C1 = 8.0, C2 = 8.0, C = 8.0;
  double theta = 0.0;  // derived (VRAdam)
};

// Locality radius. At ρ = 0 only the first branch is used; when L0 = 0 the second branch
// concerns gradient norms below (L0/Lρ)^(1/ρ) = 0 and is dropped.
inline double locality_radius(double L0, double Lr, double rho, double G, double r_max = kRMax) {
  if (Lr == 0.0) return r_max;
  if (rho == 0.0) return std::min(G / (5.0 * Lr), r_max);
  double r = 1.0 / (5.0 * Lr * std::pow(G, rho - 1.0));
  if (L0 > 0.0) r = std::min(r, 1.0 / (5.0 * std::pow(std::pow(L0, rho - 1.0) * Lr, 1.0 / rho)));
  return std::min(r, r_max);
}

inline TheoryConstants constants(double L0, double Lr, double rho, double G, double lambda, std::size_t d,
                                 DMode mode, double beta_sq = 1.0, double r_max = kRMax) {
  if (!(G > 0.0)) throw ContractError("G must be positive");
  if (!(lambda > 0.0)) throw ContractError("lambda must be positive");
  if (d < 1) throw ContractError("d must be at least 1");
  if (!(rho >= 0.0 && rho < 2.0)) throw ContractError("rho must lie in [0,2)");
  TheoryConstants tc;
  tc.G = G;
  tc.lambda = lambda;
  tc.d = d;
  tc.mode = mode;
  tc.r = locality_radius(L0, Lr, rho, G, r_max);
  tc.L = 3.0 * L0 + 4.0 * Lr * std::pow(G, rho);
  const double sd = std::sqrt(static_cast<double>(d));
  switch (mode) {
    case DMode::adam_matched: tc.D = std::min(sd, 2.0 * G / lambda); break;
    case DMode::adam_general: tc.D = 2.0 * G / lambda; break;
    case DMode::vr_thm1:
      if (!(beta_sq > 0.0)) throw ConfigError("beta_sq must be positive for this VRAdam variant");
      tc.D = 2.0 * std::sqrt(static_cast<double>(d) / beta_sq);
      break;
    case DMode::vr_thm2: tc.D = 2.0 * G / lambda; break;
  }
  if (mode == DMode::vr_thm1 || mode == DMode::vr_thm2) tc.E = lambda * tc.D / 4.0;
  return tc;
}

inline TheoryConstants constants(const SmoothConstants& c, double G, double lambda, std::size_t d, DMode mode,
                                 double beta_sq = 1.0) {
  return constants(c.L0, c.Lrho, c.rho, G, lambda, d, mode, beta_sq);
}

// Scalars a schedule depends on.
struct Problem {
  SmoothConstants sc;
  double sigma = 0.0;
  double lambda = 1.0;
  double delta = 0.1;
  double eps = 0.3;
  std::size_t d = 1;
  double Delta1 = 0.0;
  double grad1_norm = 0.0;

  double iota() const { return std::log(1.0 / delta); }
};

inline Problem make_problem(const ObjectiveSpec& spec, const Vector& x1, double sigma, double lambda, double delta,
                            double eps) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  Problem p;
  p.sc = spec.constants;
  p.sigma = sigma;
  p.lambda = lambda;
  p.delta = delta;
  p.eps = eps;
  p.d = spec.dim;
  p.Delta1 = spec.value(x1) - spec.f_inf;
  p.grad1_norm = norm2(spec.gradient(x1));
  return p;
}

struct Contradiction {
  double I1 = 0.0;
  double I2 = 0.0;
  double I1_over_T = 0.0;
  bool I1_le_I2 = false;
  bool avg_le_eps2 = false;

  bool passed() const { return I1_le_I2 && avg_le_eps2; }
};

struct ParamInequalities {
  double lhs[4] = {0, 0, 0, 0};
  double rhs[4] = {0, 0, 0, 0};
  bool holds[4] = {false, false, false, false};
  bool skipped_third = false;

  bool passed() const { return holds[0] && holds[1] && holds[2] && holds[3]; }
};

struct Schedule {
  HyperParams hp;
  TheoryConstants tc;
  Calibration calib;
  Variant variant = Variant::rho_lt_2;
  bool vr = false;
  double T_real = 0.0;  // exact ceiling, may exceed what a run can hold
  Contradiction cq;     // Adam
  ParamInequalities pi;  // VRAdam
};

inline double ceil_count(double x) {
  if (!(x >= 0.0)) return 1.0;
  return std::max(1.0, std::ceil(x));
}

inline std::uint64_t to_count(double x) {
  if (x >= 9.2e18) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(x);
}

inline Contradiction contradiction_quantities(const TheoryConstants& tc, const HyperParams& hp, double T) {
  const double G = tc.G, eta = hp.eta, lam = hp.lambda, b = hp.beta, s2 = tc.sigma * tc.sigma;
  Contradiction q;
  q.I1 = (8.0 * G / (eta * lam)) *
         (tc.Delta1 * lam + 8.0 * s2 * (eta / b + eta * b * T) +
          20.0 * s2 * eta * std::sqrt((1.0 / (b * b) + T) * tc.iota));
  q.I2 = G * G * G / (16.0 * eta * tc.D * tc.L);
  q.I1_over_T = q.I1 / T;
  q.I1_le_I2 = q.I1 <= q.I2;
  q.avg_le_eps2 = q.I1_over_T <= tc.eps_target * tc.eps_target;
  return q;
}

inline Contradiction contradiction_quantities(const TheoryConstants& tc, const HyperParams& hp) {
  return contradiction_quantities(tc, hp, static_cast<double>(hp.T));
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("schedule side-condition violated: " + what);
}

inline bool le_slack(double a, double b) { return a <= b + 1e-12 * std::fabs(b); }

}  // namespace detail

inline Schedule schedule_adam(const Problem& p, Variant variant, const Calibration& cal,
                              std::optional<double> beta_sq_opt = std::nullopt) {
  const auto& sc = p.sc;
  const double lam = p.lambda, sig = p.sigma, io = p.iota(), e2 = p.eps * p.eps;
  const double sd = std::sqrt(static_cast<double>(p.d));
  if (!(sc.rho >= 0.0 && sc.rho < 2.0)) throw ConfigError("rho must lie in [0,2)");
  if (variant == Variant::rho_lt_1 && !(sc.rho < 1.0)) throw ConfigError("the rho<1 schedule needs rho < 1");
  if (variant == Variant::rho_lt_2 && beta_sq_opt) throw ConfigError("the rho<2 schedule fixes beta_sq = beta");

  double G = std::max({2.0 * lam, 2.0 * sig, 2.0 * p.grad1_norm});
  if (variant == Variant::rho_lt_2) {
    G = std::max(G, std::sqrt(cal.C1 * p.Delta1 * sc.L0 * sd));
    G = std::max(G, std::pow(cal.C1 * p.Delta1 * sc.Lrho * sd, 1.0 / (2.0 - sc.rho)));
  } else {
    G = std::max(G, cal.C1 * p.Delta1 * sc.L0 / lam);
    G = std::max(G, std::pow(cal.C1 * p.Delta1 * sc.Lrho / lam, 1.0 / (1.0 - sc.rho)));
  }

  const double beta = sig == 0.0 ? 1.0 : std::min(1.0, cal.c1 * lam * e2 / (sig * sig * G * std::sqrt(io)));
  const double beta_sq = beta_sq_opt.value_or(beta);
  // the ρ<1 analysis uses D = 2G/λ whatever β_sq is
  TheoryConstants tc =
      constants(sc, G, lam, p.d, variant == Variant::rho_lt_2 ? DMode::adam_matched : DMode::adam_general);
  const double r = tc.r, L = tc.L;

  std::vector<double> branches;
  if (variant == Variant::rho_lt_2)
    branches = {r / sd, lam * beta / (std::sqrt(p.d * io) * L), std::pow(lam, 1.5) * beta / (L * std::sqrt(G))};
  else
    branches = {r * lam / G, lam * lam * beta / (G * L * std::sqrt(io))};
  const double eta = cal.c2 * *std::min_element(branches.begin(), branches.end());

  Schedule s;
  s.variant = variant;
  s.calib = cal;
  s.T_real = std::max(ceil_count(1.0 / (beta * beta)), ceil_count(cal.C2 * p.Delta1 * G / (eta * e2)));
  s.hp.beta = beta;
  s.hp.beta_sq = beta_sq;
  s.hp.eta = eta;
  s.hp.lambda = lam;
  s.hp.T = to_count(s.T_real);
  s.hp.S1 = 1;
  tc.Delta1 = p.Delta1;
  tc.iota = io;
  tc.delta = p.delta;
  tc.eps_target = p.eps;
  tc.sigma = sig;
  tc.grad1_norm = p.grad1_norm;
  s.tc = tc;

  detail::require(G >= 2.0 * sig && G >= 2.0 * lam && G >= 2.0 * p.grad1_norm, "G lower bounds");
  detail::require(beta > 0.0 && beta <= 1.0, "beta in (0,1]");
  detail::require(beta_sq > 0.0 && beta_sq <= 1.0, "beta_sq in (0,1]");
  for (double br : branches) detail::require(detail::le_slack(eta, br), "eta below every branch");
  detail::require(std::isfinite(eta) && eta > 0.0, "eta positive");

  s.cq = contradiction_quantities(s.tc, s.hp, s.T_real);
  return s;
}

// Largest β_sq with √β_sq ≤ λ/(2σ).
inline double default_vr_beta_sq(double sigma, double lambda) {
  if (sigma == 0.0) return 1.0;
  const double c = lambda / (2.0 * sigma);
  return std::min(1.0, c * c);
}

inline ParamInequalities param_inequalities(const TheoryConstants& tc, const HyperParams& hp, double T) {
  ParamInequalities pi;
  const double G = tc.G, L = tc.L, lam = hp.lambda, b = hp.beta, eta = hp.eta, d1 = tc.Delta1;
  pi.lhs[0] = 256.0 * d1 * tc.D * L / (G * G);
  pi.rhs[0] = tc.delta / 4.0;
  pi.lhs[1] = lam * d1 * b / (eta * tc.E * tc.E);
  pi.rhs[1] = tc.delta / 4.0;
  pi.lhs[2] = eta * b * T;
  pi.rhs[2] = tc.sigma > 0.0 ? lam * d1 / (8.0 * tc.sigma * tc.sigma) : std::numeric_limits<double>::infinity();
  pi.skipped_third = tc.sigma == 0.0;
  pi.lhs[3] = eta;
  pi.rhs[3] = std::pow(lam, 1.5) / (40.0 * L) * std::sqrt(b / G);
  for (int i = 0; i < 4; ++i) {
    // the last one is an equality by construction of β; allow rounding
    pi.holds[i] = i == 3 ? pi.lhs[i] <= pi.rhs[i] * (1.0 + 1e-12) : pi.lhs[i] <= pi.rhs[i];
  }
  if (pi.skipped_third) pi.holds[2] = true;
  return pi;
}

inline Schedule schedule_vradam(const Problem& p, Variant variant, const Calibration& cal,
                                std::optional<double> beta_sq_opt = std::nullopt) {
  const auto& sc = p.sc;
  const double lam = p.lambda, sig = p.sigma, e = p.eps, dl = p.delta;
  const double dd = static_cast<double>(p.d);
  if (!(sc.rho >= 0.0 && sc.rho < 2.0)) throw ConfigError("rho must lie in [0,2)");
  if (variant == Variant::rho_lt_1 && !(sc.rho < 1.0)) throw ConfigError("the rho<1 schedule needs rho < 1");

  double G = std::max({2.0 * lam, 2.0 * sig, 2.0 * p.grad1_norm});
  double beta_sq = 0.0;
  TheoryConstants tc;
  std::vector<double> br;
  if (variant == Variant::rho_lt_2) {
    beta_sq = beta_sq_opt.value_or(default_vr_beta_sq(sig, lam));
    if (!(beta_sq > 0.0 && beta_sq <= 1.0)) throw ConfigError("beta_sq must lie in (0,1] for this variant");
    if (sig > 0.0 && !(std::sqrt(beta_sq) <= lam / (2.0 * sig)))
      throw ConfigError("schedule side-condition violated: sqrt(beta_sq) <= lambda/(2 sigma)");
    const double k = cal.C * p.Delta1 * std::sqrt(dd) / (std::sqrt(beta_sq) * dl);
    G = std::max({G, std::sqrt(k * sc.L0), std::pow(k * sc.Lrho, 1.0 / (2.0 - sc.rho))});
    tc = constants(sc, G, lam, p.d, DMode::vr_thm1, beta_sq);
    const double q = std::sqrt(beta_sq / dd);
    br = {tc.r * q, (G / tc.L) * q, lam / tc.L, std::pow(lam, 4) * dd * dl / (beta_sq * p.Delta1 * tc.L * tc.L)};
  } else {
    const double k = cal.C * p.Delta1 / (dl * lam);
    G = std::max({G, k * sc.L0, std::pow(k * sc.Lrho, 1.0 / (1.0 - sc.rho))});
    tc = constants(sc, G, lam, p.d, DMode::vr_thm2);
    br = {tc.r * lam / G, lam / tc.L, lam * lam * G * dl / (p.Delta1 * tc.L * tc.L)};
  }
  if (sig > 0.0) br.push_back(lam * lam * std::sqrt(dl) * e / (sig * G * tc.L));
  const double eta = cal.c * *std::min_element(br.begin(), br.end());
  const double theta = 40.0 * tc.L * std::sqrt(G) * std::pow(lam, -1.5);
  const double beta = theta * theta * eta * eta;
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta = theta^2 eta^2 exceeds 1; lower the calibration constant c");
  if (variant == Variant::rho_lt_1) beta_sq = beta_sq_opt.value_or(beta);
  if (!(beta_sq >= 0.0 && beta_sq <= 1.0)) throw ConfigError("beta_sq must lie in [0,1]");

  Schedule s;
  s.vr = true;
  s.variant = variant;
  s.calib = cal;
  s.calib.theta = theta;
  s.T_real = ceil_count(G * p.Delta1 / (eta * dl * e * e));
  s.hp.beta = beta;
  s.hp.beta_sq = beta_sq;
  s.hp.eta = eta;
  s.hp.lambda = lam;
  s.hp.T = to_count(s.T_real);
  s.hp.S1 = to_count(ceil_count(1.0 / (2.0 * beta * beta * s.T_real)));
  tc.Delta1 = p.Delta1;
  tc.iota = p.iota();
  tc.delta = dl;
  tc.eps_target = e;
  tc.sigma = sig;
  tc.grad1_norm = p.grad1_norm;
  s.tc = tc;

  detail::require(G >= 2.0 * sig && G >= 2.0 * lam && G >= 2.0 * p.grad1_norm, "G lower bounds");
  for (double b : br) detail::require(detail::le_slack(eta, b), "eta below every branch");
  detail::require(std::isfinite(eta) && eta > 0.0, "eta positive");

  s.pi = param_inequalities(s.tc, s.hp, s.T_real);
  return s;
}

struct CalibrationGrid {
  int c_lo = -16, c_hi = 0;  // exponents of two for the small constants
  int C_lo = 0, C_hi = 16;   // and for the large ones
};

// Grid search over powers of two. Among constants for which both contradiction flags pass,
// keeps the one with the smallest T; ties go to larger c's and smaller C's.
inline std::optional<Schedule> calibrate_adam(const Problem& p, Variant variant,
                                              std::optional<double> beta_sq = std::nullopt,
                                              CalibrationGrid g = {}) {
  std::optional<Schedule> best;
  for (int a = g.c_hi; a >= g.c_lo; --a)
    for (int b = g.c_hi; b >= g.c_lo; --b)
      for (int A = g.C_lo; A <= g.C_hi; ++A)
        for (int B = g.C_lo; B <= g.C_hi; ++B) {
          Calibration cal;
          cal.c1 = std::ldexp(1.0, a);
          cal.c2 = std::ldexp(1.0, b);
          cal.C1 = std::ldexp(1.0, A);
          cal.C2 = std::ldexp(1.0, B);
          Schedule s;
          try {
            s = schedule_adam(p, variant, cal, beta_sq);
          } catch (const ConfigError&) {
            continue;
          }
          if (!(s.cq.I1_le_I2 && s.cq.avg_le_eps2)) continue;
          if (!best || s.T_real < best->T_real) best = s;
        }
  return best;
}

// Same idea for VRAdam: parameter inequalities must hold and β ≤ 1; minimizes 2T + S1.
inline std::optional<Schedule> calibrate_vradam(const Problem& p, Variant variant,
                                                std::optional<double> beta_sq = std::nullopt,
                                                CalibrationGrid g = {}) {
  std::optional<Schedule> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int a = g.c_hi; a >= g.c_lo; --a)
    for (int A = g.C_lo; A <= g.C_hi; ++A) {
      Calibration cal;
      cal.c = std::ldexp(1.0, a);
      cal.C = std::ldexp(1.0, A);
      Schedule s;
      try {
        s = schedule_vradam(p, variant, cal, beta_sq);
      } catch (const ConfigError&) {
        continue;
      }
      if (!s.pi.passed()) continue;
      const double cost = 2.0 * s.T_real + static_cast<double>(s.hp.S1);
      if (cost < best_cost) {
        best_cost = cost;
        best = s;
      }
    }
  return best;
}

struct AlphaSum {
  double sum = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline AlphaSum alpha_sum_bound(double beta, std::uint64_t T) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ContractError("beta must lie in (0,1]");
  if (T < 2) throw ContractError("T must be at least 2");
  AlphaSum r;
  double pw = 1.0 - beta;  // (1-β)^1
  for (std::uint64_t t = 2; t <= T; ++t) {
    pw *= 1.0 - beta;
    const double a = beta / (1.0 - pw);
    r.sum += a * a;
  }
  const double bt = beta * beta * static_cast<double>(T);
  r.bound = 3.0 * (1.0 + bt);
  r.pass = r.sum <= r.bound;
  return r;
}

// Adaptive Simpson on [a,b] with absolute tolerance.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-9, int max_depth = 60) {
  struct Rec {
    F& f;
    double operator()(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
      const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double diff = left + right - whole;
      if (std::fabs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
      if (depth <= 0) throw NumericalFailure("quadrature did not converge");
      return (*this)(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             (*this)(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  if (a == b) return 0.0;
  if (a > b) return -adaptive_simpson(f, b, a, tol, max_depth);
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  Rec rec{f};
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, max_depth);
}

struct GronwallReport {
  std::size_t points = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double max_abs_slack = 0.0;
  bool passed = false;
};

// φ(w) = ∫_0^w dv/ℓ(v); checks φ(u(t)) ≤ φ(u(a)) − a + t on a uniform grid of [a,b].
template <class Ell, class U>
GronwallReport verify_gronwall(Ell&& ell, U&& u, double a, double b, std::size_t n_points = 1000,
                               double tol = 1e-6) {
  auto inv = [&](double v) {
    const double l = ell(v);
    if (!(l > 0.0)) throw ContractError("ell must be positive");
    return 1.0 / l;
  };
  auto phi = [&](double w) { return adaptive_simpson(inv, 0.0, w, 1e-9); };
  GronwallReport rep;
  const double phi_a = phi(u(a));
  for (std::size_t k = 0; k <= n_points; ++k) {
    const double t = a + (b - a) * static_cast<double>(k) / static_cast<double>(n_points);
    const double slack = phi_a - a + t - phi(u(t));
    rep.min_slack = std::min(rep.min_slack, slack);
    rep.max_abs_slack = std::max(rep.max_abs_slack, std::fabs(slack));
    ++rep.points;
  }
  rep.passed = rep.min_slack >= -tol;
  return rep;
}

struct LocalSmoothnessReport {
  std::size_t pairs = 0;
  std::size_t lemma_pairs = 0;      // checks (i),(ii)
  std::size_t corollary_pairs = 0;  // checks (iii),(iv)
  std::size_t rejected = 0;
  std::size_t violations[4] = {0, 0, 0, 0};
  double G = 0.0, r = 0.0, L = 0.0;

  std::size_t total_violations() const { return violations[0] + violations[1] + violations[2] + violations[3]; }
};

inline LocalSmoothnessReport verify_local_smoothness(const ObjectiveSpec& spec, double G, std::size_t n_pairs,
                                                     RngStream& rng) {
  const auto& sc = spec.constants;
  const TheoryConstants tc = constants(sc, G, 1.0, spec.dim, DMode::adam_general);
  LocalSmoothnessReport rep;
  rep.G = G;
  rep.r = tc.r;
  rep.L = tc.L;
  const std::size_t max_tries = 1000 * n_pairs + 1000;
  std::size_t tries = 0;
  while (rep.pairs < n_pairs && tries++ < max_tries) {
    const Vector x = spec.sample_box.sample(rng);
    if (!spec.in_certified_region(x)) {
      ++rep.rejected;
      continue;
    }
    const Vector gx = spec.gradient(x);
    const double gn = norm2(gx);
    if (gn > G) {
      ++rep.rejected;
      continue;
    }
    const double a = std::exp(std::log(1e-6) + (std::log(10.0) - std::log(1e-6)) * rng.uniform()) * (1.0 + gn);
    const double la = sc.ell(gn + a);
    const double lim = a / la;
    const bool corollary_kind = (rng() & 1u) != 0;
    const double dist = rng.uniform() * (corollary_kind ? tc.r : lim);
    const Vector dir = random_direction(rng, spec.dim);
    const Vector y = x + dist * dir;
    if (!spec.in_certified_region(y)) {
      ++rep.rejected;
      continue;
    }
    ++rep.pairs;
    const double fx = spec.value(x);
    const double tol = 1e-9 * (1.0 + std::fabs(fx));
    const Vector gy = spec.gradient(y);
    const Vector dyx = y - x;
    const double step = norm2(dyx);
    const double gdiff = norm2(gy - gx);
    if (step <= lim) {
      ++rep.lemma_pairs;
      if (gdiff > la * step + tol) ++rep.violations[0];
      if (norm2(gy) > gn + a + tol) ++rep.violations[1];
    }
    if (step <= tc.r) {
      ++rep.corollary_pairs;
      if (gdiff > tc.L * step + tol) ++rep.violations[2];
      if (spec.value(y) > fx + dot(gx, dyx) + 0.5 * tc.L * step * step + tol) ++rep.violations[3];
    }
  }
  return rep;
}

}  // namespace gsmooth
