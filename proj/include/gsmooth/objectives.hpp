#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace gsmooth {

struct SmoothConstants {
  double L0 = 0.0;
  double Lrho = 0.0;
  double rho = 0.0;

  double ell(double u) const { return L0 + Lrho * std::pow(u, rho); }
};

// Per-coordinate interval box.
struct Box {
  Vector lo, hi;

  static Box uniform(std::size_t n, double lo, double hi) { return {Vector(n, lo), Vector(n, hi)}; }
  bool contains_open(const Vector& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    return true;
  }
  bool contains_closed(const Vector& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    return true;
  }
  Vector sample(RngStream& rng) const {
    Vector x(lo.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    return x;
  }
};

struct ObjectiveSpec {
  std::string name;
  std::size_t dim = 1;
  std::function<double(const Vector&)> value_oracle;
  std::function<Vector(const Vector&)> gradient_oracle;
  std::function<double(const Vector&)> hessian_norm_oracle;
  std::optional<Box> domain_box;  // open
  SmoothConstants constants;
  double f_inf = 0.0;
  Vector x1_default;
  Box sample_box;
  // Constants hold on the whole domain, or only on sample_box.
  bool certified_globally = true;

  bool in_domain(const Vector& x) const {
    if (x.size() != dim) return false;
    return !domain_box || domain_box->contains_open(x);
  }
  void require_domain(const Vector& x) const {
    if (x.size() != dim) throw ContractError(name + ": dimension mismatch");
    if (!x.finite()) throw NumericalFailure(name + ": non-finite point");
    if (domain_box && !domain_box->contains_open(x)) throw DomainError(name + ": point outside domain");
  }
  double value(const Vector& x) const {
    require_domain(x);
    return value_oracle(x);
  }
  Vector gradient(const Vector& x) const {
    require_domain(x);
    return gradient_oracle(x);
  }
  double hessian_norm(const Vector& x) const {
    require_domain(x);
    return hessian_norm_oracle(x);
  }
  // True when y may be used with the certified constants.
  bool in_certified_region(const Vector& y) const {
    if (!in_domain(y)) return false;
    return certified_globally || sample_box.contains_closed(y);
  }
};

namespace detail {

struct Univariate {
  double (*f)(double);
  double (*df)(double);
  double (*d2f)(double);
};

// f_d(x) = sum_i f(x_i); the Hessian is diagonal so its norm is max_i |f''(x_i)|.
inline ObjectiveSpec lifted(std::string name, std::size_t dim, Univariate u) {
  ObjectiveSpec s;
  s.name = std::move(name);
  s.dim = dim;
  s.value_oracle = [u](const Vector& x) {
    double acc = 0.0;
    for (double xi : x) acc += u.f(xi);
    return acc;
  };
  s.gradient_oracle = [u](const Vector& x) { return map(x, u.df); };
  s.hessian_norm_oracle = [u](const Vector& x) {
    double m = 0.0;
    for (double xi : x) m = std::max(m, std::fabs(u.d2f(xi)));
    return m;
  };
  return s;
}

inline double exp_f(double x) { return std::exp(x); }

inline double inv_f(double x) { return 1.0 / x; }
inline double inv_df(double x) { return -1.0 / (x * x); }
inline double inv_d2f(double x) { return 2.0 / (x * x * x); }

inline double bar_f(double x) { return 1.0 / x + 1.0 / (1.0 - x); }
inline double bar_df(double x) { return -1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)); }
inline double bar_d2f(double x) {
  const double y = 1.0 - x;
  return 2.0 / (x * x * x) + 2.0 / (y * y * y);
}

inline double dexp_f(double x) { return std::exp(std::exp(x)); }
inline double dexp_df(double x) { return std::exp(x + std::exp(x)); }
inline double dexp_d2f(double x) { return (std::exp(x) + 1.0) * dexp_df(x); }

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"quadratic",        "quartic",    "exp1d",          "rational_inv",
                                                 "rational_barrier", "double_exp", "rosenbrock_like"};
  return names;
}

inline ObjectiveSpec builtin(const std::string& name, std::size_t dim = 1) {
  if (dim == 0) throw ConfigError("objective dim must be positive");
  ObjectiveSpec s;
  if (name == "quadratic") {
    s.name = name;
    s.dim = dim;
    s.value_oracle = [](const Vector& x) { return 0.5 * dot(x, x); };
    s.gradient_oracle = [](const Vector& x) { return x; };
    s.hessian_norm_oracle = [](const Vector&) { return 1.0; };
    s.constants = {1.0, 0.0, 0.0};
    s.f_inf = 0.0;
    s.x1_default = Vector(dim, 1.0);
    s.sample_box = Box::uniform(dim, -10.0, 10.0);
  } else if (name == "quartic") {
    s.name = name;
    s.dim = dim;
    s.value_oracle = [](const Vector& x) {
      const double q = dot(x, x);
      return q * q;
    };
    s.gradient_oracle = [](const Vector& x) { return (4.0 * dot(x, x)) * x; };
    // ∇²f = 4‖x‖²I + 8xxᵀ
    s.hessian_norm_oracle = [](const Vector& x) { return 12.0 * dot(x, x); };
    s.constants = {0.0, 12.0 / std::pow(4.0, 2.0 / 3.0), 2.0 / 3.0};
    s.f_inf = 0.0;
    s.x1_default = Vector(dim, 0.5 / std::sqrt(static_cast<double>(dim)));
    s.sample_box = Box::uniform(dim, -3.0, 3.0);
  } else if (name == "exp1d") {
    s = detail::lifted(name, dim, {detail::exp_f, detail::exp_f, detail::exp_f});
    s.constants = {0.0, 1.0, 1.0};
    s.f_inf = 0.0;
    s.x1_default = Vector(dim, 0.0);
    s.sample_box = Box::uniform(dim, -5.0, 5.0);
  } else if (name == "rational_inv") {
    s = detail::lifted(name, dim, {detail::inv_f, detail::inv_df, detail::inv_d2f});
    s.domain_box = Box::uniform(dim, 0.0, std::numeric_limits<double>::infinity());
    s.constants = {0.0, 2.0, 1.5};
    s.f_inf = 0.0;
    s.x1_default = Vector(dim, 1.0);
    s.sample_box = Box::uniform(dim, 0.01, 100.0);
  } else if (name == "rational_barrier") {
    s = detail::lifted(name, dim, {detail::bar_f, detail::bar_df, detail::bar_d2f});
    s.domain_box = Box::uniform(dim, 0.0, 1.0);
    // sup over (0,1) of f'' - 3|f'|^1.5 is 32, attained at 1/2
    s.constants = {32.0, 3.0, 1.5};
    s.f_inf = 4.0 * static_cast<double>(dim);
    s.x1_default = Vector(dim, 0.3);
    s.sample_box = Box::uniform(dim, 1e-3, 1.0 - 1e-3);
  } else if (name == "double_exp") {
    s = detail::lifted(name, dim, {detail::dexp_f, detail::dexp_df, detail::dexp_d2f});
    // fitted on [-5, 3] with rho = 1.5
    s.constants = {0.125, 1.57, 1.5};
    s.f_inf = static_cast<double>(dim);
    s.x1_default = Vector(dim, -1.0);
    s.sample_box = Box::uniform(dim, -5.0, 3.0);
  } else if (name == "rosenbrock_like") {
    if (dim % 2 != 0) throw ConfigError("rosenbrock_like needs an even dimension");
    s.name = name;
    s.dim = dim;
    s.value_oracle = [](const Vector& x) {
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
        const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
        acc += 100.0 * a * a + b * b;
      }
      return acc;
    };
    s.gradient_oracle = [](const Vector& x) {
      Vector g(x.size());
      for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
        const double a = x[i + 1] - x[i] * x[i];
        g[i] = -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
        g[i + 1] = 200.0 * a;
      }
      return g;
    };
    // block diagonal with 2x2 blocks; spectral norm of each block in closed form
    s.hessian_norm_oracle = [](const Vector& x) {
      double m = 0.0;
      for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
        const double a = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        const double b = -400.0 * x[i], c = 200.0;
        const double mid = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
        m = std::max({m, std::fabs(mid + rad), std::fabs(mid - rad)});
      }
      return m;
    };
    s.constants = {2010.0, 1.0, 1.0};
    s.f_inf = 0.0;
    s.x1_default = Vector(dim, 0.0);
    Box b{Vector(dim), Vector(dim)};
    for (std::size_t i = 0; i < dim; i += 2) {
      b.lo[i] = -1.5;
      b.hi[i] = 1.5;
      b.lo[i + 1] = -0.5;
      b.hi[i + 1] = 2.5;
    }
    s.sample_box = b;
    s.certified_globally = false;
  } else {
    throw ConfigError("unknown objective: " + name);
  }
  return s;
}

struct Violation {
  Vector x;
  double hessian_norm;
  double bound;
};

struct CertificationReport {
  std::size_t samples_checked = 0;
  std::vector<Violation> violations;
  std::optional<SmoothConstants> fitted_constants;

  bool passed() const { return violations.empty(); }
};

struct CertifyOptions {
  double tol_abs = 1e-9;
  double tol_rel = 1e-12;
  std::size_t max_recorded = 100;
};

inline CertificationReport certify_l0lrho(const ObjectiveSpec& spec, std::size_t n_samples, RngStream& rng,
                                          const Box& box, const SmoothConstants& c, CertifyOptions opt = {}) {
  if (n_samples == 0) throw ContractError("n_samples must be positive");
  CertificationReport rep;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vector x = box.sample(rng);
    if (!spec.in_domain(x)) continue;
    const double h = spec.hessian_norm(x);
    const double bound = c.ell(norm2(spec.gradient(x)));
    ++rep.samples_checked;
    if (h > bound + opt.tol_abs + opt.tol_rel * std::fabs(bound)) {
      if (rep.violations.size() < opt.max_recorded) rep.violations.push_back({x, h, bound});
    }
  }
  return rep;
}

inline CertificationReport certify_l0lrho(const ObjectiveSpec& spec, std::size_t n_samples, RngStream& rng,
                                          const Box& box) {
  return certify_l0lrho(spec, n_samples, rng, box, spec.constants);
}

inline CertificationReport certify_l0lrho(const ObjectiveSpec& spec, std::size_t n_samples, RngStream& rng) {
  return certify_l0lrho(spec, n_samples, rng, spec.sample_box, spec.constants);
}

// Fit for fixed rho: Lrho from the worst ratio among samples with gradient norm ≥ 1,
// then L0 covers whatever remains.
inline SmoothConstants fit_l0lrho(const ObjectiveSpec& spec, double rho, std::size_t n_samples, RngStream& rng,
                                  const Box& box) {
  std::vector<std::pair<double, double>> hg;
  hg.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vector x = box.sample(rng);
    if (!spec.in_domain(x)) continue;
    hg.emplace_back(spec.hessian_norm(x), norm2(spec.gradient(x)));
  }
  double lr = 0.0;
  for (auto [h, g] : hg)
    if (g >= 1.0) lr = std::max(lr, h / std::pow(g, rho));
  double l0 = 0.0;
  for (auto [h, g] : hg) l0 = std::max(l0, h - lr * std::pow(g, rho));
  return {l0, lr, rho};
}

enum class CounterexampleKind { rational, double_exp };

// Point where |f''| > L0 + L1|f'| for f = 1/x or f = exp(exp(x)).
inline double counterexample_l0l1(CounterexampleKind kind, double L0, double L1) {
  if (L0 < 0.0 || L1 < 0.0) throw ContractError("constants must be nonnegative");
  if (kind == CounterexampleKind::rational)
    return std::min(std::pow(L0 + 1.0, -1.0 / 3.0), 1.0 / (L1 + 1.0));
  return std::max(std::log(L0 + 1.0), std::log(L1 + 1.0));
}

inline bool counterexample_holds(CounterexampleKind kind, double x, double L0, double L1) {
  double d1, d2;
  if (kind == CounterexampleKind::rational) {
    d1 = detail::inv_df(x);
    d2 = detail::inv_d2f(x);
  } else {
    d1 = detail::dexp_df(x);
    d2 = detail::dexp_d2f(x);
  }
  return std::fabs(d2) > L0 + L1 * std::fabs(d1);
}

}  // namespace gsmooth
