#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "core.hpp"
#include "objectives.hpp"
#include "oracle.hpp"

namespace gsmooth {

enum class Algorithm { adam_raw, adam_rescaled, vradam };

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "adam_raw") return Algorithm::adam_raw;
  if (s == "adam_rescaled") return Algorithm::adam_rescaled;
  if (s == "vradam") return Algorithm::vradam;
  throw ConfigError("unknown algorithm: " + s);
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::adam_raw: return "adam_raw";
    case Algorithm::adam_rescaled: return "adam_rescaled";
    case Algorithm::vradam: return "vradam";
  }
  return "?";
}

struct HyperParams {
  double beta = 0.9;
  double beta_sq = 0.9;
  double eta = 1e-3;
  double lambda = 1.0;
  std::uint64_t T = 1000;
  std::uint64_t S1 = 1;

  // beta_sq = 0 is admissible for VRAdam only.
  void validate(Algorithm algo = Algorithm::adam_rescaled) const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
    const bool sq_ok = algo == Algorithm::vradam ? (beta_sq >= 0.0 && beta_sq <= 1.0)
                                                 : (beta_sq > 0.0 && beta_sq <= 1.0);
    if (!sq_ok) throw ConfigError("beta_sq out of range");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
    if (T < 1) throw ConfigError("T must be at least 1");
    if (S1 < 1) throw ConfigError("S1 must be at least 1");
  }
};

struct AdamState {
  std::uint64_t t = 1;
  Vector x;
  Vector m_raw, v_raw;
  Vector m_hat, v_hat;
  double pow_b = 1.0;   // (1-β)^(t-1)
  double pow_bs = 1.0;  // (1-β_sq)^(t-1)

  static AdamState init(const Vector& x1) {
    AdamState s;
    s.x = x1;
    s.m_raw = s.v_raw = s.m_hat = s.v_hat = Vector(x1.size());
    return s;
  }
};

// Per-coordinate stepsize η/(√v̂+λ).
inline Vector stepsize(const Vector& v_hat, double eta, double lambda) {
  return map(v_hat, [eta, lambda](double v) { return eta / (std::sqrt(v) + lambda); });
}

namespace detail {
inline void require_finite(const Vector& v, const char* what) {
  if (!v.finite()) throw NumericalFailure(std::string("non-finite ") + what);
}

inline Vector move_x(const Vector& x, const Vector& m, const Vector& v_hat, double eta, double lambda) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - eta * m[i] / (std::sqrt(v_hat[i]) + lambda);
  return out;
}
}  // namespace detail

inline AdamState adam_step_raw(const AdamState& s, const Vector& g, const HyperParams& hp) {
  detail::require_finite(g, "gradient");
  AdamState n = s;
  const double b = hp.beta, bs = hp.beta_sq;
  n.pow_b = s.pow_b * (1.0 - b);
  n.pow_bs = s.pow_bs * (1.0 - bs);
  const double cb = 1.0 - n.pow_b, cbs = 1.0 - n.pow_bs;
  for (std::size_t i = 0; i < g.size(); ++i) {
    n.m_raw[i] = (1.0 - b) * s.m_raw[i] + b * g[i];
    n.v_raw[i] = (1.0 - bs) * s.v_raw[i] + bs * g[i] * g[i];
    n.m_hat[i] = n.m_raw[i] / cb;
    n.v_hat[i] = n.v_raw[i] / cbs;
  }
  n.x = detail::move_x(s.x, n.m_hat, n.v_hat, hp.eta, hp.lambda);
  detail::require_finite(n.x, "iterate");
  n.t = s.t + 1;
  return n;
}

// α_t = β/(1-(1-β)^t)
inline double alpha_t(double beta, double pow_t) { return beta / (1.0 - pow_t); }

inline AdamState adam_step_rescaled(const AdamState& s, const Vector& g, const HyperParams& hp) {
  detail::require_finite(g, "gradient");
  AdamState n = s;
  n.pow_b = s.pow_b * (1.0 - hp.beta);
  n.pow_bs = s.pow_bs * (1.0 - hp.beta_sq);
  const double a = s.t == 1 ? 1.0 : alpha_t(hp.beta, n.pow_b);
  const double as = s.t == 1 ? 1.0 : alpha_t(hp.beta_sq, n.pow_bs);
  for (std::size_t i = 0; i < g.size(); ++i) {
    n.m_hat[i] = (1.0 - a) * s.m_hat[i] + a * g[i];
    n.v_hat[i] = (1.0 - as) * s.v_hat[i] + as * g[i] * g[i];
  }
  n.x = detail::move_x(s.x, n.m_hat, n.v_hat, hp.eta, hp.lambda);
  detail::require_finite(n.x, "iterate");
  n.t = s.t + 1;
  return n;
}

struct VRAdamState {
  std::uint64_t t = 1;
  Vector x, x_prev;
  Vector m, v_raw, v_hat;
  double pow_bs = 1.0;  // (1-β_sq)^(t-1)
};

// First momentum from a mega-batch; v̂_1 is taken to be m1².
inline VRAdamState vradam_init_from(const Vector& x_init, const Vector& m1, const HyperParams& hp) {
  detail::require_finite(m1, "gradient");
  VRAdamState s;
  s.m = m1;
  s.v_raw = hp.beta_sq * square(m1);
  s.v_hat = square(m1);
  s.x_prev = x_init;
  s.x = detail::move_x(x_init, m1, s.v_hat, hp.eta, hp.lambda);
  detail::require_finite(s.x, "iterate");
  s.pow_bs = 1.0 - hp.beta_sq;
  s.t = 2;
  return s;
}

inline VRAdamState vradam_init(const ObjectiveSpec& spec, const Vector& x_init, const HyperParams& hp,
                               const NoiseModel& noise, RngStream& rng) {
  if (hp.S1 < 1) throw ContractError("S1 must be positive");
  return vradam_init_from(x_init, megabatch_gradient(spec, x_init, hp.S1, noise, rng), hp);
}

// g_cur = ∇f(x_t, ξ_t), g_prev = ∇f(x_{t-1}, ξ_t)
inline VRAdamState vradam_step(const VRAdamState& s, const Vector& g_cur, const Vector& g_prev,
                               const HyperParams& hp) {
  detail::require_finite(g_cur, "gradient");
  detail::require_finite(g_prev, "gradient");
  VRAdamState n = s;
  const double b = hp.beta, bs = hp.beta_sq;
  n.pow_bs = s.pow_bs * (1.0 - bs);
  const double cbs = 1.0 - n.pow_bs;
  for (std::size_t i = 0; i < g_cur.size(); ++i) {
    n.m[i] = (1.0 - b) * s.m[i] + b * g_cur[i] + (1.0 - b) * (g_cur[i] - g_prev[i]);
    n.v_raw[i] = (1.0 - bs) * s.v_raw[i] + bs * g_cur[i] * g_cur[i];
    // with β_sq = 0 the correction is 0/0; v stays at zero
    n.v_hat[i] = bs > 0.0 ? n.v_raw[i] / cbs : 0.0;
  }
  n.x_prev = s.x;
  n.x = detail::move_x(s.x, n.m, n.v_hat, hp.eta, hp.lambda);
  detail::require_finite(n.x, "iterate");
  n.t = s.t + 1;
  return n;
}

inline VRAdamState vradam_step(const VRAdamState& s, const SampleTicket& ticket, const ObjectiveSpec& spec,
                               const HyperParams& hp) {
  return vradam_step(s, component_gradient(spec, s.x, ticket), component_gradient(spec, s.x_prev, ticket), hp);
}

}  // namespace gsmooth
