#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "core.hpp"
#include "objectives.hpp"

namespace gsmooth {

enum class NoiseKind { zero, sphere, ball, coordinate };

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "zero") return NoiseKind::zero;
  if (s == "sphere") return NoiseKind::sphere;
  if (s == "ball") return NoiseKind::ball;
  if (s == "coordinate") return NoiseKind::coordinate;
  throw ConfigError("unknown noise kind: " + s);
}

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::zero: return "zero";
    case NoiseKind::sphere: return "sphere";
    case NoiseKind::ball: return "ball";
    case NoiseKind::coordinate: return "coordinate";
  }
  return "?";
}

// linear: f(x,ξ) = f(x) + <n, x>.
// sinusoidal: f(x,ξ) = f(x) + Σ n_i sin(x_i + φ_i); used only for robustness tests.
enum class ComponentModel { linear, sinusoidal };

inline ComponentModel parse_component_model(const std::string& s) {
  if (s == "linear") return ComponentModel::linear;
  if (s == "sinusoidal") return ComponentModel::sinusoidal;
  throw ConfigError("unknown component model: " + s);
}

struct NoiseModel {
  NoiseKind kind = NoiseKind::zero;
  double sigma = 0.0;
  ComponentModel component = ComponentModel::linear;

  double effective_sigma() const { return kind == NoiseKind::zero ? 0.0 : sigma; }
};

struct SampleTicket {
  Vector noise;
  Vector phase;  // sinusoidal model only
  std::uint64_t step = 0;
};

namespace detail {
// Pull n back inside the closed σ-ball when rounding pushed it out.
inline void clamp_norm(Vector& n, double sigma) {
  while (norm2(n) > sigma)
    for (double& v : n) v *= 1.0 - 0x1.0p-52;
}
}  // namespace detail

inline Vector draw_noise(const NoiseModel& model, RngStream& rng, std::size_t dim) {
  if (dim == 0) throw ContractError("dim must be positive");
  const double s = model.sigma;
  if (model.kind == NoiseKind::zero || s == 0.0) return Vector(dim);
  Vector n;
  switch (model.kind) {
    case NoiseKind::sphere:
      n = s * random_direction(rng, dim);
      break;
    case NoiseKind::ball: {
      const Vector u = random_direction(rng, dim);
      n = (s * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim))) * u;
      break;
    }
    case NoiseKind::coordinate: {
      n = Vector(dim);
      const std::size_t i = rng.index(dim);
      n[i] = (rng() & 1u) ? s : -s;
      break;
    }
    case NoiseKind::zero:
      break;
  }
  detail::clamp_norm(n, s);
  return n;
}

inline SampleTicket draw(const NoiseModel& model, RngStream& rng, std::size_t dim, std::uint64_t step = 0) {
  SampleTicket t;
  t.noise = draw_noise(model, rng, dim);
  if (model.component == ComponentModel::sinusoidal) {
    t.phase = Vector(dim);
    for (double& p : t.phase) p = 2.0 * std::numbers::pi * rng.uniform();
  }
  t.step = step;
  return t;
}

inline Vector noise_term(const Vector& x, const SampleTicket& ticket) {
  if (ticket.phase.empty()) return ticket.noise;
  Vector e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) e[i] = ticket.noise[i] * std::cos(x[i] + ticket.phase[i]);
  return e;
}

inline Vector component_gradient(const ObjectiveSpec& spec, const Vector& x, const SampleTicket& ticket) {
  return spec.gradient(x) + noise_term(x, ticket);
}

inline Vector megabatch_gradient(const ObjectiveSpec& spec, const Vector& x, std::uint64_t S1,
                                 const NoiseModel& model, RngStream& rng) {
  if (S1 == 0) throw ContractError("S1 must be positive");
  Vector acc(x.size());
  for (std::uint64_t k = 0; k < S1; ++k) {
    const SampleTicket t = draw(model, rng, x.size(), 1);
    const Vector e = noise_term(x, t);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e[i];
  }
  const double inv = 1.0 / static_cast<double>(S1);
  return spec.gradient(x) + inv * acc;
}

// Smoothness constants of f(·,ξ) for the chosen component model.
inline SmoothConstants component_constants(const ObjectiveSpec& spec, const NoiseModel& model) {
  SmoothConstants c = spec.constants;
  if (model.component == ComponentModel::sinusoidal) c.L0 += model.effective_sigma();
  return c;
}

}  // namespace gsmooth
