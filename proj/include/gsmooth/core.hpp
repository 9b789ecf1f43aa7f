#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsmooth {

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense binary64 vector. Value semantics; copies are independent.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : v_(n, fill) {}
  Vector(std::initializer_list<double> xs) : v_(xs) {}
  explicit Vector(std::vector<double> xs) : v_(std::move(xs)) {}

  std::size_t size() const noexcept { return v_.size(); }
  std::size_t dim() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }

  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }

  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }

  const std::vector<double>& data() const noexcept { return v_; }

  bool finite() const noexcept {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const Vector& a, const Vector& b) = default;

 private:
  std::vector<double> v_;
};

namespace detail {
inline void same_dim(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ContractError("dimension mismatch: " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
}
}  // namespace detail

enum class Op { add, sub, mul, div, max, min };

template <class F>
Vector map(const Vector& a, F&& f) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = f(a[i]);
  return r;
}

template <class F>
Vector zip(const Vector& a, const Vector& b, F&& f) {
  detail::same_dim(a, b);
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = f(a[i], b[i]);
  return r;
}

inline double apply_op(Op op, double x, double y) {
  switch (op) {
    case Op::add: return x + y;
    case Op::sub: return x - y;
    case Op::mul: return x * y;
    case Op::div:
      if (!(y > 0.0)) throw DomainError("division by nonpositive value");
      return x / y;
    case Op::max: return x > y ? x : y;
    case Op::min: return x < y ? x : y;
  }
  return 0.0;
}

inline Vector elementwise(Op op, const Vector& a, const Vector& b) {
  return zip(a, b, [op](double x, double y) { return apply_op(op, x, y); });
}

inline Vector elementwise(Op op, const Vector& a, double s) {
  return map(a, [op, s](double x) { return apply_op(op, x, s); });
}

inline Vector sqrt(const Vector& a) {
  return map(a, [](double x) {
    if (x < 0.0) throw DomainError("sqrt of negative value");
    return std::sqrt(x);
  });
}
inline Vector abs(const Vector& a) {
  return map(a, [](double x) { return std::fabs(x); });
}
inline Vector square(const Vector& a) {
  return map(a, [](double x) { return x * x; });
}

inline Vector operator+(const Vector& a, const Vector& b) { return elementwise(Op::add, a, b); }
inline Vector operator-(const Vector& a, const Vector& b) { return elementwise(Op::sub, a, b); }
inline Vector operator*(double s, const Vector& a) {
  return map(a, [s](double x) { return s * x; });
}
inline Vector operator*(const Vector& a, double s) { return s * a; }
inline Vector operator-(const Vector& a) {
  return map(a, [](double x) { return -x; });
}
// coordinate-wise product
inline Vector hadamard(const Vector& a, const Vector& b) { return elementwise(Op::mul, a, b); }

inline double dot(const Vector& a, const Vector& b) {
  detail::same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

// a ⪯ b coordinate-wise, with absolute slack
inline bool leq(const Vector& a, const Vector& b, double slack = 0.0) {
  detail::same_dim(a, b);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i] + slack) return false;
  return true;
}

inline Vector unit(std::size_t n, std::size_t i) {
  Vector e(n);
  e[i] = 1.0;
  return e;
}

// Central differences.
template <class F>
Vector fd_gradient(F&& f, const Vector& x, double h = 1e-5) {
  if (!(h > 0.0)) throw ContractError("fd step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DomainError("non-finite value in finite difference");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based stream: draw i is a pure function of (master_seed, stream_id, i).
// Satisfies UniformRandomBitGenerator so <random> distributions work on it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_(master_seed), stream_(stream_id),
        key_(splitmix64(splitmix64(master_seed) ^ splitmix64(~stream_id))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0xD1B54A32D192ED03ULL * (counter_++)); }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // (0,1]
  double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(*this); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>((*this)() % n); }

  // Independent child stream, e.g. for a sub-task of one trajectory.
  RngStream split(std::uint64_t k) const {
    return RngStream(splitmix64(key_ ^ splitmix64(k + 0x632BE59BD9B4E019ULL)), stream_);
  }

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline Vector random_direction(RngStream& rng, std::size_t n) {
  for (;;) {
    Vector u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = rng.normal();
    const double s = norm2(u);
    if (s > 1e-300) return (1.0 / s) * u;
  }
}

}  // namespace gsmooth
