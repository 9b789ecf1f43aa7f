#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core.hpp"
#include "objectives.hpp"
#include "optimizers.hpp"
#include "theory.hpp"

namespace gsmooth {

enum class Lemma : int {
  bounded,      // stepsize and momentum bounds while t < tau
  update,       // ‖x_{t+1} − x_t‖ ≤ ηD
  jensen,       // v̂ ⪰ m̂² and ‖Δx‖∞ ≤ η when β = β_sq
  moment,       // ‖ε_t‖ ≤ 2σ, ‖γ_{t−1}‖ ≤ 2σ
  descent,      // one-step descent inequality (Adam)
  recursion,    // one-step recursion for ‖ε_t‖²
  upper,        // S ≤ I1, per run
  lower,        // S > G³/(16ηDL) when tau ≤ T
  martingale,   // |Σ α_t<γ_{t−1}, g_t − ∇f(x_t)>| within its bound
  vr_update,    // ‖Δx‖ ≤ ηD (VRAdam)
  vr_wt,        // ‖W_t‖ bound
  vr_descent,   // descent inequality (VRAdam)
  vr_identity,  // ε_t = (1−β)ε_{t−1} + W_t
  count_
};

inline constexpr int kLemmaCount = static_cast<int>(Lemma::count_);

inline const char* lemma_id(Lemma l) {
  static constexpr const char* ids[kLemmaCount] = {
      "C1.bounded", "update.bound", "update.jensen", "C3.moment",   "C4.descent", "C8.recursion", "C6.upper",
      "C7.lower",   "C9.martingale", "D3.update",    "D4.wt",       "D6.descent", "D.identity"};
  return ids[static_cast<int>(l)];
}

inline std::optional<Lemma> parse_lemma_id(const std::string& s) {
  for (int i = 0; i < kLemmaCount; ++i)
    if (s == lemma_id(static_cast<Lemma>(i))) return static_cast<Lemma>(i);
  return std::nullopt;
}

enum class FailPolicy { record, abort };

struct LemmaCheckConfig {
  std::set<Lemma> enabled;  // empty: all
  double slack_rel = 1e-9;
  FailPolicy fail_policy = FailPolicy::record;

  bool on(Lemma l) const { return enabled.empty() || enabled.count(l) > 0; }
};

struct CheckCounter {
  std::uint64_t checked = 0;
  std::uint64_t skipped = 0;
  std::uint64_t violated = 0;
};

struct Row {
  std::uint64_t t = 0;
  double f = 0, grad_norm = 0, eps_norm = 0, gamma_norm = 0, w_norm = 0, update_norm = 0;
  double step_min = 0, step_max = 0, descent_residual = 0;
  int tau_flag = 0;  // 1 while t < tau
};

struct TrajectoryRecord {
  std::vector<Row> rows;
  std::vector<double> grad_norms;  // ‖∇f(x_t)‖ for t = 1..
  std::uint64_t T = 0;
  std::uint64_t tau = 0, tau1 = 0, tau2 = 0, tau_half = 0;
  std::optional<std::uint64_t> aborted_at;
  std::string abort_cause;
  std::array<CheckCounter, kLemmaCount> counters{};

  double S = 0.0;          // Σ_{t<τ} ‖∇f(x_t)‖²
  double sum_sq_all = 0.0;  // Σ_{t≤T} ‖∇f(x_t)‖²
  double max_grad_norm = 0.0;
  double final_f = 0.0;
  double martingale = 0.0;
  double eps_tau_sq = 0.0;
  double d7_aggregate = 0.0;
  double max_identity_residual = 0.0;
  double max_eps_norm = 0.0;

  std::map<std::string, CheckCounter> violations_map() const {
    std::map<std::string, CheckCounter> m;
    for (int i = 0; i < kLemmaCount; ++i) m[lemma_id(static_cast<Lemma>(i))] = counters[i];
    return m;
  }
  std::uint64_t total_violations() const {
    std::uint64_t s = 0;
    for (const auto& c : counters) s += c.violated;
    return s;
  }
};

struct SummaryVerdict {
  double S = 0.0;
  double I1 = 0.0, I2 = 0.0;
  bool upper_flag = false;
  bool lower_applicable = false;
  bool lower_holds = true;
  std::optional<double> avg_sq_grad;
  bool avg_ok = false;
  std::uint64_t tau_half = 0;
  double eps_tau_sq = 0.0;
  double d7_aggregate = 0.0;
  double martingale = 0.0;
  double martingale_bound = 0.0;
  bool martingale_exceeded = false;
  bool hard_violation = false;
};

// τ recomputed from a stored gradient-norm array.
inline std::uint64_t offline_tau(const std::vector<double>& grad_norms, double G, std::uint64_t T) {
  for (std::size_t i = 0; i < grad_norms.size() && i < T; ++i)
    if (grad_norms[i] > G) return i + 1;
  return T + 1;
}

inline std::uint64_t offline_tau_half(const std::vector<double>& grad_norms, double G, std::uint64_t tau) {
  std::uint64_t last = 0;
  for (std::uint64_t t = 1; t < tau && t <= grad_norms.size(); ++t)
    if (grad_norms[t - 1] <= G / 2.0) last = t;
  return last;
}

class Monitor {
 public:
  Monitor(const ObjectiveSpec& spec, const TheoryConstants& tc, const HyperParams& hp, LemmaCheckConfig cfg = {},
          bool keep_rows = false, std::uint64_t stride = 1)
      : spec_(spec), tc_(tc), hp_(hp), cfg_(std::move(cfg)), keep_rows_(keep_rows), stride_(std::max<std::uint64_t>(1, stride)) {
    rec_.T = hp.T;
    rec_.tau = rec_.tau1 = rec_.tau2 = hp.T + 1;
    G_ = tc.G;
    sig_ = tc.sigma;
    eta_ = hp.eta;
    lam_ = hp.lambda;
    // parameter side-conditions, evaluated once
    const double r = tc.r, D = tc.D, L = tc.L;
    c_update_ = tc.mode == DMode::adam_matched ? hp.beta == hp.beta_sq && G_ >= sig_ : G_ >= sig_;
    c_moment_ = eta_ <= std::min(r / D, sig_ * hp.beta / (D * L));
    c_descent_ = G_ >= sig_ + lam_ && eta_ <= std::min(r / D, lam_ / (6.0 * L));
    c_recursion_ = G_ >= 2.0 * sig_ && eta_ <= std::min(r / D, std::pow(lam_, 1.5) * hp.beta / (6.0 * L * std::sqrt(G_)));
    c_wt_ = G_ >= 2.0 * sig_ && eta_ <= r / (2.0 * D);
    c_lower_ = G_ >= 2.0 * std::max(tc.grad1_norm, sig_) && eta_ <= std::min(r / D, G_ / (4.0 * D * L));
  }

  const TrajectoryRecord& record() const { return rec_; }
  TrajectoryRecord& record() { return rec_; }
  bool abort_requested() const { return abort_requested_; }

  void begin(const Vector& x1) {
    f_cur_ = spec_.value(x1);
    grad_cur_ = spec_.gradient(x1);
  }

  const Vector& true_grad() const { return grad_cur_; }
  const Vector& prev_true_grad() const { return grad_prev_; }

  // Adam step t: before holds x_t, after holds x_{t+1}; g is the sampled gradient at x_t.
  // Returns false when the new iterate cannot be evaluated.
  bool observe_adam(const AdamState& before, const AdamState& after, const Vector& g) {
    const std::uint64_t t = before.t;
    const double gn = norm2(grad_cur_);
    mark_gradient(t, gn);
    const bool active = t < rec_.tau;

    const double a = t == 1 ? 1.0 : alpha_t(hp_.beta, after.pow_b);
    const Vector eps = after.m_hat - grad_cur_;
    const double en = norm2(eps);
    Vector gamma;
    double gam_n = 0.0;
    if (t >= 2) {
      gamma = (1.0 - a) * (eps_prev_ + grad_prev_ - grad_cur_);
      gam_n = norm2(gamma);
    }
    const Vector noise = g - grad_cur_;
    if (t >= 2 && t <= rec_.tau) rec_.martingale += a * dot(gamma, noise);

    const Vector dx = after.x - before.x;
    const double un = norm2(dx);
    const Vector h = stepsize(after.v_hat, eta_, lam_);
    const auto [hmin, hmax] = std::minmax_element(h.begin(), h.end());

    if (!advance(after.x)) return finish_row(t, gn, en, gam_n, 0.0, un, *hmin, *hmax, NAN, active, false);
    const double residual = (f_cur_ - f_prev_) - (-(eta_ / (4.0 * G_)) * gn * gn + (eta_ / lam_) * en * en);

    if (active) {
      const double cap = G_ + sig_;
      if (cfg_.on(Lemma::bounded)) {
        bool ok = leq_s(norm2(g), cap) && leq_s(norm2(after.m_hat), cap);
        for (std::size_t i = 0; i < h.size() && ok; ++i)
          ok = leq_s(after.v_hat[i], cap * cap) && leq_s(eta_ / (cap + lam_), h[i]) && leq_s(h[i], eta_ / lam_);
        count(Lemma::bounded, ok);
      }
      if (cfg_.on(Lemma::update)) gated(Lemma::update, c_update_, [&] { return leq_s(un, eta_ * tc_.D); });
      if (cfg_.on(Lemma::jensen))
        gated(Lemma::jensen, hp_.beta == hp_.beta_sq, [&] {
          for (std::size_t i = 0; i < eps.size(); ++i) {
            const double m2 = after.m_hat[i] * after.m_hat[i];
            if (after.v_hat[i] - m2 < -1e-12 * std::max(1.0, after.v_hat[i])) return false;
          }
          return leq_s(norm_inf(dx), eta_);
        });
      if (cfg_.on(Lemma::moment))
        gated(Lemma::moment, c_moment_,
              [&] { return leq_s(en, 2.0 * sig_) && (t < 2 || leq_s(gam_n, 2.0 * sig_)); });
      if (cfg_.on(Lemma::descent)) gated(Lemma::descent, c_descent_, [&] { return leq_s(residual, 0.0, f_cur_); });
      if (cfg_.on(Lemma::recursion) && t >= 2)
        gated(Lemma::recursion, c_recursion_, [&] {
          const double gp = norm2(grad_prev_), ep = norm2(eps_prev_);
          const double rhs = (1.0 - a / 2.0) * ep * ep + (lam_ * hp_.beta / (16.0 * G_)) * gp * gp +
                             a * a * sig_ * sig_ + 2.0 * a * dot(gamma, noise);
          return leq_s(en * en, rhs);
        });
      rec_.S += gn * gn;
    }
    rec_.sum_sq_all += gn * gn;
    if (t == std::min(rec_.tau, rec_.T)) rec_.eps_tau_sq = en * en;
    rec_.max_eps_norm = std::max(rec_.max_eps_norm, en);

    eps_prev_ = eps;
    return finish_row(t, gn, en, gam_n, 0.0, un, *hmin, *hmax, residual, active, true);
  }

  // VRAdam initialization: after holds x_2, m1 is the mega-batch gradient at x_1.
  bool observe_vradam_init(const Vector& x1, const VRAdamState& after, const Vector& m1) {
    const double gn = norm2(grad_cur_);
    const Vector eps = m1 - grad_cur_;
    const double en = norm2(eps);
    mark_gradient(1, gn);
    mark_eps(1, en);
    return vr_common(1, x1, after, eps, gn, en, 0.0);
  }

  // VRAdam step t ≥ 2: g_cur = ∇f(x_t,ξ_t), g_prev = ∇f(x_{t−1},ξ_t).
  bool observe_vradam(const VRAdamState& before, const VRAdamState& after, const Vector& g_cur,
                      const Vector& g_prev) {
    const std::uint64_t t = before.t;
    const double gn = norm2(grad_cur_);
    const Vector eps = after.m - grad_cur_;
    const double en = norm2(eps);
    mark_gradient(t, gn);
    mark_eps(t, en);
    const double b = hp_.beta;
    const Vector W = (g_cur - grad_cur_) - (1.0 - b) * (g_prev - grad_prev_);
    const double wn = norm2(W);
    const bool active = t < rec_.tau;

    if (cfg_.on(Lemma::vr_identity)) {
      const Vector resid = eps - ((1.0 - b) * eps_prev_ + W);
      const double scale = 1.0 + norm2(after.m) + norm2(grad_cur_) + norm2(grad_prev_) + norm2(g_cur) + norm2(g_prev);
      const double rn = norm2(resid);
      rec_.max_identity_residual = std::max(rec_.max_identity_residual, rn);
      count(Lemma::vr_identity, rn <= 1e-12 * scale);
    }
    if (active && cfg_.on(Lemma::vr_wt))
      gated(Lemma::vr_wt, c_wt_, [&] {
        return leq_s(wn, b * sig_ + (5.0 * eta_ * tc_.L / lam_) * (norm2(grad_prev_) + norm2(eps_prev_)));
      });
    return vr_common(t, before.x, after, eps, gn, en, wn);
  }

  SummaryVerdict finalize() const {
    SummaryVerdict v;
    v.S = rec_.S;
    const Contradiction q = contradiction_quantities(tc_, hp_);
    v.I1 = q.I1;
    v.I2 = q.I2;
    v.upper_flag = rec_.S <= q.I1;
    const std::uint64_t T = rec_.T;
    const bool reached = !rec_.aborted_at || *rec_.aborted_at > rec_.tau;
    // the VRAdam contradiction arm needs the gradient cap to be the one that fired
    const bool by_gradient = rec_.tau == rec_.tau1;
    if (rec_.tau <= T && reached && by_gradient && c_lower_) {
      v.lower_applicable = true;
      v.lower_holds = rec_.S > q.I2;
      v.hard_violation = !v.lower_holds;
    }
    if (rec_.tau == T + 1 && !rec_.aborted_at) {
      v.avg_sq_grad = rec_.sum_sq_all / static_cast<double>(T);
      v.avg_ok = tc_.eps_target > 0.0 && *v.avg_sq_grad <= tc_.eps_target * tc_.eps_target;
    }
    v.tau_half = offline_tau_half(rec_.grad_norms, G_, rec_.tau);
    v.eps_tau_sq = rec_.eps_tau_sq;
    v.d7_aggregate = rec_.d7_aggregate;
    v.martingale = rec_.martingale;
    v.martingale_bound =
        5.0 * sig_ * sig_ * std::sqrt((1.0 + hp_.beta * hp_.beta * static_cast<double>(T)) * tc_.iota);
    v.martingale_exceeded = std::fabs(rec_.martingale) > v.martingale_bound;
    return v;
  }

  // Writes the run-level checks into the counters; returns the verdict.
  SummaryVerdict close() {
    SummaryVerdict v = finalize();
    if (cfg_.on(Lemma::upper)) count(Lemma::upper, v.upper_flag);
    if (cfg_.on(Lemma::lower)) {
      if (v.lower_applicable)
        count(Lemma::lower, v.lower_holds);
      else
        ++rec_.counters[static_cast<int>(Lemma::lower)].skipped;
    }
    if (cfg_.on(Lemma::martingale)) count(Lemma::martingale, !v.martingale_exceeded);
    rec_.final_f = f_cur_;
    rec_.tau_half = v.tau_half;
    return v;
  }

  void mark_abort(std::uint64_t t, const std::string& cause) {
    if (!rec_.aborted_at) {
      rec_.aborted_at = t;
      rec_.abort_cause = cause;
    }
  }

 private:
  bool vr_common(std::uint64_t t, const Vector& x_t, const VRAdamState& after, const Vector& eps, double gn, double en,
                 double wn) {
    const bool active = t < rec_.tau;
    const Vector dx = after.x - x_t;
    const double un = norm2(dx);
    const Vector h = stepsize(after.v_hat, eta_, lam_);
    const auto [hmin, hmax] = std::minmax_element(h.begin(), h.end());
    if (!advance(after.x)) return finish_row(t, gn, en, 0.0, wn, un, *hmin, *hmax, NAN, active, false);
    const double residual = (f_cur_ - f_prev_) - (-(eta_ / (4.0 * G_)) * gn * gn + (eta_ / lam_) * en * en);
    if (active) {
      if (cfg_.on(Lemma::vr_update)) count(Lemma::vr_update, leq_s(un, eta_ * tc_.D));
      if (cfg_.on(Lemma::vr_descent))
        gated(Lemma::vr_descent, c_descent_, [&] { return leq_s(residual, 0.0, f_cur_); });
      rec_.S += gn * gn;
      rec_.d7_aggregate += (hp_.beta / 2.0) * en * en - (lam_ * hp_.beta / (16.0 * G_)) * gn * gn;
    }
    rec_.sum_sq_all += gn * gn;
    if (t == std::min(rec_.tau, rec_.T)) rec_.eps_tau_sq = en * en;
    rec_.max_eps_norm = std::max(rec_.max_eps_norm, en);
    eps_prev_ = eps;
    return finish_row(t, gn, en, 0.0, wn, un, *hmin, *hmax, residual, active, true);
  }

  void mark_gradient(std::uint64_t t, double gn) {
    rec_.grad_norms.push_back(gn);
    rec_.max_grad_norm = std::max(rec_.max_grad_norm, gn);
    if (rec_.tau1 == rec_.T + 1 && gn > G_) rec_.tau1 = t;
    rec_.tau = std::min(rec_.tau1, rec_.tau2);
  }

  void mark_eps(std::uint64_t t, double en) {
    if (rec_.tau2 == rec_.T + 1 && en > tc_.E) rec_.tau2 = t;
    rec_.tau = std::min(rec_.tau1, rec_.tau2);
  }

  // Moves the cached point to x_{t+1}.
  bool advance(const Vector& x_next) {
    try {
      const double fn = spec_.value(x_next);
      Vector gn = spec_.gradient(x_next);
      if (!std::isfinite(fn) || !gn.finite()) throw NumericalFailure("non-finite objective");
      f_next_ = fn;
      grad_prev_ = std::move(grad_cur_);
      grad_cur_ = std::move(gn);
      f_prev_ = f_cur_;
      f_cur_ = f_next_;
      return true;
    } catch (const DomainError& e) {
      next_error_ = std::string("domain exit: ") + e.what();
    } catch (const NumericalFailure& e) {
      next_error_ = std::string("numerical failure: ") + e.what();
    }
    return false;
  }

 public:
  const std::string& next_error() const { return next_error_; }

 private:
  bool finish_row(std::uint64_t t, double gn, double en, double gam, double wn, double un, double hmin, double hmax,
                  double residual, bool active, bool ok) {
    if (keep_rows_ && ((t - 1) % stride_ == 0 || t == rec_.T)) {
      Row r;
      r.t = t;
      r.f = ok ? f_prev_ : f_cur_;
      r.grad_norm = gn;
      r.eps_norm = en;
      r.gamma_norm = gam;
      r.w_norm = wn;
      r.update_norm = un;
      r.step_min = hmin;
      r.step_max = hmax;
      r.descent_residual = residual;
      r.tau_flag = active ? 1 : 0;
      rec_.rows.push_back(r);
    }
    return ok;
  }

  bool leq_s(double lhs, double rhs, double extra = 0.0) const {
    return lhs <= rhs + cfg_.slack_rel * (1.0 + std::fabs(lhs) + std::fabs(rhs) + std::fabs(extra));
  }

  void count(Lemma l, bool ok) {
    auto& c = rec_.counters[static_cast<int>(l)];
    ++c.checked;
    if (!ok) {
      ++c.violated;
      if (cfg_.fail_policy == FailPolicy::abort) abort_requested_ = true;
    }
  }

  template <class F>
  void gated(Lemma l, bool condition, F&& check) {
    if (!condition) {
      ++rec_.counters[static_cast<int>(l)].skipped;
      return;
    }
    count(l, check());
  }

  const ObjectiveSpec& spec_;
  TheoryConstants tc_;
  HyperParams hp_;
  LemmaCheckConfig cfg_;
  bool keep_rows_;
  std::uint64_t stride_;
  TrajectoryRecord rec_;
  double G_ = 0, sig_ = 0, eta_ = 0, lam_ = 0;
  bool c_update_ = false, c_moment_ = false, c_descent_ = false, c_recursion_ = false, c_wt_ = false,
       c_lower_ = false;
  bool abort_requested_ = false;
  double f_cur_ = 0, f_prev_ = 0, f_next_ = 0;
  Vector grad_cur_, grad_prev_, eps_prev_;
  std::string next_error_;
};

}  // namespace gsmooth
