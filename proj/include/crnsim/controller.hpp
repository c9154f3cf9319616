#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "crnsim/estimator.hpp"
#include "crnsim/sir_dynamics.hpp"
#include "crnsim/types.hpp"

namespace crnsim {

struct SirTargets {
  double su_high = 0.1;   // SU target while PUs are deactivated (-10 dB)
  double pu = 0.1995;     // PU target while activated (-7 dB)
  double su_low = 0.01;   // SU target while coexisting with PUs (-20 dB)
};

// gamma for (role, case); PU in Case1 is inactive and never asks for one.
inline double target_for(Role role, ActivityCase activity, const SirTargets& t) {
  if (role == Role::SU) return activity == ActivityCase::Case1 ? t.su_high : t.su_low;
  return t.pu;
}

struct PowerLimits {
  double max_w = 2.0;
};

struct ExplorationSchedule {
  bool enabled = true;
  double gain = 0.1;  // dither amplitude as a fraction of the nominal control
};

// K = (Theta_vv)^-1 * Theta_vE from the estimated action-value kernel.
inline Vec2 gain_from_theta(const Mat3& theta) {
  const double vv = theta(2, 2);
  if (std::abs(vv) < 1e-12)
    throw GainSingularityError("gain_from_theta: Theta_vv block is numerically singular");
  return Vec2(theta(2, 0), theta(2, 1)) / vv;
}

inline double control_input(const Vec2& gain, const Vec2& e, double dither) {
  return -gain.dot(e) + dither;
}

struct PowerCommand {
  double power_w = 0.0;
  bool saturated = false;
};

inline PowerCommand power_command(double nu, double interference_w, const PowerLimits& limits) {
  if (!(interference_w > 0.0))
    throw std::domain_error("power_command: interference must be positive");
  const double raw = nu * interference_w;
  const double clamped = std::clamp(raw, 0.0, limits.max_w);
  return PowerCommand{clamped, clamped != raw};
}

// Classical SIR-balancing step expressed in nu units; the ratio is capped at
// 10x so a silent start cannot command unbounded power.
inline double initial_admissible_policy(double sir, double target, double power_w,
                                        double interference_w) {
  const double ratio = target / std::max(sir, target / 10.0);
  return ratio * power_w / interference_w;
}

inline PowerCommand baseline_sir_tracking(double sir, double target, double power_w,
                                          const PowerLimits& limits) {
  const double ratio = target / std::max(sir, target / 10.0);
  const double raw = ratio * power_w;
  const double clamped = std::clamp(raw, 0.0, limits.max_w);
  return PowerCommand{clamped, clamped != raw};
}

// Everything a controller may see in one step: its own SIR and interference
// measurement, the step index and the network case. Nothing about other
// users' powers or gains crosses this boundary.
struct Measurement {
  double sir = 0.0;
  double interference_w = 0.0;
  int step = 0;
  ActivityCase activity = ActivityCase::Case2;
};

struct ControllerDiagnostics {
  double bellman_residual = 0.0;
  double terminal_residual_norm = 0.0;
  Vec2 gain = Vec2::Zero();
  double nu = 0.0;
  bool saturated = false;
  bool gain_fallback = false;
  bool active = false;
};

struct StepResult {
  double next_power_w = 0.0;
  ControllerDiagnostics diag;
};

struct ControllerConfig {
  Role role = Role::SU;
  SirTargets targets;
  Mat2 q = (Mat2() << 1.0, 0.0, 0.0, 0.01).finished();
  double s = 1.0;
  Mat2 p_terminal = Mat2::Identity();
  int horizon = 1;
  int basis_length = 3;
  int window = 36;
  double alpha_w = 1e-4;
  double ridge_lambda = 1e-8;
  ExplorationSchedule exploration;
  PowerLimits limits;
  double initial_power_w = 0.05;
};

class PowerController {
 public:
  virtual ~PowerController() = default;
  // One control iteration. When apply_power is false (user not scheduled in
  // the asynchronous discipline) the returned power equals the current one
  // and only the internal estimate advances.
  virtual StepResult step(const Measurement& m, bool apply_power) = 0;
  virtual double power() const = 0;
  virtual void set_power(double p) = 0;
  virtual Role role() const = 0;
};

// FH-AODPA policy: online value-kernel estimation, gain extraction from the
// learned Theta blocks, and the nu -> power law, with an admissible
// SIR-balancing policy blended in while the window fills.
class FhAodpaController : public PowerController {
 public:
  static constexpr double kGainGuardFraction = 0.2;
  static constexpr double kGainSmoothing = 0.04;
  static constexpr double kTrackingBand = 10.0;  // |e| <= band * gamma

  FhAodpaController(int id, const ControllerConfig& cfg, std::mt19937_64 dither_stream)
      : id_(id),
        cfg_(cfg),
        rng_(std::move(dither_stream)),
        estimator_(cfg.basis_length, cfg.window, cfg.alpha_w, cfg.ridge_lambda, cfg.horizon,
                   terminal_theta(cfg.p_terminal)),
        power_(cfg.initial_power_w) {}

  StepResult step(const Measurement& m, bool apply_power) override {
    StepResult out;
    out.next_power_w = power_;
    if (m.step >= cfg_.horizon) return out;  // algorithm stopped

    if (cfg_.role == Role::PU && m.activity == ActivityCase::Case1) {
      power_ = 0.0;
      out.next_power_w = 0.0;
      seen_activity_ = m.activity;
      has_seen_activity_ = true;
      return out;
    }
    if (!has_seen_activity_ || m.activity != seen_activity_) {
      reset_segment(m.activity);
    }

    const double gamma = target_for(cfg_.role, m.activity, cfg_.targets);
    const Vec2 e_vec = make_augmented_error(m.sir, gamma).vec();

    // Own-gain scale from the user's own measurements; sets the dither,
    // trust-region and regression units.
    if (power_ > 0.0 && m.sir > 0.0) rho_hat_ = m.sir * m.interference_w / power_;
    if (!scale_frozen_ && rho_hat_ > 0.0) {
      // Regression coordinates are frozen once per segment so every sample in
      // the window shares one basis: z' = diag(1/gamma, 1/gamma, rho/gamma) z
      // puts all quadratic monomials at O(1), which keeps the ridge term from
      // drowning the information in the raw watt-scale products.
      scale_ = Vec3(1.0 / gamma, 1.0 / gamma, rho_hat_ / gamma);
      estimator_ = make_estimator();
      scale_frozen_ = true;
    }

    if (!estimator_.window().empty()) estimator_.update();
    out.diag.bellman_residual = estimator_.newest_bellman_residual();
    out.diag.terminal_residual_norm = unscale_theta(estimator_.terminal_residual_now()).norm();

    // The terminal pin drives the estimated Theta_vv toward zero as tau -> 0,
    // so the fitted kernel right at tau_k is ill-conditioned near the end of
    // the horizon. The gain is extracted no closer to the terminal than one
    // window-width of normalized time, where the window actually constrains
    // the fit; a vv block small against its healthy scale S + rho^2 still
    // falls back to the previous gain, and accepted gains are smoothed so a
    // single noisy window solve cannot jerk the policy.
    Vec2 gain = last_gain_;
    const double vv_floor =
        rho_hat_ > 0.0 ? kGainGuardFraction * (cfg_.s + rho_hat_ * rho_hat_) : 0.0;
    const int extraction_step =
        std::min(m.step, cfg_.horizon - cfg_.window);
    try {
      const Mat3 theta =
          unscale_theta_matrix(estimator_.theta_matrix_at(std::max(extraction_step, 0)));
      if (std::abs(theta(2, 2)) < vv_floor)
        throw GainSingularityError("theta_vv below its healthy scale");
      const Vec2 fresh = gain_from_theta(theta);
      // Bias-corrected smoothing: a growing average while estimates are few,
      // a fixed-rate EMA once enough have been seen.
      ++gain_updates_;
      const double mix = std::max(kGainSmoothing, 1.0 / gain_updates_);
      gain = (1.0 - mix) * last_gain_ + mix * fresh;
      last_gain_ = gain;
    } catch (const GainSingularityError&) {
      out.diag.gain_fallback = true;
    }
    out.diag.gain = gain;

    double dither = 0.0;
    if (cfg_.exploration.enabled && rho_hat_ > 0.0) {
      const double eps0 = cfg_.exploration.gain * gamma / rho_hat_;
      const double decay = 1.0 - static_cast<double>(m.step) / cfg_.horizon;
      dither = eps0 * decay * uniform_(rng_);
    }

    // The learned command is trusted only inside a 10x band around the
    // balancing scale, matching the admissible policy's own ratio cap;
    // a wild early estimate can otherwise run the loop away before the
    // window has anything useful in it.
    double v_learned = control_input(gain, e_vec, 0.0);
    if (rho_hat_ > 0.0) v_learned = std::min(v_learned, 10.0 * gamma / rho_hat_);

    // A zero power is absorbing for the multiplicative balancing law, so
    // re-enter from the configured initial power instead.
    const double base_power = power_ > 0.0 ? power_ : cfg_.initial_power_w;
    const double v_admissible =
        initial_admissible_policy(m.sir, gamma, base_power, m.interference_w);
    // Pure admissible policy until the window has filled with in-region
    // samples, then a w-step ramp onto the learned gain. Outside the tracking
    // band the admissible policy also takes back over: it is the recovery
    // path if a bad estimate ever walks the loop away from its target.
    const bool in_band = std::abs(e_vec(0)) <= kTrackingBand * gamma;
    const double blend =
        in_band ? std::clamp(full_window_steps_ / static_cast<double>(cfg_.window), 0.0, 1.0)
                : 0.0;
    const double v_undithered = (1.0 - blend) * v_admissible + blend * v_learned;
    const double v = v_undithered + dither;

    const PowerCommand cmd = power_command(v, m.interference_w, cfg_.limits);
    out.diag.saturated = cmd.saturated;
    const double next_power = apply_power ? cmd.power_w : power_;

    // The trailing regression slice records the control actually realized on
    // the network (clamped, dithered, or held), which is what generated the
    // observed utility and transition. The leading slice evaluates the next
    // state under the behavior policy with the dither stripped, so the
    // exploration noise does not bias the value difference.
    const double nu_realized = next_power / m.interference_w;
    const double nu_policy =
        std::clamp(v_undithered, 0.0, cfg_.limits.max_w / m.interference_w);
    out.diag.nu = nu_realized;
    out.diag.active = true;

    // Transitions far outside the tracking band carry the large off-policy
    // bias of the value-difference regression; keep them out of the window.
    if (in_band) {
      push_transition(m.step, e_vec, nu_realized, nu_policy);
    } else {
      has_prev_ = false;  // regressors must pair consecutive in-band steps
    }
    if (estimator_.window().size() >= cfg_.window) ++full_window_steps_;

    power_ = next_power;
    out.next_power_w = next_power;
    ++steps_since_reset_;
    return out;
  }

  double power() const override { return power_; }
  void set_power(double p) override { power_ = p; }
  Role role() const override { return cfg_.role; }

  const ValueEstimator& estimator() const { return estimator_; }
  const Vec2& last_gain() const { return last_gain_; }

 private:
  void reset_segment(ActivityCase activity) {
    estimator_.reset();
    last_gain_.setZero();
    gain_updates_ = 0;
    steps_since_reset_ = 0;
    full_window_steps_ = 0;
    has_prev_ = false;
    scale_frozen_ = false;
    seen_activity_ = activity;
    has_seen_activity_ = true;
  }

  // Component scales of the 6-vector kernel layout under z' = diag(scale) z.
  Vec6 scale6() const {
    Vec6 s;
    s << scale_(0) * scale_(0), scale_(0) * scale_(1), scale_(0) * scale_(2),
        scale_(1) * scale_(1), scale_(1) * scale_(2), scale_(2) * scale_(2);
    return s;
  }
  Vec6 unscale_theta(const Vec6& scaled) const { return scaled.cwiseProduct(scale6()); }
  Mat3 unscale_theta_matrix(const Mat3& scaled) const {
    return scale_.asDiagonal() * scaled * scale_.asDiagonal();
  }

  ValueEstimator make_estimator() const {
    const Vec6 theta_terminal_scaled =
        terminal_theta(cfg_.p_terminal).cwiseQuotient(scale6());
    return ValueEstimator(cfg_.basis_length, cfg_.window, cfg_.alpha_w, cfg_.ridge_lambda,
                          cfg_.horizon, theta_terminal_scaled);
  }

  void push_transition(int step, const Vec2& e_vec, double nu_realized, double nu_policy) {
    Vec3 z_policy, z_realized;
    z_policy << e_vec(0) * scale_(0), e_vec(1) * scale_(1), nu_policy * scale_(2);
    z_realized << e_vec(0) * scale_(0), e_vec(1) * scale_(1), nu_realized * scale_(2);
    const Eigen::VectorXd sigma = estimator_.sigma_at(step);
    if (has_prev_) {
      RegressionSample sample;
      sample.utility = prev_utility_;
      sample.regressor =
          regression_difference(sigma, kron_basis(z_policy), prev_sigma_, prev_zbar_);
      sample.step = step;
      estimator_.push_sample(std::move(sample));
    }
    prev_zbar_ = kron_basis(z_realized);
    prev_sigma_ = sigma;
    prev_utility_ = utility(e_vec, nu_realized, cfg_.q, cfg_.s);
    has_prev_ = true;
  }

  int id_ = 0;
  ControllerConfig cfg_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{-1.0, 1.0};
  ValueEstimator estimator_;
  double power_ = 0.0;
  double rho_hat_ = 0.0;
  Vec2 last_gain_ = Vec2::Zero();
  int gain_updates_ = 0;
  Vec3 scale_ = Vec3::Ones();
  bool scale_frozen_ = false;
  int steps_since_reset_ = 0;
  int full_window_steps_ = 0;
  bool has_seen_activity_ = false;
  ActivityCase seen_activity_ = ActivityCase::Case2;
  bool has_prev_ = false;
  Vec6 prev_zbar_ = Vec6::Zero();
  Eigen::VectorXd prev_sigma_;
  double prev_utility_ = 0.0;
};

// Classical SIR balancing toward the case target.
class BaselineController : public PowerController {
 public:
  BaselineController(Role role, SirTargets targets, PowerLimits limits, double initial_power_w)
      : role_(role), targets_(targets), limits_(limits), initial_power_(initial_power_w),
        power_(initial_power_w) {}

  StepResult step(const Measurement& m, bool apply_power) override {
    StepResult out;
    out.next_power_w = power_;
    if (role_ == Role::PU && m.activity == ActivityCase::Case1) {
      power_ = 0.0;
      out.next_power_w = 0.0;
      return out;
    }
    const double gamma = target_for(role_, m.activity, targets_);
    // The ratio law cannot leave an exact zero; restart from the initial power.
    const double base_power = power_ > 0.0 ? power_ : initial_power_;
    const PowerCommand cmd = baseline_sir_tracking(m.sir, gamma, base_power, limits_);
    out.diag.saturated = cmd.saturated;
    out.diag.active = true;
    if (apply_power) power_ = cmd.power_w;
    out.diag.nu = power_ / m.interference_w;
    out.next_power_w = power_;
    return out;
  }

  double power() const override { return power_; }
  void set_power(double p) override { power_ = p; }
  Role role() const override { return role_; }

 private:
  Role role_;
  SirTargets targets_;
  PowerLimits limits_;
  double initial_power_ = 0.0;
  double power_ = 0.0;
};

// Traditional exclusive-spectrum policy: SUs stay silent whenever PUs are
// active; otherwise behaves like the baseline tracker.
class DenyController : public PowerController {
 public:
  DenyController(Role role, SirTargets targets, PowerLimits limits, double initial_power_w)
      : inner_(role, targets, limits, initial_power_w) {}

  StepResult step(const Measurement& m, bool apply_power) override {
    if (inner_.role() == Role::SU && m.activity == ActivityCase::Case2) {
      inner_.set_power(0.0);
      StepResult out;
      out.next_power_w = 0.0;
      return out;
    }
    return inner_.step(m, apply_power);
  }

  double power() const override { return inner_.power(); }
  void set_power(double p) override { inner_.set_power(p); }
  Role role() const override { return inner_.role(); }

 private:
  BaselineController inner_;
};

// Plays a precomputed finite-horizon gain sequence; used as the clairvoyant
// reference on effectively static scenarios.
class OracleController : public PowerController {
 public:
  OracleController(Role role, SirTargets targets, PowerLimits limits, double initial_power_w,
                   int horizon)
      : role_(role), targets_(targets), limits_(limits), power_(initial_power_w),
        horizon_(horizon) {}

  void set_gain_sequence(std::vector<Vec2> gains) { gains_ = std::move(gains); }

  StepResult step(const Measurement& m, bool apply_power) override {
    StepResult out;
    out.next_power_w = power_;
    if (m.step >= horizon_) return out;
    if (role_ == Role::PU && m.activity == ActivityCase::Case1) {
      power_ = 0.0;
      out.next_power_w = 0.0;
      return out;
    }
    const double gamma = target_for(role_, m.activity, targets_);
    Vec2 e;
    e << m.sir - gamma, gamma;
    const Vec2 gain = m.step < static_cast<int>(gains_.size()) ? gains_[m.step] : Vec2::Zero();
    const double v = control_input(gain, e, 0.0);
    const PowerCommand cmd = power_command(v, m.interference_w, limits_);
    out.diag.saturated = cmd.saturated;
    out.diag.gain = gain;
    out.diag.active = true;
    if (apply_power) power_ = cmd.power_w;
    out.diag.nu = power_ / m.interference_w;
    out.next_power_w = power_;
    return out;
  }

  double power() const override { return power_; }
  void set_power(double p) override { power_ = p; }
  Role role() const override { return role_; }

 private:
  Role role_;
  SirTargets targets_;
  PowerLimits limits_;
  double power_ = 0.0;
  int horizon_ = 0;
  std::vector<Vec2> gains_;
};

}  // namespace crnsim
