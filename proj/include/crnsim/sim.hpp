#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "crnsim/config.hpp"
#include "crnsim/controller.hpp"
#include "crnsim/metrics.hpp"
#include "crnsim/network.hpp"
#include "crnsim/riccati.hpp"
#include "crnsim/rng.hpp"
#include "crnsim/types.hpp"

namespace crnsim {

// Aggregate Shannon rate of the active links normalized by the shared
// bandwidth: sum of log2(1 + SIR_i) over active transmitters.
inline double spectrum_efficiency(const NetworkState& state, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0))
    throw std::domain_error("spectrum_efficiency: bandwidth must be positive");
  double acc = 0.0;
  const int n = static_cast<int>(state.nodes.size());
  for (int i = 0; i < n; ++i) {
    if (!state.transmitter_active(i)) continue;
    acc += std::log2(1.0 + compute_sir(i, state));
  }
  return acc;
}

// Scenario driver: owns the network, the per-link channel streams and one
// controller per node, and advances them through the configured horizon.
class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.finalize();
    cfg_.validate();
    const int n = cfg_.count_pu + cfg_.count_su;

    std::mt19937_64 placement = make_stream(cfg_.seed, stream_tag::kPlacement);
    state_.nodes = place_nodes(cfg_.count_pu, cfg_.count_su, cfg_.area_km,
                               cfg_.link_distance_km, placement);
    state_.noise_floor_w = cfg_.noise_floor_w;

    std::uniform_real_distribution<double> p_init(cfg_.p_init_min_w, cfg_.p_init_max_w);
    initial_power_.resize(n);
    for (int i = 0; i < n; ++i) initial_power_[i] = p_init(placement);

    state_.gains = GainTable(n);
    link_streams_.reserve(n * n);
    for (int rx = 0; rx < n; ++rx) {
      for (int tx = 0; tx < n; ++tx) {
        link_streams_.push_back(
            make_stream(cfg_.seed, stream_tag::kChannel, static_cast<std::uint64_t>(rx) * n + tx));
        const double d =
            link_distance_km(state_.nodes[rx], state_.nodes[tx], cfg_.min_distance_km);
        state_.gains.link(rx, tx) = sample_channel(link_streams_.back(), d, cfg_.channel);
      }
    }

    schedule_ = ActivitySchedule(cfg_.schedule.empty()
                                     ? std::vector<Interval>{Interval{0.0, 1.0, ActivityCase::Case1}}
                                     : cfg_.schedule);

    ControllerConfig base;
    base.targets = cfg_.targets;
    base.q = cfg_.q_matrix();
    base.s = cfg_.s_control;
    base.p_terminal = cfg_.p_terminal_matrix();
    base.horizon = std::max(1, cfg_.horizon_steps);
    base.basis_length = cfg_.basis_length;
    base.window = cfg_.window;
    base.alpha_w = cfg_.alpha_w;
    base.ridge_lambda = cfg_.ridge_lambda;
    base.exploration.enabled = cfg_.exploration;
    base.exploration.gain = cfg_.exploration_gain;
    base.limits.max_w = cfg_.p_max_w;

    for (int i = 0; i < n; ++i) {
      ControllerConfig cc = base;
      cc.role = state_.nodes[i].role;
      cc.initial_power_w = initial_power_[i];
      controllers_.push_back(make_controller(i, cc));
      state_.nodes[i].power_w = initial_power_[i];
    }
  }

  std::vector<MetricsRecord> run() {
    std::vector<MetricsRecord> trace;
    const int n = static_cast<int>(state_.nodes.size());
    const int horizon = cfg_.horizon_steps;
    if (horizon == 0) return trace;
    trace.reserve(horizon);

    double cumulative_cost = 0.0;
    bool have_case = false;
    ActivityCase current_case = ActivityCase::Case2;
    std::vector<double> prev_sir(n, 0.0);

    for (int k = 0; k < horizon; ++k) {
      const double t = k * cfg_.sample_time_s;
      const ActivityCase step_case = schedule_.at(t);

      if (!have_case) {
        apply_case_entry(step_case);
        if (cfg_.controller == ControllerKind::Oracle) refresh_oracle_gains();
        have_case = true;
      } else if (step_case != current_case) {
        // Close out the previous segment with its terminal cost before any
        // power or target switches.
        cumulative_cost += terminal_cost(prev_sir, current_case);
        apply_case_entry(step_case);
        if (cfg_.controller == ControllerKind::Oracle) refresh_oracle_gains();
      }
      current_case = step_case;
      state_.activity = step_case;

      if (k > 0) evolve_links();

      // Measurement snapshot for every user.
      std::vector<double> sir(n), interf(n);
      for (int i = 0; i < n; ++i) {
        interf[i] = interference(i, state_);
        sir[i] = compute_sir(i, state_);
      }

      const int scheduled = k % n;
      std::vector<StepResult> results(n);
      for (int i = 0; i < n; ++i) {
        const bool apply =
            cfg_.update_mode == UpdateMode::Synchronous || i == scheduled;
        Measurement m;
        m.sir = sir[i];
        m.interference_w = interf[i];
        m.step = k;
        m.activity = step_case;
        results[i] = controllers_[i]->step(m, apply);
      }
      // The record reflects the step-k snapshot, before new powers apply.
      MetricsRecord record = make_record(k, sir, results);

      for (int i = 0; i < n; ++i) state_.nodes[i].power_w = results[i].next_power_w;

      // Stage cost over the users active in this case.
      for (int i = 0; i < n; ++i) {
        if (!state_.transmitter_active(i)) continue;
        const double gamma = target_for(state_.nodes[i].role, step_case, cfg_.targets);
        const Vec2 e = make_augmented_error(sir[i], gamma).vec();
        const double nu = results[i].next_power_w / interf[i];
        cumulative_cost += utility(e, nu, cfg_.q_matrix(), cfg_.s_control);
      }

      record.cumulative_cost = cumulative_cost;
      trace.push_back(record);
      prev_sir = sir;
    }

    // Horizon terminal: one more measurement after the last power update.
    evolve_links();
    state_.activity = current_case;
    std::vector<double> final_sir(n);
    for (int i = 0; i < n; ++i) final_sir[i] = compute_sir(i, state_);
    cumulative_cost += terminal_cost(final_sir, current_case);
    trace.back().cumulative_cost = cumulative_cost;
    return trace;
  }

  const NetworkState& network() const { return state_; }
  const ScenarioConfig& config() const { return cfg_; }
  PowerController& controller(int i) { return *controllers_[i]; }

 private:
  std::unique_ptr<PowerController> make_controller(int i, const ControllerConfig& cc) {
    switch (cfg_.controller) {
      case ControllerKind::FhAodpa:
        return std::make_unique<FhAodpaController>(
            i, cc, make_stream(cfg_.seed, stream_tag::kController, i));
      case ControllerKind::Baseline:
        return std::make_unique<BaselineController>(cc.role, cc.targets, cc.limits,
                                                    cc.initial_power_w);
      case ControllerKind::Deny:
        return std::make_unique<DenyController>(cc.role, cc.targets, cc.limits,
                                                cc.initial_power_w);
      case ControllerKind::Oracle:
        return std::make_unique<OracleController>(cc.role, cc.targets, cc.limits,
                                                  cc.initial_power_w, cc.horizon);
    }
    throw std::logic_error("make_controller: unknown controller kind");
  }

  void apply_case_entry(ActivityCase c) {
    for (std::size_t i = 0; i < controllers_.size(); ++i) {
      if (state_.nodes[i].role != Role::PU) continue;
      const double p = c == ActivityCase::Case1 ? 0.0 : initial_power_[i];
      controllers_[i]->set_power(p);
      state_.nodes[i].power_w = p;
    }
  }

  // Frozen-plant gain schedules for the clairvoyant reference; exact on
  // static channels, a best-effort reference otherwise.
  void refresh_oracle_gains() {
    for (std::size_t i = 0; i < controllers_.size(); ++i) {
      auto* oracle = dynamic_cast<OracleController*>(controllers_[i].get());
      if (oracle == nullptr) continue;
      const ErrorSystem sys = error_system(0.0, state_.gains.gain(static_cast<int>(i),
                                                                  static_cast<int>(i)));
      const OracleSolution sol = backward_riccati(sys.A, sys.B, cfg_.q_matrix(),
                                                  cfg_.s_control, cfg_.p_terminal_matrix(),
                                                  cfg_.horizon_steps);
      oracle->set_gain_sequence(sol.gain);
    }
  }

  void evolve_links() {
    const int n = static_cast<int>(state_.nodes.size());
    if (!cfg_.channel.fading && cfg_.channel.shadowing_stddev_db == 0.0) return;
    for (int rx = 0; rx < n; ++rx) {
      for (int tx = 0; tx < n; ++tx) {
        LinkChannelState& link = state_.gains.link(rx, tx);
        link = evolve_channel(link, cfg_.channel, link_streams_[rx * n + tx]);
      }
    }
  }

  double terminal_cost(const std::vector<double>& sir, ActivityCase c) const {
    double acc = 0.0;
    const Mat2 p_n = cfg_.p_terminal_matrix();
    for (std::size_t i = 0; i < state_.nodes.size(); ++i) {
      if (state_.nodes[i].role == Role::PU && c == ActivityCase::Case1) continue;
      const double gamma = target_for(state_.nodes[i].role, c, cfg_.targets);
      const Vec2 e = make_augmented_error(sir[i], gamma).vec();
      acc += e.dot(p_n * e);
    }
    return acc;
  }

  MetricsRecord make_record(int k, const std::vector<double>& sir,
                            const std::vector<StepResult>& results) const {
    MetricsRecord r;
    r.step = k;
    double sir_pu = 0.0, sir_su = 0.0, pow_pu = 0.0, pow_su = 0.0;
    int n_pu = 0, n_su = 0;
    for (std::size_t i = 0; i < state_.nodes.size(); ++i) {
      if (state_.nodes[i].role == Role::PU) {
        sir_pu += sir[i];
        pow_pu += state_.effective_power(static_cast<int>(i));
        ++n_pu;
      } else {
        sir_su += sir[i];
        pow_su += state_.effective_power(static_cast<int>(i));
        ++n_su;
      }
    }
    r.mean_sir_pu_db = n_pu > 0 ? to_db(sir_pu / n_pu) : 0.0;
    r.mean_sir_su_db = n_su > 0 ? to_db(sir_su / n_su) : 0.0;
    r.mean_power_pu_w = n_pu > 0 ? pow_pu / n_pu : 0.0;
    r.mean_power_su_w = n_su > 0 ? pow_su / n_su : 0.0;

    double bellman = 0.0, terminal = 0.0;
    int active = 0, saturated = 0;
    for (const StepResult& res : results) {
      if (!res.diag.active) continue;
      bellman += std::abs(res.diag.bellman_residual);
      terminal += res.diag.terminal_residual_norm;
      if (res.diag.saturated) ++saturated;
      ++active;
    }
    r.mean_abs_bellman_error = active > 0 ? bellman / active : 0.0;
    r.mean_terminal_error_norm = active > 0 ? terminal / active : 0.0;
    r.saturation_count = saturated;
    r.spectrum_efficiency = spectrum_efficiency(state_, cfg_.bandwidth_hz);
    return r;
  }

  ScenarioConfig cfg_;
  NetworkState state_;
  ActivitySchedule schedule_;
  std::vector<std::mt19937_64> link_streams_;
  std::vector<double> initial_power_;
  std::vector<std::unique_ptr<PowerController>> controllers_;
};

inline std::vector<MetricsRecord> run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace crnsim
