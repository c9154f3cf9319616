#pragma once

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "crnsim/channel.hpp"
#include "crnsim/types.hpp"

namespace crnsim {

struct Node {
  int id = 0;
  Role role = Role::SU;
  std::array<double, 2> tx_position{};  // km
  std::array<double, 2> rx_position{};
  double power_w = 0.0;
};

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
  ActivityCase activity = ActivityCase::Case2;
};

// Ordered, contiguous activity intervals. The final end is inclusive so the
// horizon endpoint itself still maps to a case.
class ActivitySchedule {
 public:
  ActivitySchedule() = default;

  explicit ActivitySchedule(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    if (intervals_.empty()) throw std::domain_error("ActivitySchedule: empty schedule");
    double cursor = intervals_.front().start_s;
    for (const Interval& iv : intervals_) {
      if (!(iv.end_s > iv.start_s))
        throw std::domain_error("ActivitySchedule: interval end must exceed start");
      if (iv.start_s != cursor)
        throw std::domain_error("ActivitySchedule: intervals must be contiguous and sorted");
      cursor = iv.end_s;
    }
  }

  ActivityCase at(double t) const {
    if (intervals_.empty()) throw std::domain_error("ActivitySchedule: empty schedule");
    for (const Interval& iv : intervals_) {
      if (t >= iv.start_s && t < iv.end_s) return iv.activity;
    }
    if (t == intervals_.back().end_s) return intervals_.back().activity;
    throw std::domain_error("ActivitySchedule: time outside schedule coverage");
  }

  double start() const { return intervals_.front().start_s; }
  double end() const { return intervals_.back().end_s; }
  const std::vector<Interval>& intervals() const { return intervals_; }

 private:
  std::vector<Interval> intervals_;
};

inline ActivityCase activity_case(double t, const ActivitySchedule& schedule) {
  return schedule.at(t);
}

// Dense table of directed links; entry (rx, tx) is the channel from the
// transmitter of node tx to the receiver of node rx.
class GainTable {
 public:
  GainTable() = default;
  explicit GainTable(int node_count) : n_(node_count), links_(node_count * node_count) {}

  LinkChannelState& link(int rx, int tx) { return links_[rx * n_ + tx]; }
  const LinkChannelState& link(int rx, int tx) const { return links_[rx * n_ + tx]; }
  double gain(int rx, int tx) const { return links_[rx * n_ + tx].gain; }
  int node_count() const { return n_; }

 private:
  int n_ = 0;
  std::vector<LinkChannelState> links_;
};

struct NetworkState {
  std::vector<Node> nodes;
  GainTable gains;
  double noise_floor_w = 1e-13;
  ActivityCase activity = ActivityCase::Case2;

  bool transmitter_active(int j) const {
    return !(nodes[j].role == Role::PU && activity == ActivityCase::Case1);
  }
  // Deactivated PUs contribute nothing regardless of stored power.
  double effective_power(int j) const {
    return transmitter_active(j) ? nodes[j].power_w : 0.0;
  }
};

inline double interference(int i, const NetworkState& s) {
  double acc = s.noise_floor_w;
  const int n = static_cast<int>(s.nodes.size());
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    acc += s.gains.gain(i, j) * s.effective_power(j);
  }
  return acc;
}

inline double compute_sir(int i, const NetworkState& s) {
  const double denom = interference(i, s);
  if (!(denom > 0.0))
    throw std::domain_error("compute_sir: zero interference; configure a positive noise floor");
  return s.gains.gain(i, i) * s.effective_power(i) / denom;
}

// Gaussian placement around the area midpoint (stddev area/4), clipped to the
// square. Each node's receiver sits one link distance away from its
// transmitter in a random direction.
inline std::vector<Node> place_nodes(int count_pu, int count_su, double area_km,
                                     double link_distance_km, std::mt19937_64& rng) {
  if (count_pu < 0 || count_su < 0)
    throw std::domain_error("place_nodes: counts must be non-negative");
  if (!(area_km > 0.0)) throw std::domain_error("place_nodes: area must be positive");

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  const double mid = area_km / 2.0;
  const double sd = area_km / 4.0;
  auto clip = [area_km](double x) { return std::clamp(x, 0.0, area_km); };

  std::vector<Node> nodes;
  nodes.reserve(count_pu + count_su);
  for (int i = 0; i < count_pu + count_su; ++i) {
    Node n;
    n.id = i;
    n.role = i < count_pu ? Role::PU : Role::SU;
    n.tx_position = {clip(mid + sd * unit(rng)), clip(mid + sd * unit(rng))};
    const double a = angle(rng);
    n.rx_position = {clip(n.tx_position[0] + link_distance_km * std::cos(a)),
                     clip(n.tx_position[1] + link_distance_km * std::sin(a))};
    nodes.push_back(n);
  }
  return nodes;
}

inline double link_distance_km(const Node& receiver_of, const Node& transmitter_of,
                               double min_distance_km) {
  const double dx = receiver_of.rx_position[0] - transmitter_of.tx_position[0];
  const double dy = receiver_of.rx_position[1] - transmitter_of.tx_position[1];
  return std::max(std::hypot(dx, dy), min_distance_km);
}

}  // namespace crnsim
