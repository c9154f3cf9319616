#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

namespace crnsim {

// Per-link channel model: inverse power-law path loss, log-normal shadowing
// and Rayleigh fading combined into one composite gain.
struct ChannelParams {
  double path_loss_exponent = 4.0;  // n
  double reference_gain = 1.0;      // gain at unit distance
  double shadowing_stddev_db = 4.0;
  double rayleigh_scale = 0.7071067811865476;  // sigma_f; default keeps E[X^2] = 1
  double correlation = 0.99;  // per-step AR(1) coefficient, in [0,1)
  bool fading = true;         // when off the fading amplitude is pinned to 1

  void validate() const {
    if (!(path_loss_exponent > 0.0))
      throw std::domain_error("ChannelParams: path_loss_exponent must be positive");
    if (!(reference_gain > 0.0))
      throw std::domain_error("ChannelParams: reference_gain must be positive");
    if (!(shadowing_stddev_db >= 0.0))
      throw std::domain_error("ChannelParams: shadowing_stddev_db must be non-negative");
    if (!(rayleigh_scale > 0.0))
      throw std::domain_error("ChannelParams: rayleigh_scale must be positive");
    if (!(correlation >= 0.0 && correlation < 1.0))
      throw std::domain_error("ChannelParams: correlation must lie in [0,1)");
  }
};

struct LinkChannelState {
  double distance_km = 1.0;
  double shadowing_db = 0.0;  // Gaussian state, dB
  // Latent unit normals behind the Rayleigh amplitude; kept so temporal
  // evolution preserves the Rayleigh marginal.
  double fading_lat1 = 0.0;
  double fading_lat2 = 0.0;
  double fading_amplitude = 1.0;  // X >= 0
  double gain = 1.0;              // composite h
};

inline double path_loss_gain(double distance_km, const ChannelParams& p) {
  if (!(distance_km > 0.0))
    throw std::domain_error("path_loss_gain: distance must be positive");
  return p.reference_gain / std::pow(distance_km, p.path_loss_exponent);
}

inline double rayleigh_pdf(double x, double sigma_f) {
  if (!(sigma_f > 0.0)) throw std::domain_error("rayleigh_pdf: sigma_f must be positive");
  if (x < 0.0) return 0.0;
  const double s2 = sigma_f * sigma_f;
  return (x / s2) * std::exp(-x * x / (2.0 * s2));
}

inline double composite_gain(const LinkChannelState& s, const ChannelParams& p) {
  return path_loss_gain(s.distance_km, p) * std::pow(10.0, 0.1 * s.shadowing_db) *
         s.fading_amplitude * s.fading_amplitude;
}

inline LinkChannelState sample_channel(std::mt19937_64& rng, double distance_km,
                                       const ChannelParams& p) {
  if (!(distance_km > 0.0))
    throw std::domain_error("sample_channel: distance must be positive");
  std::normal_distribution<double> unit(0.0, 1.0);
  LinkChannelState s;
  s.distance_km = distance_km;
  s.shadowing_db = p.shadowing_stddev_db * unit(rng);
  if (p.fading) {
    s.fading_lat1 = unit(rng);
    s.fading_lat2 = unit(rng);
    s.fading_amplitude = p.rayleigh_scale * std::hypot(s.fading_lat1, s.fading_lat2);
  }
  s.gain = composite_gain(s, p);
  return s;
}

// Gauss-Markov step: AR(1) on the shadowing state and on the fading latents,
// innovation scaled so the stationary marginals are preserved.
inline LinkChannelState evolve_channel(const LinkChannelState& s, const ChannelParams& p,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double rho = p.correlation;
  const double innov = std::sqrt(1.0 - rho * rho);
  LinkChannelState n = s;
  n.shadowing_db = rho * s.shadowing_db + innov * p.shadowing_stddev_db * unit(rng);
  if (p.fading) {
    n.fading_lat1 = rho * s.fading_lat1 + innov * unit(rng);
    n.fading_lat2 = rho * s.fading_lat2 + innov * unit(rng);
    n.fading_amplitude = p.rayleigh_scale * std::hypot(n.fading_lat1, n.fading_lat2);
  }
  n.gain = composite_gain(n, p);
  return n;
}

}  // namespace crnsim
