#pragma once

#include <span>
#include <stdexcept>

#include "crnsim/types.hpp"

namespace crnsim {

// Tracking state E = [e, gamma]; SIR error plus the constant target, which
// turns target tracking into regulation of the augmented pair.
struct AugmentedError {
  double error = 0.0;   // e = R - gamma, linear SIR scale
  double target = 0.0;  // gamma
  Vec2 vec() const { return Vec2(error, target); }
};

inline AugmentedError make_augmented_error(double sir, double target) {
  if (!(target > 0.0))
    throw std::domain_error("make_augmented_error: target must be positive");
  return AugmentedError{sir - target, target};
}

// One-step system pair for the augmented error: A = [[phi, phi-1],[0,1]],
// B = [rho, 0].
struct ErrorSystem {
  Mat2 A;
  Vec2 B;
};

inline ErrorSystem error_system(double phi, double rho) {
  ErrorSystem s;
  s.A << phi, phi - 1.0, 0.0, 1.0;
  s.B << rho, 0.0;
  return s;
}

struct PhiRhoNu {
  double phi = 0.0;  // channel/interference drift factor
  double rho = 0.0;  // own link gain at k
  double nu = 0.0;   // next own power normalized by current interference
};

// Exact per-step recursion coefficients computed from both time slices.
// Simulator-side oracle only: controllers never have access to the k+1 slice
// or to other users' powers.
inline PhiRhoNu exact_phi_rho_nu(int i, std::span<const double> gains_k,
                                 std::span<const double> gains_k1,
                                 std::span<const double> powers_k,
                                 std::span<const double> powers_k1,
                                 double interference_k) {
  if (!(interference_k > 0.0))
    throw std::domain_error("exact_phi_rho_nu: interference must be positive");
  const std::size_t n = gains_k.size();
  double cross = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<int>(j) == i) continue;
    cross += (gains_k1[j] - gains_k[j]) * powers_k[j] +
             (powers_k1[j] - powers_k[j]) * gains_k[j];
  }
  PhiRhoNu out;
  out.phi = (gains_k1[i] - gains_k[i]) / gains_k[i] - cross / interference_k;
  out.rho = gains_k[i];
  out.nu = powers_k1[i] / interference_k;
  return out;
}

inline double predict_sir_recursion(double sir_k, double phi, double rho, double nu) {
  return phi * sir_k + rho * nu;
}

inline AugmentedError error_step(const AugmentedError& e, double phi, double rho, double nu) {
  const ErrorSystem s = error_system(phi, rho);
  const Vec2 next = s.A * e.vec() + s.B * nu;
  return AugmentedError{next(0), next(1)};
}

}  // namespace crnsim
