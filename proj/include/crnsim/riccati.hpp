#pragma once

#include <cassert>
#include <span>
#include <stdexcept>
#include <vector>

#include "crnsim/types.hpp"

namespace crnsim {

// Ground-truth finite-horizon solution for a known system pair: cost-to-go
// kernels G_k, action-value kernels Theta_k and feedback gains K_k.
struct OracleSolution {
  std::vector<Mat2> cost_to_go;    // G_k, k = 0..N
  std::vector<Mat3> action_value;  // Theta_k, k = 0..N-1
  std::vector<Vec2> gain;          // K_k (row), k = 0..N-1
};

// Theta = [[Q + A'GA, A'GB], [B'GA, S + B'GB]] assembled around G at k+1.
inline Mat3 action_value_kernel(const Mat2& A, const Vec2& B, const Mat2& Q, double S,
                                const Mat2& G_next) {
  const Mat2 ee = Q + A.transpose() * G_next * A;
  const Vec2 ev = A.transpose() * G_next * B;
  const double vv = S + B.dot(G_next * B);
  Mat3 theta;
  theta << ee(0, 0), ee(0, 1), ev(0),
           ee(1, 0), ee(1, 1), ev(1),
           ev(0), ev(1), vv;
  return theta;
}

namespace detail {
inline void check_lq_weights(const Mat2& Q, double S, const Mat2& P_N) {
  Eigen::SelfAdjointEigenSolver<Mat2> q_eig(Q);
  if (q_eig.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("backward_riccati: Q must be positive definite");
  if (!(S > 0.0)) throw std::domain_error("backward_riccati: S must be positive");
  Eigen::SelfAdjointEigenSolver<Mat2> p_eig(P_N);
  if (p_eig.eigenvalues().minCoeff() < -1e-12)
    throw std::domain_error("backward_riccati: P_N must be positive semidefinite");
}
}  // namespace detail

// Time-varying recursion over a realized (A_k, B_k) sequence.
inline OracleSolution backward_riccati(std::span<const Mat2> A, std::span<const Vec2> B,
                                       const Mat2& Q, double S, const Mat2& P_N) {
  detail::check_lq_weights(Q, S, P_N);
  if (A.size() != B.size())
    throw std::invalid_argument("backward_riccati: A and B sequences must match");
  const int horizon = static_cast<int>(A.size());

  OracleSolution sol;
  sol.cost_to_go.resize(horizon + 1);
  sol.action_value.resize(horizon);
  sol.gain.resize(horizon);
  sol.cost_to_go[horizon] = P_N;
  for (int k = horizon - 1; k >= 0; --k) {
    const Mat2& g_next = sol.cost_to_go[k + 1];
    const double denom = S + B[k].dot(g_next * B[k]);
    assert(denom > 0.0);
    const Vec2 gain = (B[k].transpose() * g_next * A[k]).transpose() / denom;
    Mat2 g = Q + A[k].transpose() * g_next * A[k] -
             (A[k].transpose() * g_next * B[k]) * gain.transpose();
    g = (0.5 * (g + g.transpose())).eval();  // keep symmetric under roundoff
    sol.gain[k] = gain;
    sol.cost_to_go[k] = g;
    sol.action_value[k] = action_value_kernel(A[k], B[k], Q, S, g_next);
  }
  return sol;
}

// Frozen-plant variant.
inline OracleSolution backward_riccati(const Mat2& A, const Vec2& B, const Mat2& Q, double S,
                                       const Mat2& P_N, int horizon) {
  if (horizon < 0) throw std::invalid_argument("backward_riccati: horizon must be >= 0");
  const std::vector<Mat2> a_seq(horizon, A);
  const std::vector<Vec2> b_seq(horizon, B);
  return backward_riccati(std::span<const Mat2>(a_seq), std::span<const Vec2>(b_seq), Q, S, P_N);
}

inline double optimal_cost(const Vec2& e0, const Mat2& g0) { return e0.dot(g0 * e0); }

}  // namespace crnsim
