#pragma once

#include <deque>
#include <stdexcept>

#include "crnsim/types.hpp"

namespace crnsim {

// Quadratic monomials of z = [E0, E1, v], ordered so that for a symmetric
// Theta, theta' * kron_basis(z) == z' * Theta * z with
// theta = [T11, 2*T12, 2*T13, T22, 2*T23, T33].
inline Vec6 kron_basis(const Vec3& z) {
  Vec6 out;
  out << z(0) * z(0), z(0) * z(1), z(0) * z(2), z(1) * z(1), z(1) * z(2), z(2) * z(2);
  return out;
}

inline Vec6 theta_from_matrix(const Mat3& m) {
  Vec6 t;
  t << m(0, 0), 2.0 * m(0, 1), 2.0 * m(0, 2), m(1, 1), 2.0 * m(1, 2), m(2, 2);
  return t;
}

inline Mat3 matrix_from_theta(const Vec6& t) {
  Mat3 m;
  m << t(0), t(1) / 2.0, t(2) / 2.0,
       t(1) / 2.0, t(3), t(4) / 2.0,
       t(2) / 2.0, t(4) / 2.0, t(5);
  return m;
}

// Terminal kernel: P_N padded with a zero action block.
inline Vec6 terminal_theta(const Mat2& p_terminal) {
  Mat3 padded = Mat3::Zero();
  padded.topLeftCorner<2, 2>() = p_terminal;
  return theta_from_matrix(padded);
}

inline double utility(const Vec2& e, double v, const Mat2& q, double s) {
  return e.dot(q * e) + s * v * v;
}

// Polynomial regression features of normalized time-to-go tau = (N-k)/N.
// sigma(0) = [1, 0, ...], which pins the first row of W to the terminal theta.
inline Eigen::VectorXd time_basis(int basis_length, double tau) {
  if (basis_length < 1) throw std::invalid_argument("time_basis: basis_length must be >= 1");
  Eigen::VectorXd sigma(basis_length);
  double p = 1.0;
  for (int i = 0; i < basis_length; ++i) {
    sigma(i) = p;
    p *= tau;
  }
  return sigma;
}

// One regression sample: the utility observed over a transition together with
// the L x 6 difference of time-weighted quadratic bases,
//   regressor_j = sigma(tau_j) * zbar_j' - sigma(tau_{j-1}) * zbar_{j-1}'.
struct RegressionSample {
  double utility = 0.0;  // r at the transition start
  Eigen::MatrixXd regressor;
  int step = 0;
};

inline Eigen::MatrixXd regression_difference(const Eigen::VectorXd& sigma_now,
                                             const Vec6& zbar_now,
                                             const Eigen::VectorXd& sigma_prev,
                                             const Vec6& zbar_prev) {
  return sigma_now * zbar_now.transpose() - sigma_prev * zbar_prev.transpose();
}

// Residual of the finite-horizon temporal-difference equation for weights W.
inline double bellman_residual(const Eigen::MatrixXd& w, const RegressionSample& sample) {
  return sample.utility + w.cwiseProduct(sample.regressor).sum();
}

// Terminal-constraint residual theta_N - W' * sigma(0).
inline Vec6 terminal_residual(const Eigen::MatrixXd& w, const Vec6& theta_terminal) {
  return theta_terminal - w.transpose() * time_basis(static_cast<int>(w.rows()), 0.0);
}

// Sliding window of the most recent regression samples plus the fixed
// terminal target they are jointly solved against.
class HistoryWindow {
 public:
  HistoryWindow() = default;
  HistoryWindow(int capacity, Vec6 theta_terminal)
      : capacity_(capacity), theta_terminal_(std::move(theta_terminal)) {
    if (capacity < 1) throw std::invalid_argument("HistoryWindow: capacity must be >= 1");
  }

  void push(RegressionSample sample) {
    samples_.push_back(std::move(sample));
    if (static_cast<int>(samples_.size()) > capacity_) samples_.pop_front();
  }
  void clear() { samples_.clear(); }

  int size() const { return static_cast<int>(samples_.size()); }
  bool empty() const { return samples_.empty(); }
  const std::deque<RegressionSample>& samples() const { return samples_; }
  const Vec6& theta_terminal() const { return theta_terminal_; }

 private:
  int capacity_ = 1;
  std::deque<RegressionSample> samples_;
  Vec6 theta_terminal_ = Vec6::Zero();
};

// One least-squares sweep of the update law. Stacked rows over vec(W):
//   window row j :  <W, regressor_j> = alpha * e_j(W_old) - r_j
//   terminal row c: (W' sigma(0))_c  = theta_N(c) - alpha * e_fc_c(W_old)
// With alpha = 0 and a consistent system the residuals solve to zero; more
// generally the combined residual in range(Psi) contracts by exactly alpha.
// The ridge term lambda keeps the solve finite while the window is below rank.
inline Eigen::MatrixXd update_w(const Eigen::MatrixXd& w_old, const HistoryWindow& window,
                                double alpha_w, double ridge_lambda) {
  if (window.empty()) throw std::invalid_argument("update_w: window is empty");
  if (!(alpha_w >= 0.0 && alpha_w < 1.0))
    throw std::invalid_argument("update_w: alpha_w must lie in [0,1)");
  if (!(ridge_lambda >= 0.0))
    throw std::invalid_argument("update_w: ridge_lambda must be non-negative");

  const int basis_length = static_cast<int>(w_old.rows());
  const int unknowns = 6 * basis_length;
  const int rows = window.size() + 6;

  Eigen::MatrixXd psi(rows, unknowns);
  Eigen::VectorXd target(rows);
  int r = 0;
  for (const RegressionSample& sample : window.samples()) {
    psi.row(r) = Eigen::Map<const Eigen::VectorXd>(sample.regressor.data(), unknowns);
    target(r) = alpha_w * bellman_residual(w_old, sample) - sample.utility;
    ++r;
  }
  const Vec6 e_fc = terminal_residual(w_old, window.theta_terminal());
  for (int c = 0; c < 6; ++c) {
    psi.row(r).setZero();
    psi(r, c * basis_length) = 1.0;  // vec(W) index of W(0, c), column-major
    target(r) = window.theta_terminal()(c) - alpha_w * e_fc(c);
    ++r;
  }

  if (ridge_lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi);
    if (qr.rank() < unknowns)
      throw SingularSystemError(
          "update_w: normal equations are rank deficient; set ridge_lambda > 0");
  }

  Eigen::MatrixXd gram = psi.transpose() * psi;
  gram.diagonal().array() += ridge_lambda;
  const Eigen::VectorXd rhs =
      psi.transpose() * target +
      ridge_lambda * Eigen::Map<const Eigen::VectorXd>(w_old.data(), unknowns);
  const Eigen::VectorXd solution = gram.ldlt().solve(rhs);
  return Eigen::Map<const Eigen::MatrixXd>(solution.data(), basis_length, 6);
}

// Per-user adaptive estimator of the time-varying quadratic action-value
// kernel with a pinned terminal row.
class ValueEstimator {
 public:
  ValueEstimator() = default;
  ValueEstimator(int basis_length, int window_capacity, double alpha_w, double ridge_lambda,
                 int horizon, const Vec6& theta_terminal)
      : basis_length_(basis_length),
        alpha_w_(alpha_w),
        ridge_lambda_(ridge_lambda),
        horizon_(horizon),
        window_(window_capacity, theta_terminal),
        weights_(Eigen::MatrixXd::Zero(basis_length, 6)) {
    if (horizon < 1) throw std::invalid_argument("ValueEstimator: horizon must be >= 1");
  }

  void reset() {
    weights_.setZero();
    window_.clear();
  }

  double tau(int step) const {
    return static_cast<double>(horizon_ - step) / static_cast<double>(horizon_);
  }
  Eigen::VectorXd sigma_at(int step) const { return time_basis(basis_length_, tau(step)); }

  Vec6 theta_at(int step) const { return weights_.transpose() * sigma_at(step); }
  Mat3 theta_matrix_at(int step) const { return matrix_from_theta(theta_at(step)); }

  void push_sample(RegressionSample sample) { window_.push(std::move(sample)); }

  void update() { weights_ = update_w(weights_, window_, alpha_w_, ridge_lambda_); }

  double newest_bellman_residual() const {
    return window_.empty() ? 0.0 : bellman_residual(weights_, window_.samples().back());
  }
  Vec6 terminal_residual_now() const {
    return terminal_residual(weights_, window_.theta_terminal());
  }

  const Eigen::MatrixXd& weights() const { return weights_; }
  void set_weights(Eigen::MatrixXd w) { weights_ = std::move(w); }
  const HistoryWindow& window() const { return window_; }
  int basis_length() const { return basis_length_; }
  int horizon() const { return horizon_; }

 private:
  int basis_length_ = 3;
  double alpha_w_ = 1e-4;
  double ridge_lambda_ = 1e-8;
  int horizon_ = 1;
  HistoryWindow window_{1, Vec6::Zero()};
  Eigen::MatrixXd weights_ = Eigen::MatrixXd::Zero(3, 6);
};

}  // namespace crnsim
