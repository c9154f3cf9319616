#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crnsim/estimator.hpp"
#include "crnsim/riccati.hpp"
#include "crnsim/rng.hpp"
#include "crnsim/sir_dynamics.hpp"

using namespace crnsim;

namespace {

// Combined residual norm over the window plus the terminal block.
double combined_residual(const Eigen::MatrixXd& w, const HistoryWindow& window) {
  double acc = 0.0;
  for (const RegressionSample& s : window.samples()) {
    const double e = bellman_residual(w, s);
    acc += e * e;
  }
  acc += terminal_residual(w, window.theta_terminal()).squaredNorm();
  return std::sqrt(acc);
}

// Synthetic window whose stacked system is exactly consistent with w_true.
HistoryWindow consistent_window(const Eigen::MatrixXd& w_true, int samples,
                                std::mt19937_64& rng) {
  const int basis = static_cast<int>(w_true.rows());
  const Vec6 theta_n = w_true.row(0).transpose();
  HistoryWindow window(samples, theta_n);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < samples; ++j) {
    RegressionSample s;
    s.regressor = Eigen::MatrixXd(basis, 6);
    for (int r = 0; r < basis; ++r)
      for (int c = 0; c < 6; ++c) s.regressor(r, c) = unit(rng);
    s.utility = -w_true.cwiseProduct(s.regressor).sum();
    s.step = j;
    window.push(std::move(s));
  }
  return window;
}

}  // namespace

TEST_CASE("kron basis expansion") {
  Vec3 z;
  z << 1.0, 2.0, 3.0;
  Vec6 zb = kron_basis(z);
  Vec6 expected;
  expected << 1, 2, 3, 4, 6, 9;
  CHECK(zb == expected);
  CHECK(kron_basis(Vec3::Zero()) == Vec6::Zero());
}

TEST_CASE("theta vectorization reproduces the quadratic form") {
  auto rng = make_stream(2, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Mat3 theta;
    for (int r = 0; r < 3; ++r)
      for (int c = r; c < 3; ++c) theta(r, c) = theta(c, r) = unit(rng);
    Vec3 z;
    z << unit(rng), unit(rng), unit(rng);
    const double direct = z.dot(theta * z);
    const double via_vec = theta_from_matrix(theta).dot(kron_basis(z));
    CHECK_THAT(via_vec, Catch::Matchers::WithinAbs(direct, 1e-12));
    // Round trip back to the symmetric matrix.
    CHECK_THAT((matrix_from_theta(theta_from_matrix(theta)) - theta).norm(),
               Catch::Matchers::WithinAbs(0.0, 1e-14));
  }
  // Identity kernel turns the basis into the squared norm.
  Vec3 z;
  z << 0.3, -1.2, 2.0;
  CHECK_THAT(theta_from_matrix(Mat3::Identity()).dot(kron_basis(z)),
             Catch::Matchers::WithinRel(z.squaredNorm(), 1e-12));
}

TEST_CASE("terminal theta pads the kernel with a zero action block") {
  const Vec6 t = terminal_theta(Mat2::Identity());
  Vec6 expected;
  expected << 1, 0, 0, 1, 0, 0;
  CHECK(t == expected);
}

TEST_CASE("utility is the quadratic stage cost") {
  const Mat2 q = (Mat2() << 1.0, 0.0, 0.0, 1.0).finished();
  CHECK(utility(Vec2::Zero(), 0.0, q, 1.0) == 0.0);
  CHECK(utility(Vec2(1.0, 0.0), 1.0, q, 1.0) == 2.0);
  auto rng = make_stream(4, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 e(unit(rng), unit(rng));
    const double v = unit(rng);
    if (e.norm() + std::abs(v) > 0.0) CHECK(utility(e, v, q, 1.0) > 0.0);
  }
}

TEST_CASE("time basis is a polynomial in time-to-go") {
  const Eigen::VectorXd s0 = time_basis(3, 0.0);
  CHECK(s0(0) == 1.0);
  CHECK(s0(1) == 0.0);
  CHECK(s0(2) == 0.0);
  const Eigen::VectorXd s = time_basis(4, 0.5);
  CHECK(s(3) == 0.125);
}

TEST_CASE("bellman residual basics") {
  RegressionSample s;
  s.regressor = Eigen::MatrixXd::Zero(3, 6);
  s.utility = 0.7;
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 6);
  CHECK(bellman_residual(w, s) == 0.7);  // zero estimate leaves the utility
  s.utility = 0.0;
  CHECK(bellman_residual(w, s) == 0.0);
}

TEST_CASE("terminal residual selects the first row of W") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 6);
  Vec6 theta_n;
  theta_n << 1, 0, 0, 1, 0, 0;
  CHECK(terminal_residual(w, theta_n) == theta_n);  // zero estimate
  w.row(0) = theta_n.transpose();
  CHECK(terminal_residual(w, theta_n).norm() == 0.0);
}

TEST_CASE("oracle weights zero the Bellman residual on a static plant") {
  // phi = 0 plant: the Riccati theta path is exactly affine in time-to-go,
  // so an L=3 polynomial W reproduces it and every residual vanishes.
  const double rho = 0.2;
  const ErrorSystem sys = error_system(0.0, rho);
  const Mat2 q = (Mat2() << 1.0, 0.0, 0.0, 0.01).finished();
  const double s_weight = 1.0;
  const int horizon = 40;
  const OracleSolution sol =
      backward_riccati(sys.A, sys.B, q, s_weight, Mat2::Identity(), horizon);

  // Fit the affine path theta(tau) = c0 + c1 * tau through two interior k.
  const auto tau = [&](int k) {
    return static_cast<double>(horizon - k) / static_cast<double>(horizon);
  };
  const Vec6 th_a = theta_from_matrix(sol.action_value[10]);
  const Vec6 th_b = theta_from_matrix(sol.action_value[30]);
  const Vec6 c1 = (th_a - th_b) / (tau(10) - tau(30));
  const Vec6 c0 = th_a - c1 * tau(10);
  Eigen::MatrixXd w_star = Eigen::MatrixXd::Zero(3, 6);
  w_star.row(0) = c0.transpose();
  w_star.row(1) = c1.transpose();

  // Roll the closed loop with oracle gains and check the residuals.
  Vec2 e(0.5, 0.1);
  Vec6 prev_zbar;
  Eigen::VectorXd prev_sigma;
  double prev_utility = 0.0;
  bool have_prev = false;
  for (int k = 0; k < horizon; ++k) {
    const double v = -sol.gain[k].dot(e);
    Vec3 z;
    z << e(0), e(1), v;
    const Vec6 zbar = kron_basis(z);
    const Eigen::VectorXd sigma = time_basis(3, tau(k));
    if (have_prev) {
      RegressionSample sample;
      sample.utility = prev_utility;
      sample.regressor = regression_difference(sigma, zbar, prev_sigma, prev_zbar);
      sample.step = k;
      CHECK_THAT(bellman_residual(w_star, sample), Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
    prev_zbar = zbar;
    prev_sigma = sigma;
    prev_utility = utility(e, v, q, s_weight);
    have_prev = true;
    e = sys.A * e + sys.B * v;
  }
}

TEST_CASE("exact solve zeroes residuals on a consistent square system") {
  auto rng = make_stream(11, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd w_true(3, 6);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) w_true(r, c) = unit(rng);
  // 12 random samples + 6 terminal rows = 18 equations for 18 unknowns.
  const HistoryWindow window = consistent_window(w_true, 12, rng);
  const Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(3, 6);
  const Eigen::MatrixXd w1 = update_w(w0, window, 0.0, 0.0);
  CHECK_THAT(combined_residual(w1, window), Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT((w1 - w_true).norm(), Catch::Matchers::WithinAbs(0.0, 1e-8));
}

TEST_CASE("combined residual contracts by alpha each update") {
  auto rng = make_stream(13, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd w_true(3, 6);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) w_true(r, c) = unit(rng);
  const HistoryWindow window = consistent_window(w_true, 12, rng);

  for (double alpha : {0.1, 0.5}) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 6);
    const double initial = combined_residual(w, window);
    double prev = initial;
    for (int it = 0; it < 12; ++it) {
      w = update_w(w, window, alpha, 0.0);
      const double now = combined_residual(w, window);
      // Ratios are only meaningful while the residual sits well above the
      // solve's numerical floor.
      if (prev > 1e-6 * initial)
        CHECK_THAT(now / prev, Catch::Matchers::WithinAbs(alpha, 1e-4));
      prev = now;
    }
  }
}

TEST_CASE("terminal estimate approaches theta_N monotonically") {
  auto rng = make_stream(17, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd w_true(3, 6);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) w_true(r, c) = unit(rng);
  const HistoryWindow window = consistent_window(w_true, 12, rng);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 6);
  double prev = terminal_residual(w, window.theta_terminal()).norm();
  for (int it = 0; it < 15; ++it) {
    w = update_w(w, window, 0.3, 0.0);
    const double now = terminal_residual(w, window.theta_terminal()).norm();
    CHECK(now <= prev + 1e-9);
    prev = now;
  }
}

TEST_CASE("rank-deficient window demands ridge") {
  Vec6 theta_n;
  theta_n << 1, 0, 0, 1, 0, 0;
  HistoryWindow window(8, theta_n);
  RegressionSample s;
  s.regressor = Eigen::MatrixXd::Ones(3, 6);  // one direction repeated
  s.utility = 0.3;
  window.push(s);
  window.push(s);
  const Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(3, 6);
  CHECK_THROWS_AS(update_w(w0, window, 0.1, 0.0), SingularSystemError);
  const Eigen::MatrixXd w1 = update_w(w0, window, 0.1, 1e-8);
  CHECK(w1.allFinite());
}

TEST_CASE("update preconditions") {
  Vec6 theta_n = Vec6::Zero();
  HistoryWindow window(4, theta_n);
  const Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(3, 6);
  CHECK_THROWS_AS(update_w(w0, window, 0.1, 1e-8), std::invalid_argument);  // empty
  RegressionSample s;
  s.regressor = Eigen::MatrixXd::Ones(3, 6);
  window.push(s);
  CHECK_THROWS_AS(update_w(w0, window, 1.0, 1e-8), std::invalid_argument);   // alpha >= 1
  CHECK_THROWS_AS(update_w(w0, window, -0.1, 1e-8), std::invalid_argument);  // alpha < 0
}

TEST_CASE("estimator reconstruction stays symmetric") {
  ValueEstimator est(3, 24, 1e-4, 1e-8, 100, terminal_theta(Mat2::Identity()));
  auto rng = make_stream(23, 0);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd w(3, 6);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 6; ++c) w(r, c) = unit(rng);
  est.set_weights(w);
  for (int k = 0; k < 100; k += 7) {
    const Mat3 theta = est.theta_matrix_at(k);
    CHECK_THAT((theta - theta.transpose()).norm(), Catch::Matchers::WithinAbs(0.0, 1e-14));
  }
}

TEST_CASE("window capacity bounds the sample count") {
  HistoryWindow window(3, Vec6::Zero());
  RegressionSample s;
  s.regressor = Eigen::MatrixXd::Zero(2, 6);
  for (int i = 0; i < 10; ++i) {
    s.step = i;
    window.push(s);
  }
  CHECK(window.size() == 3);
  CHECK(window.samples().front().step == 7);
}
