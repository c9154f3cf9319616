#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace crnsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

enum class Role { PU, SU };

// Case1: PUs deactivated (SUs track the high target).
// Case2: PUs activated (PUs track their target, SUs drop to the low target).
enum class ActivityCase { Case1, Case2 };

inline const char* to_string(Role r) { return r == Role::PU ? "PU" : "SU"; }
inline const char* to_string(ActivityCase c) {
  return c == ActivityCase::Case1 ? "case1" : "case2";
}

// Scenario configuration problem; carries the offending field or line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem problem while reading configs or writing traces.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normal equations of the estimator update are rank deficient and no ridge
// term was requested.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The (v,v) block of an estimated value kernel is numerically zero, so no
// feedback gain can be extracted from it.
struct GainSingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace crnsim
