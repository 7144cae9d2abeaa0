#pragma once

// Shared navigation domain types: IMU samples and biases, noise parameters,
// gravity, platform state, receiver clock, and satellite observations.

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "navfuse/so3.hpp"

namespace navfuse {

/// One inertial sample: angular rate and specific force in the body frame.
struct ImuSample {
  double t{0.0};                               ///< [s]
  Eigen::Vector3d gyro{0.0, 0.0, 0.0};         ///< [rad/s]
  Eigen::Vector3d accel{0.0, 0.0, 0.0};        ///< [m/s^2]
};

struct ImuBias {
  Eigen::Vector3d gyro{0.0, 0.0, 0.0};         ///< [rad/s]
  Eigen::Vector3d accel{0.0, 0.0, 0.0};        ///< [m/s^2]

  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> v;
    v << gyro, accel;
    return v;
  }
};

/// Continuous-time IMU noise densities plus bias random-walk densities,
/// per-axis isotropic. Discrete per-sample sigma = density * sqrt(rate).
struct ImuNoiseParams {
  double gyro_noise_density{1e-3};   ///< [rad/s/sqrt(Hz)]
  double accel_noise_density{1e-2};  ///< [m/s^2/sqrt(Hz)]
  double gyro_bias_walk{1e-5};       ///< [rad/s*sqrt(Hz)]
  double accel_bias_walk{1e-4};      ///< [m/s^2*sqrt(Hz)]

  void validate() const {
    if (!(gyro_noise_density > 0.0 && accel_noise_density > 0.0 &&
          gyro_bias_walk > 0.0 && accel_bias_walk > 0.0)) {
      throw std::invalid_argument("ImuNoiseParams: all densities must be > 0");
    }
  }
};

/// Known world-frame gravity; (0, 0, -9.81) in an ENU world by default.
struct GravityVector {
  Eigen::Vector3d g{0.0, 0.0, -9.81};

  /// Plausibility check; test_mode additionally admits exactly zero gravity.
  void validate(bool test_mode = false) const {
    const double n = g.norm();
    if (test_mode && n == 0.0) return;
    if (n < 9.7 || n > 9.9) {
      throw std::invalid_argument("GravityVector: |g| outside [9.7, 9.9]");
    }
  }
};

/// Platform state at one epoch: orientation (body to world), velocity,
/// position. The world frame is ECEF throughout the estimators.
struct NavState {
  Rotation R{Rotation::Identity()};
  Eigen::Vector3d v{0.0, 0.0, 0.0};  ///< [m/s]
  Eigen::Vector3d p{0.0, 0.0, 0.0};  ///< [m]
};

/// Receiver clock bias pre-multiplied by the speed of light, in meters.
struct ClockState {
  double bias_m{0.0};
};

inline constexpr double kSpeedOfLight = 299792458.0;  ///< [m/s]

/// One corrected pseudorange: satellite clock, iono, and tropo effects are
/// assumed already removed, so receiver clock and white noise remain.
struct SatObservation {
  int sat_id{0};
  double t{0.0};                                ///< [s]
  Eigen::Vector3d sat_pos{0.0, 0.0, 0.0};       ///< ECEF [m]
  double pseudorange{0.0};                      ///< [m]
  double sigma{1.0};                            ///< [m], > 0
};

struct TrajectorySample {
  double t{0.0};
  NavState state;
};

/// Time-ordered state samples; ECEF frame.
using Trajectory = std::vector<TrajectorySample>;

}  // namespace navfuse
