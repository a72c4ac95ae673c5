#pragma once

// Planar robot kinematics and the range/bearing landmark sensor.
//
// Conventions used throughout the library:
//   * headings and bearings live in (-pi, pi];
//   * bearing = atan2(ly - y, lx - x) - theta + sensor_offset, i.e. measured
//     counter-clockwise from the direction the sensor's zero beam points.
//     An offset of 0 means "zero bearing is straight ahead"; an offset of pi/2
//     matches a 180 degree scanner whose first beam points to the right.

#include <numbers>

#include <Eigen/Core>

namespace ekfslam
{

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Maps any finite angle to the equivalent value in (-pi, pi].
/// Throws DomainError for non-finite input.
double wrap_angle(double a);

struct Pose
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};  ///< always wrapped

  Pose() = default;
  Pose(double x_m, double y_m, double theta_rad);

  Eigen::Vector3d vector() const { return {x, y, theta}; }
  static Pose from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct ControlInput
{
  double v{0.0};      ///< m/s
  double omega{0.0};  ///< rad/s

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct Observation
{
  double range{0.0};    ///< m
  double bearing{0.0};  ///< rad, wrapped

  Observation() = default;
  Observation(double range_m, double bearing_rad);

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct LandmarkPosition
{
  double x{0.0};
  double y{0.0};

  Eigen::Vector2d vector() const { return {x, y}; }

  friend bool operator==(const LandmarkPosition&, const LandmarkPosition&) = default;
};

double distance(const LandmarkPosition& a, const LandmarkPosition& b);

struct MotionNoiseConfig
{
  double sigma_v{0.5};               ///< m/s
  double sigma_omega{deg2rad(2.0)};  ///< rad/s

  /// Both sigmas must be finite and non-negative. Zero is accepted so that
  /// noiseless configurations can be expressed.
  void validate() const;
  Eigen::Matrix2d covariance() const;
};

struct SensorNoiseConfig
{
  double sigma_range{0.2};              ///< m
  double sigma_bearing{deg2rad(2.0)};   ///< rad
  double sensor_offset{0.0};            ///< rad, bearing of the robot's forward axis

  void validate() const;
  Eigen::Matrix2d covariance() const;
};

/// Which components of a range/bearing observation the filter consumes.
enum class ObservationMode
{
  RangeOnly,
  BearingOnly,
  RangeBearing,
};

using Matrix32 = Eigen::Matrix<double, 3, 2>;
using Matrix23 = Eigen::Matrix<double, 2, 3>;

/// First-order Euler step of the unicycle model.
Pose motion_step(const Pose& p, const ControlInput& u, double dt);

struct MotionJacobians
{
  Eigen::Matrix3d wrt_pose;  ///< d(motion_step)/d(x, y, theta)
  Matrix32 wrt_control;      ///< d(motion_step)/d(v, omega)
};

MotionJacobians motion_jacobians(const Pose& p, const ControlInput& u, double dt);

/// Control noise mapped into pose space: Fu * diag(sv^2, sw^2) * Fu^T.
Eigen::Matrix3d process_noise(const Matrix32& wrt_control, const MotionNoiseConfig& cfg);

/// Expected range/bearing of a landmark. Throws DegenerateGeometryError when
/// the landmark is within 1e-9 m of the robot.
Observation observe(const Pose& p, const LandmarkPosition& l, const SensorNoiseConfig& cfg);

struct ObservationJacobians
{
  Matrix23 wrt_pose;          ///< d(range, bearing)/d(x, y, theta)
  Eigen::Matrix2d wrt_landmark;  ///< d(range, bearing)/d(lx, ly)
};

ObservationJacobians observation_jacobians(const Pose& p, const LandmarkPosition& l);

/// Landmark position that would produce observation z from pose p.
LandmarkPosition inverse_observe(const Pose& p, const Observation& z, const SensorNoiseConfig& cfg);

struct InverseObservationJacobians
{
  Matrix23 wrt_pose;                 ///< d(lx, ly)/d(x, y, theta)
  Eigen::Matrix2d wrt_observation;   ///< d(lx, ly)/d(range, bearing)
};

InverseObservationJacobians inverse_observation_jacobians(const Pose& p, const Observation& z,
                                                          const SensorNoiseConfig& cfg);

}  // namespace ekfslam
