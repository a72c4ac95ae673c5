#include "ekfslam/models.hpp"

#include <cmath>
#include <string>

#include "ekfslam/errors.hpp"

namespace ekfslam
{

namespace
{

constexpr double kCoincidentTolerance = 1e-9;

void require_finite(double value, const char* what)
{
  if (!std::isfinite(value))
  {
    throw DomainError(std::string(what) + " must be finite");
  }
}

void require_positive_step(double dt)
{
  if (!std::isfinite(dt) || dt <= 0.0)
  {
    throw DomainError("time step must be positive, got " + std::to_string(dt));
  }
}

void require_positive_range(const Observation& z)
{
  if (!std::isfinite(z.range) || z.range <= 0.0)
  {
    throw DomainError("observation range must be positive, got " + std::to_string(z.range));
  }
}

}  // namespace

double wrap_angle(double a)
{
  require_finite(a, "angle");
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi)
  {
    r += 2.0 * kPi;
  }
  return r;
}

Pose::Pose(double x_m, double y_m, double theta_rad) : x(x_m), y(y_m), theta(wrap_angle(theta_rad))
{
}

Observation::Observation(double range_m, double bearing_rad) : range(range_m), bearing(wrap_angle(bearing_rad))
{
}

double distance(const LandmarkPosition& a, const LandmarkPosition& b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

void MotionNoiseConfig::validate() const
{
  if (!std::isfinite(sigma_v) || sigma_v < 0.0 || !std::isfinite(sigma_omega) || sigma_omega < 0.0)
  {
    throw ConfigError("motion noise sigmas must be finite and non-negative");
  }
}

Eigen::Matrix2d MotionNoiseConfig::covariance() const
{
  return Eigen::Vector2d(sigma_v * sigma_v, sigma_omega * sigma_omega).asDiagonal();
}

void SensorNoiseConfig::validate() const
{
  if (!std::isfinite(sigma_range) || sigma_range < 0.0 || !std::isfinite(sigma_bearing) ||
      sigma_bearing < 0.0)
  {
    throw ConfigError("sensor noise sigmas must be finite and non-negative");
  }
  require_finite(sensor_offset, "sensor offset");
}

Eigen::Matrix2d SensorNoiseConfig::covariance() const
{
  return Eigen::Vector2d(sigma_range * sigma_range, sigma_bearing * sigma_bearing).asDiagonal();
}

Pose motion_step(const Pose& p, const ControlInput& u, double dt)
{
  require_positive_step(dt);
  require_finite(u.v, "speed");
  require_finite(u.omega, "turn rate");
  return {p.x + dt * u.v * std::cos(p.theta), p.y + dt * u.v * std::sin(p.theta), p.theta + dt * u.omega};
}

MotionJacobians motion_jacobians(const Pose& p, const ControlInput& u, double dt)
{
  require_positive_step(dt);
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);

  MotionJacobians j;
  j.wrt_pose << 1.0, 0.0, -dt * u.v * s,
                0.0, 1.0, dt * u.v * c,
                0.0, 0.0, 1.0;
  j.wrt_control << dt * c, 0.0,
                   dt * s, 0.0,
                   0.0, dt;
  return j;
}

Eigen::Matrix3d process_noise(const Matrix32& wrt_control, const MotionNoiseConfig& cfg)
{
  const Eigen::Matrix3d q = wrt_control * cfg.covariance() * wrt_control.transpose();
  // Exact symmetry; the product can differ in the last bit across the diagonal.
  return 0.5 * (q + q.transpose());
}

Observation observe(const Pose& p, const LandmarkPosition& l, const SensorNoiseConfig& cfg)
{
  const double dx = l.x - p.x;
  const double dy = l.y - p.y;
  const double r = std::hypot(dx, dy);
  if (r < kCoincidentTolerance)
  {
    throw DegenerateGeometryError("landmark coincides with robot position");
  }
  return {r, std::atan2(dy, dx) - p.theta + cfg.sensor_offset};
}

ObservationJacobians observation_jacobians(const Pose& p, const LandmarkPosition& l)
{
  const double dx = l.x - p.x;
  const double dy = l.y - p.y;
  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (r < kCoincidentTolerance)
  {
    throw DegenerateGeometryError("landmark coincides with robot position");
  }

  ObservationJacobians j;
  j.wrt_pose << -dx / r, -dy / r, 0.0,
                dy / r2, -dx / r2, -1.0;
  j.wrt_landmark = -j.wrt_pose.leftCols<2>();
  return j;
}

LandmarkPosition inverse_observe(const Pose& p, const Observation& z, const SensorNoiseConfig& cfg)
{
  require_positive_range(z);
  const double phi = z.bearing - cfg.sensor_offset + p.theta;
  return {p.x + z.range * std::cos(phi), p.y + z.range * std::sin(phi)};
}

InverseObservationJacobians inverse_observation_jacobians(const Pose& p, const Observation& z,
                                                          const SensorNoiseConfig& cfg)
{
  require_positive_range(z);
  const double phi = z.bearing - cfg.sensor_offset + p.theta;
  const double c = std::cos(phi);
  const double s = std::sin(phi);

  InverseObservationJacobians j;
  j.wrt_pose << 1.0, 0.0, -z.range * s,
                0.0, 1.0, z.range * c;
  j.wrt_observation << c, -z.range * s,
                       s, z.range * c;
  return j;
}

}  // namespace ekfslam
