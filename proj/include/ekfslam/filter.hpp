#pragma once

// EKF over the joint robot + landmark state.
//
// State layout: [x, y, theta, l0x, l0y, l1x, l1y, ...]. The covariance is
// stored dense and is re-symmetrized after every write.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ekfslam/models.hpp"

namespace ekfslam
{

struct StateEditor;

/// Opaque landmark handle. Unique within a run and never reused.
struct LandmarkId
{
  std::uint64_t value{0};

  friend auto operator<=>(const LandmarkId&, const LandmarkId&) = default;
};

inline constexpr Eigen::Index kPoseDims = 3;
inline constexpr Eigen::Index kLandmarkDims = 2;

class SlamState
{
public:
  /// Robot at p0 known exactly, empty map.
  explicit SlamState(const Pose& p0 = {});

  /// Builds a state from raw parts, e.g. for tests or checkpoint reload.
  /// ids.size() must equal the number of landmark pairs in mean and the ids
  /// must be unique. next_id defaults to one past the largest id.
  static SlamState from_parts(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::vector<LandmarkId> ids,
                              std::optional<LandmarkId> next_id = std::nullopt);

  Pose pose() const { return Pose::from_vector(mean_.head<3>()); }
  Eigen::Matrix3d pose_covariance() const { return cov_.topLeftCorner<3, 3>(); }

  std::size_t landmark_count() const { return ids_.size(); }
  Eigen::Index dimension() const { return mean_.size(); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  std::span<const LandmarkId> landmark_ids() const { return ids_; }

  bool contains(LandmarkId id) const { return slot_of(id).has_value(); }
  /// Row of the landmark's x coordinate in mean/cov, if registered.
  std::optional<Eigen::Index> index_of(LandmarkId id) const;

  LandmarkPosition landmark(LandmarkId id) const;
  Eigen::Matrix2d landmark_covariance(LandmarkId id) const;

  /// Largest |P - P^T| and smallest eigenvalue of P; used by invariant checks.
  double asymmetry() const;
  double min_eigenvalue() const;

private:
  std::optional<std::size_t> slot_of(LandmarkId id) const;
  Eigen::Index require_index(LandmarkId id) const;
  void symmetrize();

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::vector<LandmarkId> ids_;
  std::uint64_t next_id_{0};

  friend struct StateEditor;
};

/// Fixed landmark coordinates used for map-based localisation.
class KnownMap
{
public:
  KnownMap() = default;
  /// Throws ConfigError on duplicate ids.
  explicit KnownMap(std::vector<std::pair<LandmarkId, LandmarkPosition>> entries);

  std::optional<LandmarkPosition> find(LandmarkId id) const;
  std::span<const std::pair<LandmarkId, LandmarkPosition>> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

private:
  std::vector<std::pair<LandmarkId, LandmarkPosition>> entries_;
};

enum class UpdateStatus
{
  Applied,
  /// Innovation covariance too close to singular; state left untouched.
  Singular,
};

struct UpdateResult
{
  UpdateStatus status{UpdateStatus::Applied};
  /// [range, bearing] innovation; entries not used by the observation mode are 0.
  Eigen::Vector2d innovation{Eigen::Vector2d::Zero()};
  std::string diagnostic;

  bool applied() const { return status == UpdateStatus::Applied; }
};

inline constexpr double kSingularDeterminant = 1e-15;
inline constexpr double kMaxInnovationCondition = 1e12;

SlamState init_state(const Pose& p0);

/// Propagates the robot through motion_step. Landmarks are static, so only
/// the robot rows/columns of the covariance change.
void predict(SlamState& s, const ControlInput& u, double dt, const MotionNoiseConfig& cfg);

/// Sequential EKF update against one registered landmark.
UpdateResult update(SlamState& s, LandmarkId id, const Observation& z, const SensorNoiseConfig& cfg,
                    ObservationMode mode = ObservationMode::RangeBearing);

/// Update against a landmark whose position is taken from the map as a
/// constant (only the robot columns of H are non-zero).
UpdateResult update_known_map(SlamState& s, const KnownMap& map, LandmarkId id, const Observation& z,
                              const SensorNoiseConfig& cfg,
                              ObservationMode mode = ObservationMode::RangeBearing);

/// Augments the state with a landmark placed by the inverse observation
/// model and returns its fresh id.
LandmarkId init_landmark(SlamState& s, const Observation& z, const SensorNoiseConfig& cfg);

void remove_landmark(SlamState& s, LandmarkId id);

}  // namespace ekfslam

template <>
struct std::hash<ekfslam::LandmarkId>
{
  std::size_t operator()(const ekfslam::LandmarkId& id) const noexcept
  {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
