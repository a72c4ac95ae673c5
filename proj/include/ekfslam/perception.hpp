#pragma once

// Point-landmark extraction from 180 degree laser scans, mutual nearest
// neighbour association, and the re-observation quality score that keeps
// moving objects out of the map.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ekfslam/models.hpp"

namespace ekfslam
{

inline constexpr std::size_t kBeamCount = 361;
inline constexpr double kBeamSpacing = deg2rad(0.5);

/// Sensor-frame bearing of beam i.
inline constexpr double beam_angle(std::size_t i) { return static_cast<double>(i) * kBeamSpacing; }

struct LaserScan
{
  double timestamp{0.0};
  std::vector<double> ranges;  ///< kBeamCount entries in [0, max_range]
  double max_range{80.0};

  /// Throws DomainError when the arity or any range is out of bounds.
  void validate() const;

  friend bool operator==(const LaserScan&, const LaserScan&) = default;
};

/// A run of adjacent beams whose ranges step by less than the gap threshold.
struct SegmentedObject
{
  std::size_t first_beam{0};
  std::vector<double> ranges;
  /// Polar mean: mean beam angle and mean range.
  Observation centre;

  std::size_t size() const { return ranges.size(); }
};

struct SegmentationParams
{
  double gap_threshold{0.25};  ///< m
};

/// Splits a scan into contiguous segments. Saturated beams (range equal to
/// max_range) never join a neighbour, so they end up as singletons. Segment
/// sizes always sum to kBeamCount.
std::vector<SegmentedObject> segment_scan(const LaserScan& scan, double gap_threshold = 0.25);

struct ExtractionParams
{
  std::size_t min_points{3};  ///< exclusive
  std::size_t max_points{8};  ///< exclusive
};

/// Centres of objects whose point count lies strictly between the bounds,
/// in the sensor frame.
std::vector<Observation> extract_landmark_observations(std::span<const SegmentedObject> objects,
                                                       std::size_t min_points, std::size_t max_points);

/// As extract_landmark_observations, projected into the global frame.
std::vector<LandmarkPosition> extract_landmarks(std::span<const SegmentedObject> objects, std::size_t min_points,
                                                std::size_t max_points, const Pose& robot,
                                                const SensorNoiseConfig& cfg);

struct AssociationResult
{
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< (new index, prior index), sorted by new index
  std::vector<std::size_t> unmatched_new;
  std::vector<std::size_t> unmatched_prior;
  std::uint64_t distance_evaluations{0};
};

/// Mutual nearest neighbour matching with a distance gate. Exact distance
/// ties resolve to the lowest index.
AssociationResult associate(std::span<const LandmarkPosition> detections, std::span<const LandmarkPosition> prior,
                            double d_max);

/// Drops every landmark that has another landmark closer than min_separation.
std::vector<LandmarkPosition> prefilter(std::span<const LandmarkPosition> landmarks, double min_separation = 2.0);

/// Indices kept by prefilter, for callers that carry parallel data.
std::vector<std::size_t> prefilter_indices(std::span<const LandmarkPosition> landmarks, double min_separation = 2.0);

struct QualityParams
{
  int initial{1};
  int upgrade{1};
  int degrade{3};
  int set_threshold{10};     ///< promoted once quality > set_threshold
  int clear_threshold{-20};  ///< deleted once quality < clear_threshold
  double d_max{0.3};         ///< association gate, m

  void validate() const;
};

struct LandmarkCandidate
{
  LandmarkPosition centre_global;
  int quality{0};
  bool registered{false};
  double last_seen{0.0};
};

struct Promotion
{
  LandmarkCandidate candidate;
  std::size_t detection{0};  ///< index of the detection that triggered promotion
};

struct QualityUpdate
{
  std::vector<Promotion> promoted;
  std::vector<LandmarkCandidate> cleared;
  std::uint64_t distance_evaluations{0};
};

/// One scan of the upgrade/degrade automaton. Promoted candidates leave the
/// tracker flagged as registered; the caller hands them to the filter.
/// Candidates keep the position at which they were first seen.
QualityUpdate update_quality(std::vector<LandmarkCandidate>& tracker, std::span<const LandmarkPosition> detections,
                             double now, const QualityParams& params);

}  // namespace ekfslam
