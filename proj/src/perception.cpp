#include "ekfslam/perception.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ekfslam/errors.hpp"

namespace ekfslam
{

void LaserScan::validate() const
{
  if (ranges.size() != kBeamCount)
  {
    throw DomainError("scan must have " + std::to_string(kBeamCount) + " ranges, got " +
                      std::to_string(ranges.size()));
  }
  if (!std::isfinite(max_range) || max_range <= 0.0)
  {
    throw DomainError("scan max range must be positive");
  }
  for (std::size_t i = 0; i < ranges.size(); ++i)
  {
    if (!std::isfinite(ranges[i]) || ranges[i] < 0.0 || ranges[i] > max_range)
    {
      throw DomainError("beam " + std::to_string(i) + " range out of [0, max_range]");
    }
  }
}

namespace
{

SegmentedObject close_segment(std::size_t first, std::vector<double> ranges)
{
  const double n = static_cast<double>(ranges.size());
  const double mean_range = std::accumulate(ranges.begin(), ranges.end(), 0.0) / n;
  // Mean of first..first+n-1 beam angles.
  const double mean_angle = beam_angle(first) + 0.5 * (n - 1.0) * kBeamSpacing;
  return {first, std::move(ranges), Observation(mean_range, mean_angle)};
}

}  // namespace

std::vector<SegmentedObject> segment_scan(const LaserScan& scan, double gap_threshold)
{
  scan.validate();
  if (!std::isfinite(gap_threshold) || gap_threshold <= 0.0)
  {
    throw DomainError("segmentation gap threshold must be positive");
  }
  const auto saturated = [&](std::size_t i) { return scan.ranges[i] >= scan.max_range; };

  std::vector<SegmentedObject> out;
  std::size_t first = 0;
  std::vector<double> current{scan.ranges[0]};
  for (std::size_t j = 1; j < kBeamCount; ++j)
  {
    const bool joins = !saturated(j) && !saturated(j - 1) &&
                       std::abs(scan.ranges[j] - scan.ranges[j - 1]) < gap_threshold;
    if (joins)
    {
      current.push_back(scan.ranges[j]);
      continue;
    }
    out.push_back(close_segment(first, std::move(current)));
    first = j;
    current = {scan.ranges[j]};
  }
  out.push_back(close_segment(first, std::move(current)));
  return out;
}

std::vector<Observation> extract_landmark_observations(std::span<const SegmentedObject> objects,
                                                       std::size_t min_points, std::size_t max_points)
{
  if (min_points >= max_points)
  {
    throw DomainError("landmark size bounds must satisfy min < max");
  }
  std::vector<Observation> out;
  for (const auto& obj : objects)
  {
    if (obj.size() > min_points && obj.size() < max_points && obj.centre.range > 0.0)
    {
      out.push_back(obj.centre);
    }
  }
  return out;
}

std::vector<LandmarkPosition> extract_landmarks(std::span<const SegmentedObject> objects, std::size_t min_points,
                                                std::size_t max_points, const Pose& robot,
                                                const SensorNoiseConfig& cfg)
{
  std::vector<LandmarkPosition> out;
  for (const auto& z : extract_landmark_observations(objects, min_points, max_points))
  {
    out.push_back(inverse_observe(robot, z, cfg));
  }
  return out;
}

AssociationResult associate(std::span<const LandmarkPosition> detections, std::span<const LandmarkPosition> prior,
                            double d_max)
{
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  const std::size_t n = detections.size();
  const std::size_t m = prior.size();

  AssociationResult result;
  std::vector<std::size_t> best_prior(n, kNone);
  std::vector<double> best_prior_dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_new(m, kNone);
  std::vector<double> best_new_dist(m, std::numeric_limits<double>::infinity());

  // Strict < keeps the lowest index on exact ties in both directions.
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < m; ++j)
    {
      const double d = distance(detections[i], prior[j]);
      if (d < best_prior_dist[i])
      {
        best_prior_dist[i] = d;
        best_prior[i] = j;
      }
      if (d < best_new_dist[j])
      {
        best_new_dist[j] = d;
        best_new[j] = i;
      }
    }
  }
  result.distance_evaluations = static_cast<std::uint64_t>(n) * m;

  std::vector<bool> prior_matched(m, false);
  for (std::size_t i = 0; i < n; ++i)
  {
    const std::size_t j = best_prior[i];
    if (j != kNone && best_new[j] == i && best_prior_dist[i] <= d_max)
    {
      result.pairs.emplace_back(i, j);
      prior_matched[j] = true;
    }
    else
    {
      result.unmatched_new.push_back(i);
    }
  }
  for (std::size_t j = 0; j < m; ++j)
  {
    if (!prior_matched[j])
    {
      result.unmatched_prior.push_back(j);
    }
  }
  return result;
}

std::vector<std::size_t> prefilter_indices(std::span<const LandmarkPosition> landmarks, double min_separation)
{
  std::vector<bool> crowded(landmarks.size(), false);
  for (std::size_t i = 0; i < landmarks.size(); ++i)
  {
    for (std::size_t j = i + 1; j < landmarks.size(); ++j)
    {
      if (distance(landmarks[i], landmarks[j]) < min_separation)
      {
        crowded[i] = true;
        crowded[j] = true;
      }
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < landmarks.size(); ++i)
  {
    if (!crowded[i])
    {
      kept.push_back(i);
    }
  }
  return kept;
}

std::vector<LandmarkPosition> prefilter(std::span<const LandmarkPosition> landmarks, double min_separation)
{
  std::vector<LandmarkPosition> out;
  for (const auto i : prefilter_indices(landmarks, min_separation))
  {
    out.push_back(landmarks[i]);
  }
  return out;
}

void QualityParams::validate() const
{
  if (upgrade <= 0 || degrade <= 0)
  {
    throw ConfigError("quality upgrade and degrade steps must be positive");
  }
  if (clear_threshold >= set_threshold)
  {
    throw ConfigError("quality clear threshold must be below the set threshold");
  }
  if (!std::isfinite(d_max) || d_max < 0.0)
  {
    throw ConfigError("association gate must be finite and non-negative");
  }
}

QualityUpdate update_quality(std::vector<LandmarkCandidate>& tracker, std::span<const LandmarkPosition> detections,
                             double now, const QualityParams& params)
{
  std::vector<LandmarkPosition> known;
  known.reserve(tracker.size());
  for (const auto& c : tracker)
  {
    known.push_back(c.centre_global);
  }
  const auto assoc = associate(detections, known, params.d_max);

  QualityUpdate out;
  out.distance_evaluations = assoc.distance_evaluations;

  // Source detection per candidate, for promotion bookkeeping.
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> source(tracker.size(), kNone);
  for (const auto& [det, cand] : assoc.pairs)
  {
    tracker[cand].quality += params.upgrade;
    tracker[cand].last_seen = now;
    source[cand] = det;
  }
  for (const auto cand : assoc.unmatched_prior)
  {
    tracker[cand].quality -= params.degrade;
  }
  for (const auto det : assoc.unmatched_new)
  {
    tracker.push_back({detections[det], params.initial, false, now});
    source.push_back(det);
  }

  std::vector<LandmarkCandidate> kept;
  kept.reserve(tracker.size());
  for (std::size_t k = 0; k < tracker.size(); ++k)
  {
    auto& c = tracker[k];
    if (c.quality > params.set_threshold && source[k] != kNone)
    {
      c.registered = true;
      out.promoted.push_back({c, source[k]});
    }
    else if (c.quality < params.clear_threshold)
    {
      out.cleared.push_back(c);
    }
    else
    {
      kept.push_back(c);
    }
  }
  tracker = std::move(kept);
  return out;
}

}  // namespace ekfslam
