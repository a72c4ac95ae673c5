#pragma once

// Seeded ground-truth simulation emitting logs in the ingest format.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ekfslam/ingest.hpp"
#include "ekfslam/models.hpp"
#include "ekfslam/perception.hpp"

namespace ekfslam
{

/// Constant (v, w) held for a duration. A path is a list of segments
/// repeated until the scenario ends.
struct ControlSegment
{
  double duration{0.0};
  ControlInput u;
};

/// Point object moving at constant velocity, present during [t_start, t_end].
struct DynamicObject
{
  LandmarkPosition start;
  double vx{0.0};
  double vy{0.0};
  double t_start{0.0};
  double t_end{0.0};

  bool active(double t) const { return t >= t_start && t <= t_end; }
  LandmarkPosition position(double t) const;
};

/// Explicit points take precedence over the random generator.
struct LandmarkLayout
{
  std::vector<LandmarkPosition> points;
  std::size_t count{20};
  double radius{40.0};          ///< uniform in a disc around the origin
  double min_separation{0.0};   ///< rejection-sampled minimum spacing
};

enum class SensorOutput
{
  Sightings,  ///< id-tagged observations (known data association)
  Scans,      ///< anonymous 361-beam scans
};

struct ScanRenderConfig
{
  std::size_t cluster_beams{5};  ///< beams painted per point object
};

struct ScenarioConfig
{
  std::uint64_t seed{1};
  double duration{120.0};
  double dt{0.1};
  Pose initial_pose;
  MotionNoiseConfig motion;
  SensorNoiseConfig sensor;
  ObservationMode mode{ObservationMode::RangeBearing};
  LandmarkLayout layout;
  std::vector<ControlSegment> path;
  double fov{kPi};
  double max_range{80.0};
  std::vector<DynamicObject> dynamics;
  SensorOutput output{SensorOutput::Sightings};
  std::size_t scan_every{1};  ///< observation epoch every N steps
  ScanRenderConfig render;
  double stationary{0.0};  ///< robot held still for this long before the path starts
  double speed_bias{0.0};
  double gyro_bias{0.0};
  double max_speed{30.0};
  double max_rate{deg2rad(60.0)};

  /// Throws ConfigError.
  void validate() const;
};

/// Two tangent circles traversed left then right, starting at the crossing point.
std::vector<ControlSegment> figure_eight(double radius, double speed);

/// 120 s figure-eight at 3 m/s, 20 landmarks within 40 m, dt 0.1 s,
/// default motion and sensor noise, id-tagged observations.
ScenarioConfig default_scenario();

/// Scan-based scene used for the moving-object experiments: 15 static
/// landmarks (one deliberately crowded pair) and 2 objects crossing the
/// sensor's view for the whole run.
ScenarioConfig dynamic_scenario();

struct GroundTruth
{
  std::vector<TimedPose> poses;  ///< at every step, t = k * dt
  std::vector<LandmarkPosition> landmarks;
  std::vector<double> epoch_times;
  std::vector<std::vector<std::size_t>> visible;  ///< landmark indices per observation epoch
};

struct Simulation
{
  GroundTruth truth;
  SensorLog log;
};

/// Deterministic for a given config (seed included).
Simulation simulate(const ScenarioConfig& cfg);

/// Paints polar object returns into a scan. Each return covers
/// cluster_beams beams centred on the beam nearest its bearing; the nearest
/// return wins per beam; unlit beams read max_range. Returns outside the
/// 0..180 degree sensor span or beyond max_range are not painted.
LaserScan render_returns(double timestamp, std::span<const Observation> returns, double max_range,
                         const ScanRenderConfig& cfg);

/// Noiseless scan of point landmarks and dynamic points seen from p.
LaserScan render_scan(double timestamp, const Pose& p, std::span<const LandmarkPosition> landmarks,
                      std::span<const LandmarkPosition> dynamics, const SensorNoiseConfig& sensor, double max_range,
                      const ScanRenderConfig& cfg);

/// Known map of the true landmarks, ids 0..N-1 matching sighting records.
KnownMap truth_map(const GroundTruth& truth);

// Scenario files: INI-style "[section]" headers and "key = value" lines,
// '#' comments. Repeated keys (point, segment, object) append.
//
//   [run]        seed, duration, dt, initial = x y theta_deg, stationary
//   [motion]     sigma_v, sigma_omega_deg, speed_bias, gyro_bias
//   [sensor]     sigma_range, sigma_bearing_deg, offset_deg, fov_deg, max_range,
//                mode = range|bearing|both, output = sightings|scans,
//                scan_every, cluster_beams
//   [landmarks]  count, radius, min_separation, point = x y
//   [path]       figure_eight = radius speed, segment = duration v omega_deg,
//                max_speed, max_rate_deg
//   [dynamic]    object = x0 y0 vx vy t_start t_end
//
// Keys not given keep the default_scenario() value.
ScenarioConfig parse_scenario(std::istream& in, std::string_view source = "<scenario>");
ScenarioConfig read_scenario_file(const std::string& path);

void write_truth(const GroundTruth& truth, std::ostream& out);
void write_truth_file(const GroundTruth& truth, const std::string& path);
/// Reads "T <t> <x> <y> <theta>" lines.
std::vector<TimedPose> parse_truth(std::istream& in, std::string_view source = "<truth>");
std::vector<TimedPose> read_truth_file(const std::string& path);

/// Map files: "<id> <x> <y>" per line, '#' comments.
void write_map(const KnownMap& map, std::ostream& out);
KnownMap parse_map(std::istream& in, std::string_view source = "<map>");
KnownMap read_map_file(const std::string& path);

}  // namespace ekfslam
