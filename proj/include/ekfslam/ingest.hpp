#pragma once

// Sensor log I/O, constant-bias removal and dead reckoning.
//
// Log format, one record per line, LF terminated, '.' radix:
//
//   # slamlog v1 stationary_until=<s> [max_range=<m>]
//   S <t> <v>                      speed, m/s
//   G <t> <wx> <wy> <wz>           gyro, rad/s
//   L <t> <r0> ... <r360>          laser scan, m
//   O <t> <id> <range> <bearing>   landmark sighting with known identity
//
// Blank lines and further '#' lines are ignored.

#include <iosfwd>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "ekfslam/filter.hpp"
#include "ekfslam/models.hpp"
#include "ekfslam/perception.hpp"

namespace ekfslam
{

struct SpeedSample
{
  double v{0.0};
  friend bool operator==(const SpeedSample&, const SpeedSample&) = default;
};

struct GyroSample
{
  double wx{0.0};
  double wy{0.0};
  double wz{0.0};
  friend bool operator==(const GyroSample&, const GyroSample&) = default;
};

/// Range/bearing observation tagged with the true landmark identity, as
/// emitted by simulation runs with known data association.
struct LandmarkSighting
{
  LandmarkId id;
  Observation z;
  friend bool operator==(const LandmarkSighting&, const LandmarkSighting&) = default;
};

enum class RecordKind
{
  Speed,
  Gyro,
  Scan,
  Sighting,
};

struct SensorRecord
{
  double timestamp{0.0};
  std::variant<SpeedSample, GyroSample, LaserScan, LandmarkSighting> payload;

  RecordKind kind() const { return static_cast<RecordKind>(payload.index()); }

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

struct SensorLog
{
  /// The robot is declared stationary until this time.
  double stationary_until{0.0};
  double max_range{80.0};
  std::vector<SensorRecord> records;

  friend bool operator==(const SensorLog&, const SensorLog&) = default;
};

/// Parses a log. Records are merged across streams by timestamp (stable).
/// Empty input yields an empty log. Throws ParseError naming source:line.
SensorLog parse_log(std::istream& in, std::string_view source = "<input>");
SensorLog read_log_file(const std::string& path);

/// Writes the log with shortest round-trip number formatting.
void serialize_log(const SensorLog& log, std::ostream& out);
void write_log_file(const SensorLog& log, const std::string& path);

struct BiasEstimate
{
  double speed_bias{0.0};
  double gyro_z_bias{0.0};
  double window{5.0};
};

/// Means of the speed and gyro-z streams over [t0, t0 + window], t0 being the
/// first record's timestamp. A stream with no samples in the window gets zero
/// bias; throws DomainError when neither stream has any.
BiasEstimate estimate_bias(std::span<const SensorRecord> records, double window = 5.0);

/// Subtracts the bias from speed and gyro-z payloads. Scans and sightings are
/// passed through.
std::vector<SensorRecord> debias(std::span<const SensorRecord> records, const BiasEstimate& bias);

struct TimedPose
{
  double t{0.0};
  Pose pose;

  friend bool operator==(const TimedPose&, const TimedPose&) = default;
};

/// Zero-order-hold integration of the speed and gyro-z streams: the interval
/// before each control timestamp is integrated with the most recent (v, w).
/// Emits one pose per distinct control timestamp. Throws DomainError when the
/// records contain no control samples.
std::vector<TimedPose> dead_reckon(const Pose& p0, std::span<const SensorRecord> records);

}  // namespace ekfslam
