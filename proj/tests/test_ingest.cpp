#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ekfslam/errors.hpp"
#include "ekfslam/ingest.hpp"

using namespace ekfslam;

namespace
{

SensorLog parse(const std::string& text)
{
  std::istringstream in(text);
  return parse_log(in, "test.log");
}

std::string scan_line(double t, std::size_t beams, double r = 5.0)
{
  std::ostringstream out;
  out << "L " << t;
  for (std::size_t i = 0; i < beams; ++i)
  {
    out << ' ' << r;
  }
  return out.str();
}

std::vector<SensorRecord> gyro_stream(double wz, double rate_hz, double seconds, double v = 0.0)
{
  std::vector<SensorRecord> out;
  const auto n = static_cast<int>(std::lround(seconds * rate_hz));
  for (int k = 0; k <= n; ++k)
  {
    const double t = k / rate_hz;
    out.push_back({t, SpeedSample{v}});
    out.push_back({t, GyroSample{0, 0, wz}});
  }
  return out;
}

}  // namespace

TEST(ParseLog, SpeedRecordsInOrder)
{
  const auto log = parse("# slamlog v1 stationary_until=0\nS 0.0 1.5\nS 0.1 1.6\n");
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[0].kind(), RecordKind::Speed);
  EXPECT_DOUBLE_EQ(log.records[1].timestamp, 0.1);
  EXPECT_DOUBLE_EQ(std::get<SpeedSample>(log.records[1].payload).v, 1.6);
}

TEST(ParseLog, HeaderFields)
{
  const auto log = parse("# slamlog v1 stationary_until=5 max_range=40\n");
  EXPECT_DOUBLE_EQ(log.stationary_until, 5.0);
  EXPECT_DOUBLE_EQ(log.max_range, 40.0);
  EXPECT_TRUE(log.records.empty());
}

TEST(ParseLog, EmptyInputIsEmptyLog)
{
  const auto log = parse("");
  EXPECT_TRUE(log.records.empty());
}

TEST(ParseLog, MissingHeaderIsError)
{
  EXPECT_THROW(parse("S 0 1\n"), ParseError);
}

TEST(ParseLog, InterleavedStreamsMergedByTime)
{
  std::ostringstream text;
  text << "# slamlog v1 stationary_until=0\n";
  // gyro block first, then scans, as separate files concatenated would be
  for (int k = 0; k < 200; ++k)
  {
    text << "G " << k / 200.0 << " 0 0 0.01\n";
  }
  for (int k = 0; k < 7; ++k)
  {
    text << scan_line(k / 7.0 + 1e-3, kBeamCount) << '\n';
  }
  const auto log = parse(text.str());
  ASSERT_EQ(log.records.size(), 207u);
  for (std::size_t i = 1; i < log.records.size(); ++i)
  {
    EXPECT_LE(log.records[i - 1].timestamp, log.records[i].timestamp);
  }
  EXPECT_EQ(log.records[1].kind(), RecordKind::Scan);
}

TEST(ParseLog, ScanArityErrorNamesLine)
{
  const std::string text = "# slamlog v1 stationary_until=0\nS 0 1\n" + scan_line(0.1, 360) + "\n";
  try
  {
    parse(text);
    FAIL() << "expected ParseError";
  }
  catch (const ParseError& e)
  {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.source(), "test.log");
    EXPECT_NE(std::string(e.what()).find("test.log:3"), std::string::npos);
  }
}

TEST(ParseLog, MalformedRecords)
{
  const std::string h = "# slamlog v1 stationary_until=0\n";
  EXPECT_THROW(parse(h + "X 0 1\n"), ParseError);
  EXPECT_THROW(parse(h + "S 0\n"), ParseError);
  EXPECT_THROW(parse(h + "S 0 abc\n"), ParseError);
  EXPECT_THROW(parse(h + "G 0 1 2\n"), ParseError);
  EXPECT_THROW(parse(h + "S 0.2 1\nS 0.1 1\n"), ParseError);
  EXPECT_THROW(parse(h + scan_line(0, kBeamCount, 90.0) + "\n"), ParseError);
}

TEST(ParseLog, CommentsAndBlankLinesIgnored)
{
  const auto log = parse("# slamlog v1 stationary_until=0\n\n# note\nS 0 1\n\n");
  EXPECT_EQ(log.records.size(), 1u);
}

TEST(ParseLog, SightingRecord)
{
  const auto log = parse("# slamlog v1 stationary_until=0\nO 0.5 12 3.5 -0.25\n");
  ASSERT_EQ(log.records.size(), 1u);
  const auto& s = std::get<LandmarkSighting>(log.records[0].payload);
  EXPECT_EQ(s.id, LandmarkId{12});
  EXPECT_DOUBLE_EQ(s.z.range, 3.5);
  EXPECT_DOUBLE_EQ(s.z.bearing, -0.25);
}

TEST(SerializeLog, RoundTripIsExact)
{
  SensorLog log;
  log.stationary_until = 5.0;
  log.max_range = 40.0;
  log.records.push_back({0.1, SpeedSample{0.1 + 0.2}});
  log.records.push_back({0.1, GyroSample{1e-300, -0.0, 1.0 / 3.0}});
  log.records.push_back({0.2, LaserScan{0.2, std::vector<double>(kBeamCount, 40.0), 40.0}});
  log.records.push_back({0.3, LandmarkSighting{LandmarkId{~0ull}, Observation(2.0, kPi)}});
  std::stringstream buf;
  serialize_log(log, buf);
  EXPECT_EQ(parse_log(buf), log);
}

TEST(SerializeLog, FileRoundTrip)
{
  const auto path = std::filesystem::temp_directory_path() / "ekfslam_ingest_roundtrip.log";
  SensorLog log;
  log.records.push_back({0.0, SpeedSample{1.0}});
  write_log_file(log, path.string());
  EXPECT_EQ(read_log_file(path.string()), log);
  std::filesystem::remove(path);
  EXPECT_THROW(read_log_file(path.string()), ParseError);
}

TEST(EstimateBias, ConstantGyro)
{
  const auto records = gyro_stream(0.02, 200, 5.0);
  const auto b = estimate_bias(records, 5.0);
  EXPECT_NEAR(b.gyro_z_bias, 0.02, 1e-15);
  EXPECT_NEAR(b.speed_bias, 0.0, 1e-15);
}

TEST(EstimateBias, ZeroMeanNoiseWithinStatisticalBound)
{
  std::mt19937_64 rng(6);
  const double sigma = 0.05;
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<SensorRecord> records;
  const int n = 1000;
  for (int k = 0; k < n; ++k)
  {
    records.push_back({k * 0.004, GyroSample{0, 0, g(rng)}});
  }
  const auto b = estimate_bias(records, 5.0);
  EXPECT_LT(std::abs(b.gyro_z_bias), 3.0 * sigma / std::sqrt(n));
}

TEST(EstimateBias, SingleSample)
{
  const std::vector<SensorRecord> records = {{1.0, GyroSample{0, 0, 0.7}}, {20.0, GyroSample{0, 0, 5.0}}};
  EXPECT_DOUBLE_EQ(estimate_bias(records, 5.0).gyro_z_bias, 0.7);
}

TEST(EstimateBias, NoControlSamplesIsError)
{
  EXPECT_THROW(estimate_bias({}, 5.0), DomainError);
  const std::vector<SensorRecord> scans = {{0.0, LaserScan{0.0, std::vector<double>(kBeamCount, 5.0), 80.0}}};
  EXPECT_THROW(estimate_bias(scans, 5.0), DomainError);
}

TEST(Debias, CentresStationaryWindow)
{
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.03, 0.01);
  std::vector<SensorRecord> records;
  for (int k = 0; k < 500; ++k)
  {
    records.push_back({k * 0.01, GyroSample{0, 0, g(rng)}});
  }
  const auto fixed = debias(records, estimate_bias(records, 5.0));
  double mean = 0.0;
  for (const auto& r : fixed)
  {
    mean += std::get<GyroSample>(r.payload).wz / 500.0;
  }
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Debias, ZeroBiasIsIdentity)
{
  const auto records = gyro_stream(0.1, 50, 2.0, 1.0);
  EXPECT_EQ(debias(records, BiasEstimate{0.0, 0.0, 5.0}), records);
}

TEST(Debias, BiasedConstantRateHeading)
{
  // 0.01 rad/s bias, 5 s stationary then 100 s turning at 0.05 rad/s
  std::vector<SensorRecord> records;
  double truth = 0.0;
  const int n = static_cast<int>(105 * 200);
  for (int k = 0; k <= n; ++k)
  {
    const double t = k / 200.0;
    const double w = t >= 5.0 ? 0.05 : 0.0;
    if (k < n)
    {
      truth += w / 200.0;
    }
    records.push_back({t, SpeedSample{t >= 5.0 ? 1.0 : 0.0}});
    records.push_back({t, GyroSample{0, 0, w + 0.01}});
  }
  const auto raw = dead_reckon({}, records);
  const auto fixed = dead_reckon({}, debias(records, estimate_bias(records, 5.0)));
  EXPECT_GT(std::abs(wrap_angle(raw.back().pose.theta - truth)), 1.0);
  EXPECT_LT(std::abs(wrap_angle(fixed.back().pose.theta - truth)), 0.01);
}

TEST(DeadReckon, StraightLine)
{
  const auto poses = dead_reckon({}, gyro_stream(0.0, 100, 10.0, 1.0));
  EXPECT_NEAR(poses.back().pose.x, 10.0, 1e-9);
  EXPECT_NEAR(poses.back().pose.y, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(poses.back().t, 10.0);
}

TEST(DeadReckon, CircleClosesAfterOnePeriod)
{
  const double v = 2.0;
  const double w = 0.5;
  const double period = 2.0 * kPi / w;
  const double dt = 0.005;
  const auto n = static_cast<int>(std::ceil(period / dt));
  std::vector<SensorRecord> records;
  for (int k = 0; k <= n; ++k)
  {
    const double t = std::min(k * dt, period);
    records.push_back({t, SpeedSample{v}});
    records.push_back({t, GyroSample{0, 0, w}});
  }
  const auto poses = dead_reckon({}, records);
  const double radius = v / w;
  EXPECT_LT(std::hypot(poses.back().pose.x, poses.back().pose.y), 0.01 * radius);
}

TEST(DeadReckon, ZeroInputsHoldPose)
{
  const Pose p0(3, -2, 1.0);
  const auto poses = dead_reckon(p0, gyro_stream(0.0, 10, 3.0));
  for (const auto& tp : poses)
  {
    EXPECT_EQ(tp.pose, p0);
  }
}

TEST(DeadReckon, NoControlsIsError)
{
  EXPECT_THROW(dead_reckon({}, {}), DomainError);
}
