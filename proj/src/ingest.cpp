#include "ekfslam/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "ekfslam/errors.hpp"
#include "text_util.hpp"

namespace ekfslam
{

namespace
{

using text::put_number;

constexpr std::string_view kMagic = "slamlog";
constexpr std::string_view kVersion = "v1";

class LineParser
{
public:
  LineParser(std::string_view source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(std::string(source_), line_, what); }

  double number(std::string_view tok, const char* field) const
  {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
    {
      fail(std::string("invalid ") + field + " '" + std::string(tok) + "'");
    }
    return value;
  }

  std::uint64_t integer(std::string_view tok, const char* field) const
  {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
    {
      fail(std::string("invalid ") + field + " '" + std::string(tok) + "'");
    }
    return value;
  }

  void arity(const std::vector<std::string_view>& toks, std::size_t expected, const char* kind) const
  {
    if (toks.size() != expected)
    {
      fail(std::string(kind) + " record expects " + std::to_string(expected - 1) + " fields, got " +
           std::to_string(toks.size() - 1));
    }
  }

private:
  std::string_view source_;
  std::size_t line_;
};

void parse_header(const std::vector<std::string_view>& toks, const LineParser& lp, SensorLog& log)
{
  if (toks.size() < 3 || toks[0] != "#" || toks[1] != kMagic || toks[2] != kVersion)
  {
    lp.fail("missing or malformed '# slamlog v1' header");
  }
  bool have_stationary = false;
  for (std::size_t i = 3; i < toks.size(); ++i)
  {
    const auto eq = toks[i].find('=');
    if (eq == std::string_view::npos)
    {
      lp.fail("header field '" + std::string(toks[i]) + "' is not key=value");
    }
    const auto key = toks[i].substr(0, eq);
    const auto value = toks[i].substr(eq + 1);
    if (key == "stationary_until")
    {
      log.stationary_until = lp.number(value, "stationary_until");
      have_stationary = true;
    }
    else if (key == "max_range")
    {
      log.max_range = lp.number(value, "max_range");
      if (log.max_range <= 0.0)
      {
        lp.fail("max_range must be positive");
      }
    }
    else
    {
      lp.fail("unknown header field '" + std::string(key) + "'");
    }
  }
  if (!have_stationary)
  {
    lp.fail("header lacks stationary_until");
  }
}

SensorRecord parse_record(const std::vector<std::string_view>& toks, const LineParser& lp, double max_range)
{
  const auto& tag = toks[0];
  if (tag.size() != 1)
  {
    lp.fail("unknown record type '" + std::string(tag) + "'");
  }
  if (toks.size() < 2)
  {
    lp.fail("record lacks a timestamp");
  }
  SensorRecord rec;
  rec.timestamp = lp.number(toks[1], "timestamp");
  switch (tag[0])
  {
    case 'S':
      lp.arity(toks, 3, "speed");
      rec.payload = SpeedSample{lp.number(toks[2], "speed")};
      break;
    case 'G':
      lp.arity(toks, 5, "gyro");
      rec.payload = GyroSample{lp.number(toks[2], "wx"), lp.number(toks[3], "wy"), lp.number(toks[4], "wz")};
      break;
    case 'L':
    {
      lp.arity(toks, kBeamCount + 2, "scan");
      LaserScan scan;
      scan.timestamp = rec.timestamp;
      scan.max_range = max_range;
      scan.ranges.reserve(kBeamCount);
      for (std::size_t i = 0; i < kBeamCount; ++i)
      {
        const double r = lp.number(toks[i + 2], "range");
        if (r < 0.0 || r > max_range)
        {
          lp.fail("beam " + std::to_string(i) + " range outside [0, max_range]");
        }
        scan.ranges.push_back(r);
      }
      rec.payload = std::move(scan);
      break;
    }
    case 'O':
      lp.arity(toks, 5, "sighting");
      rec.payload = LandmarkSighting{LandmarkId{lp.integer(toks[2], "landmark id")},
                                     Observation(lp.number(toks[3], "range"), lp.number(toks[4], "bearing"))};
      break;
    default:
      lp.fail("unknown record type '" + std::string(tag) + "'");
  }
  return rec;
}

}  // namespace

SensorLog parse_log(std::istream& in, std::string_view source)
{
  SensorLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::array<double, 4> last_time;
  last_time.fill(-std::numeric_limits<double>::infinity());

  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    const auto toks = text::split(line);
    if (toks.empty())
    {
      continue;
    }
    const LineParser lp(source, line_no);
    if (!have_header)
    {
      parse_header(toks, lp, log);
      have_header = true;
      continue;
    }
    if (toks[0].front() == '#')
    {
      continue;
    }
    auto rec = parse_record(toks, lp, log.max_range);
    auto& last = last_time[rec.payload.index()];
    if (rec.timestamp < last)
    {
      lp.fail("timestamp decreases within stream");
    }
    last = rec.timestamp;
    log.records.push_back(std::move(rec));
  }

  std::stable_sort(log.records.begin(), log.records.end(),
                   [](const SensorRecord& a, const SensorRecord& b) { return a.timestamp < b.timestamp; });
  return log;
}

SensorLog read_log_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ParseError(path, 0, "cannot open file");
  }
  return parse_log(in, path);
}

void serialize_log(const SensorLog& log, std::ostream& out)
{
  out << "# slamlog v1 stationary_until=";
  put_number(out, log.stationary_until);
  out << " max_range=";
  put_number(out, log.max_range);
  out << '\n';

  for (const auto& rec : log.records)
  {
    const auto stamp = [&](char tag) {
      out << tag << ' ';
      put_number(out, rec.timestamp);
    };
    const auto field = [&](double v) {
      out << ' ';
      put_number(out, v);
    };
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, SpeedSample>)
          {
            stamp('S');
            field(p.v);
          }
          else if constexpr (std::is_same_v<T, GyroSample>)
          {
            stamp('G');
            field(p.wx);
            field(p.wy);
            field(p.wz);
          }
          else if constexpr (std::is_same_v<T, LaserScan>)
          {
            stamp('L');
            for (const double r : p.ranges)
            {
              field(r);
            }
          }
          else
          {
            stamp('O');
            out << ' ' << p.id.value;
            field(p.z.range);
            field(p.z.bearing);
          }
        },
        rec.payload);
    out << '\n';
  }
}

void write_log_file(const SensorLog& log, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error("cannot write " + path);
  }
  serialize_log(log, out);
}

BiasEstimate estimate_bias(std::span<const SensorRecord> records, double window)
{
  if (!std::isfinite(window) || window <= 0.0)
  {
    throw DomainError("bias window must be positive");
  }
  if (records.empty())
  {
    throw DomainError("no samples in bias window");
  }
  const double t_end = records.front().timestamp + window;

  double speed_sum = 0.0;
  double gyro_sum = 0.0;
  std::size_t speed_n = 0;
  std::size_t gyro_n = 0;
  for (const auto& rec : records)
  {
    if (rec.timestamp > t_end)
    {
      break;
    }
    if (const auto* s = std::get_if<SpeedSample>(&rec.payload))
    {
      speed_sum += s->v;
      ++speed_n;
    }
    else if (const auto* g = std::get_if<GyroSample>(&rec.payload))
    {
      gyro_sum += g->wz;
      ++gyro_n;
    }
  }
  if (speed_n == 0 && gyro_n == 0)
  {
    throw DomainError("no speed or gyro samples in bias window");
  }
  return {speed_n ? speed_sum / static_cast<double>(speed_n) : 0.0,
          gyro_n ? gyro_sum / static_cast<double>(gyro_n) : 0.0, window};
}

std::vector<SensorRecord> debias(std::span<const SensorRecord> records, const BiasEstimate& bias)
{
  std::vector<SensorRecord> out(records.begin(), records.end());
  for (auto& rec : out)
  {
    if (auto* s = std::get_if<SpeedSample>(&rec.payload))
    {
      s->v -= bias.speed_bias;
    }
    else if (auto* g = std::get_if<GyroSample>(&rec.payload))
    {
      g->wz -= bias.gyro_z_bias;
    }
  }
  return out;
}

std::vector<TimedPose> dead_reckon(const Pose& p0, std::span<const SensorRecord> records)
{
  std::vector<TimedPose> out;
  Pose pose = p0;
  ControlInput held;

  for (std::size_t i = 0; i < records.size();)
  {
    const double t = records[i].timestamp;
    bool has_control = false;
    ControlInput latched = held;
    for (; i < records.size() && records[i].timestamp == t; ++i)
    {
      if (const auto* s = std::get_if<SpeedSample>(&records[i].payload))
      {
        latched.v = s->v;
        has_control = true;
      }
      else if (const auto* g = std::get_if<GyroSample>(&records[i].payload))
      {
        latched.omega = g->wz;
        has_control = true;
      }
    }
    if (!has_control)
    {
      continue;
    }
    if (!out.empty() && t > out.back().t)
    {
      pose = motion_step(pose, held, t - out.back().t);
    }
    held = latched;
    out.push_back({t, pose});
  }

  if (out.empty())
  {
    throw DomainError("no speed or gyro records to integrate");
  }
  return out;
}

}  // namespace ekfslam
