#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ekfslam/errors.hpp"
#include "ekfslam/simulator.hpp"
#include "text_util.hpp"

namespace ekfslam
{

namespace
{

class ScenarioReader
{
public:
  ScenarioReader(std::string_view source, ScenarioConfig& cfg) : source_(source), cfg_(cfg) {}

  void line(std::size_t line_no, std::string_view raw)
  {
    line_ = line_no;
    const auto hash = raw.find('#');
    const auto content = text::trim(raw.substr(0, hash));
    if (content.empty())
    {
      return;
    }
    if (content.front() == '[')
    {
      if (content.back() != ']')
      {
        fail("unterminated section header");
      }
      section_ = std::string(text::trim(content.substr(1, content.size() - 2)));
      if (section_ != "run" && section_ != "motion" && section_ != "sensor" && section_ != "landmarks" &&
          section_ != "path" && section_ != "dynamic")
      {
        fail("unknown section [" + section_ + "]");
      }
      return;
    }
    const auto eq = content.find('=');
    if (eq == std::string_view::npos)
    {
      fail("expected key = value");
    }
    if (section_.empty())
    {
      fail("key outside of any section");
    }
    key_ = std::string(text::trim(content.substr(0, eq)));
    values_ = text::split(text::trim(content.substr(eq + 1)));
    if (values_.empty())
    {
      fail("missing value for '" + key_ + "'");
    }
    apply();
  }

private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(std::string(source_), line_, what); }

  double num(std::size_t i = 0) const
  {
    if (i >= values_.size())
    {
      fail("'" + key_ + "' expects more values");
    }
    const auto v = text::parse_number(values_[i]);
    if (!v)
    {
      fail("invalid number '" + std::string(values_[i]) + "' for '" + key_ + "'");
    }
    return *v;
  }

  void arity(std::size_t n) const
  {
    if (values_.size() != n)
    {
      fail("'" + key_ + "' expects " + std::to_string(n) + " value(s)");
    }
  }

  double scalar()
  {
    arity(1);
    return num();
  }

  std::size_t count()
  {
    arity(1);
    const auto v = text::parse_integer<std::size_t>(values_[0]);
    if (!v)
    {
      fail("invalid count '" + std::string(values_[0]) + "' for '" + key_ + "'");
    }
    return *v;
  }

  std::string word()
  {
    arity(1);
    return std::string(values_[0]);
  }

  [[noreturn]] void unknown() const { fail("unknown key '" + key_ + "' in [" + section_ + "]"); }

  void apply()
  {
    if (section_ == "run")
    {
      if (key_ == "seed")
      {
        arity(1);
        const auto v = text::parse_integer<std::uint64_t>(values_[0]);
        if (!v)
        {
          fail("invalid seed");
        }
        cfg_.seed = *v;
      }
      else if (key_ == "duration") cfg_.duration = scalar();
      else if (key_ == "dt") cfg_.dt = scalar();
      else if (key_ == "stationary") cfg_.stationary = scalar();
      else if (key_ == "initial")
      {
        arity(3);
        cfg_.initial_pose = Pose(num(0), num(1), deg2rad(num(2)));
      }
      else unknown();
    }
    else if (section_ == "motion")
    {
      if (key_ == "sigma_v") cfg_.motion.sigma_v = scalar();
      else if (key_ == "sigma_omega_deg") cfg_.motion.sigma_omega = deg2rad(scalar());
      else if (key_ == "speed_bias") cfg_.speed_bias = scalar();
      else if (key_ == "gyro_bias") cfg_.gyro_bias = scalar();
      else unknown();
    }
    else if (section_ == "sensor")
    {
      if (key_ == "sigma_range") cfg_.sensor.sigma_range = scalar();
      else if (key_ == "sigma_bearing_deg") cfg_.sensor.sigma_bearing = deg2rad(scalar());
      else if (key_ == "offset_deg") cfg_.sensor.sensor_offset = deg2rad(scalar());
      else if (key_ == "fov_deg") cfg_.fov = deg2rad(scalar());
      else if (key_ == "max_range") cfg_.max_range = scalar();
      else if (key_ == "scan_every") cfg_.scan_every = count();
      else if (key_ == "cluster_beams") cfg_.render.cluster_beams = count();
      else if (key_ == "mode")
      {
        const auto w = word();
        if (w == "range") cfg_.mode = ObservationMode::RangeOnly;
        else if (w == "bearing") cfg_.mode = ObservationMode::BearingOnly;
        else if (w == "both") cfg_.mode = ObservationMode::RangeBearing;
        else fail("mode must be range, bearing or both");
      }
      else if (key_ == "output")
      {
        const auto w = word();
        if (w == "sightings") cfg_.output = SensorOutput::Sightings;
        else if (w == "scans") cfg_.output = SensorOutput::Scans;
        else fail("output must be sightings or scans");
      }
      else unknown();
    }
    else if (section_ == "landmarks")
    {
      if (key_ == "count") cfg_.layout.count = count();
      else if (key_ == "radius") cfg_.layout.radius = scalar();
      else if (key_ == "min_separation") cfg_.layout.min_separation = scalar();
      else if (key_ == "point")
      {
        arity(2);
        cfg_.layout.points.push_back({num(0), num(1)});
      }
      else unknown();
    }
    else if (section_ == "path")
    {
      if (key_ == "max_speed") cfg_.max_speed = scalar();
      else if (key_ == "max_rate_deg") cfg_.max_rate = deg2rad(scalar());
      else if (key_ == "figure_eight" || key_ == "segment")
      {
        if (!path_overridden_)
        {
          cfg_.path.clear();
          path_overridden_ = true;
        }
        if (key_ == "figure_eight")
        {
          arity(2);
          try
          {
            const auto eight = figure_eight(num(0), num(1));
            cfg_.path.insert(cfg_.path.end(), eight.begin(), eight.end());
          }
          catch (const ConfigError& e)
          {
            fail(e.what());
          }
        }
        else
        {
          arity(3);
          cfg_.path.push_back({num(0), {num(1), deg2rad(num(2))}});
        }
      }
      else unknown();
    }
    else if (section_ == "dynamic")
    {
      if (key_ == "object")
      {
        arity(6);
        cfg_.dynamics.push_back({{num(0), num(1)}, num(2), num(3), num(4), num(5)});
      }
      else unknown();
    }
  }

  std::string_view source_;
  ScenarioConfig& cfg_;
  std::size_t line_{0};
  std::string section_;
  std::string key_;
  std::vector<std::string_view> values_;
  bool path_overridden_{false};
};

std::ifstream open_or_throw(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ParseError(path, 0, "cannot open file");
  }
  return in;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in, std::string_view source)
{
  ScenarioConfig cfg = default_scenario();
  ScenarioReader reader(source, cfg);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    reader.line(++line_no, line);
  }
  return cfg;
}

ScenarioConfig read_scenario_file(const std::string& path)
{
  auto in = open_or_throw(path);
  return parse_scenario(in, path);
}

void write_truth(const GroundTruth& truth, std::ostream& out)
{
  for (const auto& tp : truth.poses)
  {
    out << "T ";
    text::put_number(out, tp.t);
    for (const double v : {tp.pose.x, tp.pose.y, tp.pose.theta})
    {
      out << ' ';
      text::put_number(out, v);
    }
    out << '\n';
  }
}

void write_truth_file(const GroundTruth& truth, const std::string& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error("cannot write " + path);
  }
  write_truth(truth, out);
}

std::vector<TimedPose> parse_truth(std::istream& in, std::string_view source)
{
  std::vector<TimedPose> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    const auto toks = text::split(line, " \t\r");
    if (toks.empty() || toks[0].front() == '#')
    {
      continue;
    }
    const auto fail = [&](const std::string& what) { throw ParseError(std::string(source), line_no, what); };
    if (toks[0] != "T" || toks.size() != 5)
    {
      fail("expected 'T <t> <x> <y> <theta>'");
    }
    double v[4];
    for (std::size_t i = 0; i < 4; ++i)
    {
      const auto n = text::parse_number(toks[i + 1]);
      if (!n)
      {
        fail("invalid number '" + std::string(toks[i + 1]) + "'");
      }
      v[i] = *n;
    }
    if (!out.empty() && v[0] <= out.back().t)
    {
      fail("truth timestamps must be strictly increasing");
    }
    out.push_back({v[0], Pose(v[1], v[2], v[3])});
  }
  return out;
}

std::vector<TimedPose> read_truth_file(const std::string& path)
{
  auto in = open_or_throw(path);
  return parse_truth(in, path);
}

void write_map(const KnownMap& map, std::ostream& out)
{
  for (const auto& [id, pos] : map.entries())
  {
    out << id.value << ' ';
    text::put_number(out, pos.x);
    out << ' ';
    text::put_number(out, pos.y);
    out << '\n';
  }
}

KnownMap parse_map(std::istream& in, std::string_view source)
{
  std::vector<std::pair<LandmarkId, LandmarkPosition>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    const auto toks = text::split(line, " \t\r");
    if (toks.empty() || toks[0].front() == '#')
    {
      continue;
    }
    const auto fail = [&](const std::string& what) { throw ParseError(std::string(source), line_no, what); };
    if (toks.size() != 3)
    {
      fail("expected '<id> <x> <y>'");
    }
    const auto id = text::parse_integer<std::uint64_t>(toks[0]);
    const auto x = text::parse_number(toks[1]);
    const auto y = text::parse_number(toks[2]);
    if (!id || !x || !y)
    {
      fail("invalid map entry");
    }
    entries.push_back({LandmarkId{*id}, {*x, *y}});
  }
  try
  {
    return KnownMap(std::move(entries));
  }
  catch (const ConfigError& e)
  {
    throw ParseError(std::string(source), line_no, e.what());
  }
}

KnownMap read_map_file(const std::string& path)
{
  auto in = open_or_throw(path);
  return parse_map(in, path);
}

}  // namespace ekfslam
