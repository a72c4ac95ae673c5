#include "ekfslam/simulator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ekfslam/errors.hpp"

namespace ekfslam
{

LandmarkPosition DynamicObject::position(double t) const
{
  const double dt = t - t_start;
  return {start.x + vx * dt, start.y + vy * dt};
}

void ScenarioConfig::validate() const
{
  const auto fail = [](const std::string& what) { throw ConfigError("scenario: " + what); };
  if (!std::isfinite(duration) || duration <= 0.0)
  {
    fail("duration must be positive");
  }
  if (!std::isfinite(dt) || dt <= 0.0)
  {
    fail("dt must be positive");
  }
  if (duration < dt)
  {
    fail("duration shorter than one step");
  }
  motion.validate();
  sensor.validate();
  if (path.empty())
  {
    fail("control path is empty");
  }
  double path_length = 0.0;
  for (const auto& seg : path)
  {
    if (!std::isfinite(seg.duration) || seg.duration <= 0.0)
    {
      fail("path segment duration must be positive");
    }
    if (!std::isfinite(seg.u.v) || !std::isfinite(seg.u.omega) || std::abs(seg.u.v) > max_speed ||
        std::abs(seg.u.omega) > max_rate)
    {
      fail("path segment exceeds max speed or max rate");
    }
    path_length += seg.duration;
  }
  if (!(path_length > 0.0))
  {
    fail("control path has zero length");
  }
  if (layout.points.empty() && layout.count > 0 && !(layout.radius > 0.0))
  {
    fail("landmark radius must be positive");
  }
  if (!(fov > 0.0) || fov > 2.0 * kPi)
  {
    fail("field of view must lie in (0, 2pi]");
  }
  if (!(max_range > 0.0) || !std::isfinite(max_range))
  {
    fail("max range must be positive");
  }
  if (scan_every == 0)
  {
    fail("scan_every must be at least 1");
  }
  if (render.cluster_beams == 0 || render.cluster_beams > kBeamCount)
  {
    fail("cluster_beams out of range");
  }
  if (!std::isfinite(stationary) || stationary < 0.0)
  {
    fail("stationary time must be non-negative");
  }
  if (!std::isfinite(speed_bias) || !std::isfinite(gyro_bias))
  {
    fail("biases must be finite");
  }
  for (const auto& d : dynamics)
  {
    if (!(d.t_end >= d.t_start))
    {
      fail("dynamic object ends before it starts");
    }
  }
}

std::vector<ControlSegment> figure_eight(double radius, double speed)
{
  if (!(radius > 0.0) || !(speed > 0.0))
  {
    throw ConfigError("figure-eight radius and speed must be positive");
  }
  const double omega = speed / radius;
  const double period = 2.0 * kPi / omega;
  return {{period, {speed, omega}}, {period, {speed, -omega}}};
}

ScenarioConfig default_scenario()
{
  ScenarioConfig cfg;
  cfg.path = figure_eight(15.0, 3.0);
  return cfg;
}

ScenarioConfig dynamic_scenario()
{
  ScenarioConfig cfg;
  cfg.duration = 60.0;
  cfg.dt = 0.1;
  cfg.motion = {0.05, deg2rad(0.5)};
  cfg.sensor = {0.03, deg2rad(0.25), kPi / 2.0};
  cfg.output = SensorOutput::Scans;
  cfg.max_range = 40.0;
  cfg.path = figure_eight(8.0, 1.5);
  // The (12, 9) / (12, 10.2) pair sits inside the 2 m pre-filter radius.
  cfg.layout.points = {{14.0, 0.0},   {-14.0, 2.0},  {0.0, 20.0},  {3.0, -21.0}, {-10.0, 14.0},
                       {-9.0, -15.0}, {12.0, 9.0},   {12.0, 10.2}, {11.0, -12.0}, {22.0, -4.0},
                       {-22.0, -5.0}, {6.0, 27.0},   {-5.0, -28.0}, {25.0, 14.0}, {-24.0, 15.0}};
  cfg.dynamics = {
      {{-30.0, 4.0}, 1.0, 0.0, 0.0, cfg.duration},
      {{6.0, -30.0}, 0.0, 1.0, 0.0, cfg.duration},
  };
  return cfg;
}

namespace
{

class NoiseSource
{
public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double gaussian(double sigma) { return sigma * unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> unit_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::vector<LandmarkPosition> place_landmarks(const LandmarkLayout& layout, NoiseSource& noise)
{
  if (!layout.points.empty())
  {
    return layout.points;
  }
  constexpr int kMaxAttempts = 100000;
  std::vector<LandmarkPosition> out;
  int attempts = 0;
  while (out.size() < layout.count)
  {
    if (++attempts > kMaxAttempts)
    {
      throw ConfigError("cannot place landmarks with the requested separation");
    }
    const double r = layout.radius * std::sqrt(noise.uniform(0.0, 1.0));
    const double a = noise.uniform(-kPi, kPi);
    const LandmarkPosition candidate{r * std::cos(a), r * std::sin(a)};
    bool ok = true;
    for (const auto& existing : out)
    {
      if (distance(existing, candidate) < layout.min_separation)
      {
        ok = false;
        break;
      }
    }
    if (ok)
    {
      out.push_back(candidate);
    }
  }
  return out;
}

ControlInput scheduled_control(const ScenarioConfig& cfg, double t)
{
  if (t < cfg.stationary)
  {
    return {};
  }
  double period = 0.0;
  for (const auto& seg : cfg.path)
  {
    period += seg.duration;
  }
  double local = std::fmod(t - cfg.stationary, period);
  for (const auto& seg : cfg.path)
  {
    if (local < seg.duration)
    {
      return seg.u;
    }
    local -= seg.duration;
  }
  return cfg.path.back().u;
}

/// Sensor visibility: within range and within half the field of view of the
/// forward axis (which sits at bearing == sensor_offset).
bool in_view(const Observation& z, const ScenarioConfig& cfg)
{
  return z.range <= cfg.max_range && std::abs(wrap_angle(z.bearing - cfg.sensor.sensor_offset)) <= 0.5 * cfg.fov;
}

}  // namespace

LaserScan render_returns(double timestamp, std::span<const Observation> returns, double max_range,
                         const ScanRenderConfig& cfg)
{
  LaserScan scan;
  scan.timestamp = timestamp;
  scan.max_range = max_range;
  scan.ranges.assign(kBeamCount, max_range);

  const auto half_low = static_cast<long>((cfg.cluster_beams - 1) / 2);
  const auto half_high = static_cast<long>(cfg.cluster_beams / 2);
  for (const auto& z : returns)
  {
    if (!(z.range > 0.0) || z.range >= max_range)
    {
      continue;
    }
    const long centre = std::lround(z.bearing / kBeamSpacing);
    if (centre < 0 || centre >= static_cast<long>(kBeamCount))
    {
      continue;
    }
    for (long b = centre - half_low; b <= centre + half_high; ++b)
    {
      if (b >= 0 && b < static_cast<long>(kBeamCount))
      {
        auto& beam = scan.ranges[static_cast<std::size_t>(b)];
        beam = std::min(beam, z.range);
      }
    }
  }
  return scan;
}

LaserScan render_scan(double timestamp, const Pose& p, std::span<const LandmarkPosition> landmarks,
                      std::span<const LandmarkPosition> dynamics, const SensorNoiseConfig& sensor, double max_range,
                      const ScanRenderConfig& cfg)
{
  std::vector<Observation> returns;
  const auto add = [&](const LandmarkPosition& l) {
    if (std::hypot(l.x - p.x, l.y - p.y) > 1e-6)
    {
      returns.push_back(observe(p, l, sensor));
    }
  };
  for (const auto& l : landmarks)
  {
    add(l);
  }
  for (const auto& d : dynamics)
  {
    add(d);
  }
  return render_returns(timestamp, returns, max_range, cfg);
}

Simulation simulate(const ScenarioConfig& cfg)
{
  cfg.validate();
  NoiseSource noise(cfg.seed);

  Simulation sim;
  sim.truth.landmarks = place_landmarks(cfg.layout, noise);
  sim.log.stationary_until = cfg.stationary;
  sim.log.max_range = cfg.max_range;

  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
  Pose pose = cfg.initial_pose;
  sim.truth.poses.reserve(steps + 1);

  for (std::size_t k = 0; k <= steps; ++k)
  {
    const double t = static_cast<double>(k) * cfg.dt;
    sim.truth.poses.push_back({t, pose});

    if (k > 0 && k % cfg.scan_every == 0)
    {
      sim.truth.epoch_times.push_back(t);
      auto& visible = sim.truth.visible.emplace_back();
      std::vector<Observation> returns;
      for (std::size_t j = 0; j < sim.truth.landmarks.size(); ++j)
      {
        const auto& l = sim.truth.landmarks[j];
        if (std::hypot(l.x - pose.x, l.y - pose.y) < 1e-6)
        {
          continue;
        }
        const Observation z_true = observe(pose, l, cfg.sensor);
        if (!in_view(z_true, cfg))
        {
          continue;
        }
        visible.push_back(j);
        const double r = z_true.range + noise.gaussian(cfg.sensor.sigma_range);
        const double b = z_true.bearing + noise.gaussian(cfg.sensor.sigma_bearing);
        if (cfg.output == SensorOutput::Sightings)
        {
          if (r > 0.0)
          {
            sim.log.records.push_back({t, LandmarkSighting{LandmarkId{j}, Observation(r, b)}});
          }
        }
        else
        {
          returns.emplace_back(r, b);
        }
      }
      if (cfg.output == SensorOutput::Scans)
      {
        for (const auto& d : cfg.dynamics)
        {
          if (!d.active(t))
          {
            continue;
          }
          const auto pos = d.position(t);
          if (std::hypot(pos.x - pose.x, pos.y - pose.y) < 1e-6)
          {
            continue;
          }
          const Observation z_true = observe(pose, pos, cfg.sensor);
          if (in_view(z_true, cfg))
          {
            returns.emplace_back(z_true.range + noise.gaussian(cfg.sensor.sigma_range),
                                 z_true.bearing + noise.gaussian(cfg.sensor.sigma_bearing));
          }
        }
        sim.log.records.push_back({t, render_returns(t, returns, cfg.max_range, cfg.render)});
      }
    }

    // Controls applied over [t, t + dt), logged with noise and bias at t.
    const ControlInput u = scheduled_control(cfg, t);
    const double v_meas = u.v + noise.gaussian(cfg.motion.sigma_v) + cfg.speed_bias;
    const double w_meas = u.omega + noise.gaussian(cfg.motion.sigma_omega) + cfg.gyro_bias;
    sim.log.records.push_back({t, SpeedSample{v_meas}});
    sim.log.records.push_back({t, GyroSample{0.0, 0.0, w_meas}});

    if (k < steps)
    {
      pose = motion_step(pose, u, cfg.dt);
    }
  }
  return sim;
}

KnownMap truth_map(const GroundTruth& truth)
{
  std::vector<std::pair<LandmarkId, LandmarkPosition>> entries;
  for (std::size_t j = 0; j < truth.landmarks.size(); ++j)
  {
    entries.emplace_back(LandmarkId{j}, truth.landmarks[j]);
  }
  return KnownMap(std::move(entries));
}

}  // namespace ekfslam
