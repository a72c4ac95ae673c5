#include "ekfslam/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <unordered_map>

#include "ekfslam/errors.hpp"

namespace ekfslam
{

void PipelineConfig::validate() const
{
  motion.validate();
  sensor.validate();
  perception.quality_params.validate();
  if (perception.size.min_points >= perception.size.max_points)
  {
    throw ConfigError("landmark size bounds must satisfy min < max");
  }
  if (!(perception.gap > 0.0))
  {
    throw ConfigError("segmentation gap must be positive");
  }
  if (!(perception.min_separation >= 0.0))
  {
    throw ConfigError("pre-filter separation must be non-negative");
  }
  if (!(bias_window > 0.0))
  {
    throw ConfigError("bias window must be positive");
  }
  if (estimator == Estimator::EkfLocalisation && !map)
  {
    throw ConfigError("ekf_localisation requires a known map");
  }
}

PipelineConfig pipeline_for(const ScenarioConfig& scenario, const GroundTruth& truth, Estimator estimator)
{
  PipelineConfig cfg;
  cfg.estimator = estimator;
  cfg.mode = scenario.mode;
  cfg.motion = scenario.motion;
  cfg.sensor = scenario.sensor;
  cfg.initial_pose = truth.poses.empty() ? scenario.initial_pose : truth.poses.front().pose;
  if (estimator == Estimator::EkfLocalisation)
  {
    cfg.map = truth_map(truth);
  }
  return cfg;
}

namespace
{

constexpr std::size_t kMaxDiagnostics = 16;

class Runner
{
public:
  explicit Runner(const PipelineConfig& cfg) : cfg_(cfg), state_(cfg.initial_pose) {}

  PipelineResult run(const SensorLog& log)
  {
    std::vector<SensorRecord> records = log.records;
    if (cfg_.remove_bias && !records.empty() && log.stationary_until > records.front().timestamp)
    {
      const double window = std::min(cfg_.bias_window, log.stationary_until - records.front().timestamp);
      stats_.bias = estimate_bias(records, window);
      records = debias(records, *stats_.bias);
    }

    ControlInput held;
    std::optional<double> t_prev;
    for (std::size_t i = 0; i < records.size();)
    {
      const double t = records[i].timestamp;
      if (t_prev && t > *t_prev)
      {
        predict(state_, held, t - *t_prev, cfg_.motion);
      }
      ControlInput latched = held;
      for (; i < records.size() && records[i].timestamp == t; ++i)
      {
        std::visit(
            [&](const auto& p) {
              using T = std::decay_t<decltype(p)>;
              if constexpr (std::is_same_v<T, SpeedSample>)
              {
                latched.v = p.v;
              }
              else if constexpr (std::is_same_v<T, GyroSample>)
              {
                latched.omega = p.wz;
              }
              else if constexpr (std::is_same_v<T, LandmarkSighting>)
              {
                on_sighting(p);
              }
              else
              {
                on_scan(p, t);
              }
            },
            records[i].payload);
      }
      held = latched;
      t_prev = t;
      record_step(t);
    }
    return {std::move(run_), std::move(state_), std::move(stats_)};
  }

private:
  bool observing() const { return cfg_.estimator != Estimator::DeadReckoning; }

  void note(const std::string& what)
  {
    ++stats_.skipped_updates;
    if (stats_.diagnostics.size() < kMaxDiagnostics)
    {
      stats_.diagnostics.push_back(what);
    }
  }

  template <typename Fn>
  void guarded_update(Fn&& fn)
  {
    try
    {
      const UpdateResult r = fn();
      if (r.applied())
      {
        ++stats_.updates;
      }
      else
      {
        note(r.diagnostic);
      }
    }
    catch (const DegenerateGeometryError& e)
    {
      note(e.what());
    }
  }

  void on_sighting(const LandmarkSighting& s)
  {
    if (!observing() || !(s.z.range > 0.0))
    {
      return;
    }
    ++associations_;
    if (cfg_.estimator == Estimator::EkfLocalisation)
    {
      if (!cfg_.map->find(s.id))
      {
        note("sighting of landmark " + std::to_string(s.id.value) + " absent from map");
        return;
      }
      guarded_update([&] { return update_known_map(state_, *cfg_.map, s.id, s.z, cfg_.sensor, cfg_.mode); });
      return;
    }
    const auto it = sighted_.find(s.id);
    if (it == sighted_.end())
    {
      sighted_.emplace(s.id, init_landmark(state_, s.z, cfg_.sensor));
      ++stats_.landmarks_initialised;
      return;
    }
    guarded_update([&] { return update(state_, it->second, s.z, cfg_.sensor, cfg_.mode); });
  }

  void on_scan(const LaserScan& scan, double t)
  {
    if (!observing())
    {
      return;
    }
    const auto& pc = cfg_.perception;
    const Pose pose = state_.pose();
    const auto objects = segment_scan(scan, pc.gap);
    auto observations = extract_landmark_observations(objects, pc.size.min_points, pc.size.max_points);
    std::vector<LandmarkPosition> positions;
    positions.reserve(observations.size());
    for (const auto& z : observations)
    {
      positions.push_back(inverse_observe(pose, z, cfg_.sensor));
    }
    if (pc.prefilter)
    {
      const auto keep = prefilter_indices(positions, pc.min_separation);
      std::vector<Observation> kept_obs;
      std::vector<LandmarkPosition> kept_pos;
      for (const auto k : keep)
      {
        kept_obs.push_back(observations[k]);
        kept_pos.push_back(positions[k]);
      }
      observations = std::move(kept_obs);
      positions = std::move(kept_pos);
    }

    if (cfg_.estimator == Estimator::EkfLocalisation)
    {
      std::vector<LandmarkPosition> prior;
      for (const auto& e : cfg_.map->entries())
      {
        prior.push_back(e.second);
      }
      const auto assoc = associate(positions, prior, pc.quality_params.d_max);
      associations_ += assoc.distance_evaluations;
      for (const auto& [det, j] : assoc.pairs)
      {
        const LandmarkId id = cfg_.map->entries()[j].first;
        guarded_update([&] { return update_known_map(state_, *cfg_.map, id, observations[det], cfg_.sensor, cfg_.mode); });
      }
      return;
    }

    const auto ids = state_.landmark_ids();
    const std::vector<LandmarkId> map_ids(ids.begin(), ids.end());
    std::vector<LandmarkPosition> prior;
    prior.reserve(map_ids.size());
    for (const auto id : map_ids)
    {
      prior.push_back(state_.landmark(id));
    }
    const auto assoc = associate(positions, prior, pc.quality_params.d_max);
    associations_ += assoc.distance_evaluations;
    for (const auto& [det, j] : assoc.pairs)
    {
      guarded_update([&] { return update(state_, map_ids[j], observations[det], cfg_.sensor, cfg_.mode); });
    }

    if (!pc.quality)
    {
      for (const auto det : assoc.unmatched_new)
      {
        init_landmark(state_, observations[det], cfg_.sensor);
        ++stats_.landmarks_initialised;
      }
      return;
    }

    std::vector<LandmarkPosition> fresh;
    fresh.reserve(assoc.unmatched_new.size());
    for (const auto det : assoc.unmatched_new)
    {
      fresh.push_back(positions[det]);
    }
    const auto q = update_quality(tracker_, fresh, t, pc.quality_params);
    stats_.candidates_cleared += q.cleared.size();
    for (const auto& promo : q.promoted)
    {
      init_landmark(state_, observations[assoc.unmatched_new[promo.detection]], cfg_.sensor);
      ++stats_.landmarks_initialised;
      ++stats_.candidates_promoted;
    }
  }

  void record_step(double t)
  {
    RunStep step;
    step.t = t;
    step.estimate = state_.pose();
    step.variance = state_.pose_covariance().diagonal();
    step.landmark_count = state_.landmark_count();
    step.associations = associations_;
    run_.steps.push_back(step);

    if (cfg_.record_landmark_traces && cfg_.estimator == Estimator::EkfSlam)
    {
      for (const auto id : state_.landmark_ids())
      {
        run_.landmark_traces.push_back({t, id, state_.landmark_covariance(id).trace()});
      }
    }
  }

  const PipelineConfig& cfg_;
  SlamState state_;
  RunLog run_;
  PipelineStats stats_;
  std::uint64_t associations_{0};
  std::unordered_map<LandmarkId, LandmarkId> sighted_;
  std::vector<LandmarkCandidate> tracker_;
};

}  // namespace

PipelineResult run_pipeline(const SensorLog& log, const PipelineConfig& cfg)
{
  cfg.validate();
  return Runner(cfg).run(log);
}

std::vector<BatchRun> run_batch(const ScenarioConfig& scenario, Estimator estimator, std::size_t runs,
                                unsigned threads, const PipelineConfig* overrides)
{
  std::vector<BatchRun> results(runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  const auto worker = [&] {
    for (std::size_t i = next++; i < runs && !failed; i = next++)
    {
      try
      {
        ScenarioConfig sc = scenario;
        sc.seed = scenario.seed + i;
        const Simulation sim = simulate(sc);
        PipelineConfig pc = pipeline_for(sc, sim.truth, estimator);
        if (overrides != nullptr)
        {
          const auto map = pc.map;
          pc = *overrides;
          pc.estimator = estimator;
          pc.initial_pose = sim.truth.poses.front().pose;
          if (!pc.map)
          {
            pc.map = map;
          }
        }
        pc.record_landmark_traces = false;
        auto result = run_pipeline(sim.log, pc);
        attach_truth(result.run, sim.truth.poses);
        results[i] = {sc.seed, rmse(result.run), consistency(result.run), result.final_state.landmark_count(),
                      result.run.steps.back().associations};
      }
      catch (...)
      {
        if (!failed.exchange(true))
        {
          failure = std::current_exception();
        }
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n_threads; ++k)
  {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool)
  {
    th.join();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
  return results;
}

}  // namespace ekfslam
