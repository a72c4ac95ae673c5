#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "ekfslam/errors.hpp"
#include "ekfslam/pipeline.hpp"

using namespace ekfslam;

namespace
{

ScenarioConfig short_default(double duration = 30.0)
{
  auto cfg = default_scenario();
  cfg.duration = duration;
  return cfg;
}

PipelineResult run(const ScenarioConfig& scenario, Estimator e, Simulation* out = nullptr)
{
  const auto sim = simulate(scenario);
  auto result = run_pipeline(sim.log, pipeline_for(scenario, sim.truth, e));
  attach_truth(result.run, sim.truth.poses);
  if (out != nullptr)
  {
    *out = sim;
  }
  return result;
}

}  // namespace

TEST(Pipeline, DeadReckoningOnNoiselessLogFollowsTruth)
{
  auto cfg = short_default();
  cfg.motion = {0.0, 0.0};
  const auto r = run(cfg, Estimator::DeadReckoning);
  ASSERT_TRUE(r.run.has_truth());
  const auto e = rmse(r.run);
  EXPECT_LT(e.x, 1e-9);
  EXPECT_LT(e.y, 1e-9);
  EXPECT_LT(e.theta_deg, 1e-9);
}

TEST(Pipeline, DeadReckoningIgnoresObservations)
{
  const auto r = run(short_default(), Estimator::DeadReckoning);
  EXPECT_EQ(r.stats.updates, 0u);
  EXPECT_EQ(r.final_state.landmark_count(), 0u);
}

TEST(Pipeline, SlamBuildsMapOfSeenLandmarks)
{
  Simulation sim;
  const auto r = run(short_default(), Estimator::EkfSlam, &sim);
  std::set<std::size_t> seen;
  for (const auto& v : sim.truth.visible)
  {
    seen.insert(v.begin(), v.end());
  }
  EXPECT_EQ(r.final_state.landmark_count(), seen.size());
  EXPECT_GT(r.stats.updates, 0u);
  EXPECT_NO_THROW(r.run.validate());
}

TEST(Pipeline, FiltersBeatDeadReckoning)
{
  const auto cfg = short_default(120.0);
  const auto dr = rmse(run(cfg, Estimator::DeadReckoning).run);
  const auto loc = rmse(run(cfg, Estimator::EkfLocalisation).run);
  const auto slam = rmse(run(cfg, Estimator::EkfSlam).run);
  EXPECT_LT(std::hypot(loc.x, loc.y), std::hypot(dr.x, dr.y));
  EXPECT_LT(std::hypot(slam.x, slam.y), std::hypot(dr.x, dr.y));
}

TEST(Pipeline, RobotVarianceIsReported)
{
  const auto r = run(short_default(10.0), Estimator::EkfLocalisation);
  for (const auto& s : r.run.steps)
  {
    EXPECT_GE(s.variance.minCoeff(), 0.0);
  }
  EXPECT_GT(r.run.steps.back().variance.sum(), 0.0);
}

TEST(Pipeline, LocalisationWithoutMapIsConfigError)
{
  const auto sim = simulate(short_default(5.0));
  auto cfg = pipeline_for(short_default(5.0), sim.truth, Estimator::EkfLocalisation);
  cfg.map.reset();
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(run_pipeline(sim.log, cfg), ConfigError);
}

TEST(Pipeline, EmptyLogGivesEmptyRun)
{
  PipelineConfig cfg;
  const auto r = run_pipeline(SensorLog{}, cfg);
  EXPECT_TRUE(r.run.steps.empty());
}

TEST(Pipeline, DynamicSceneFiltersShrinkMap)
{
  auto scenario = dynamic_scenario();
  scenario.duration = 60.0;
  const auto sim = simulate(scenario);
  auto on = pipeline_for(scenario, sim.truth, Estimator::EkfSlam);
  auto off = on;
  off.perception.prefilter = false;
  off.perception.quality = false;
  const auto filtered = run_pipeline(sim.log, on);
  const auto raw = run_pipeline(sim.log, off);
  EXPECT_GT(raw.final_state.landmark_count(), filtered.final_state.landmark_count());
  EXPECT_LE(filtered.final_state.landmark_count(), sim.truth.landmarks.size());
  EXPECT_GT(raw.run.steps.back().associations, filtered.run.steps.back().associations);
}

TEST(Pipeline, LandmarkTracesNeverGrow)
{
  const auto r = run(short_default(60.0), Estimator::EkfSlam);
  std::map<std::uint64_t, double> last;
  for (const auto& lt : r.run.landmark_traces)
  {
    const auto it = last.find(lt.id.value);
    if (it != last.end())
    {
      EXPECT_LE(lt.trace, it->second + 1e-12);
    }
    last[lt.id.value] = lt.trace;
  }
  EXPECT_FALSE(last.empty());
}

TEST(Batch, DeterministicAndOrderedBySeed)
{
  const auto cfg = short_default(20.0);
  const auto a = run_batch(cfg, Estimator::EkfSlam, 4, 1);
  const auto b = run_batch(cfg, Estimator::EkfSlam, 4, 3);
  ASSERT_EQ(a.size(), 4u);
  ASSERT_EQ(b.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    EXPECT_EQ(a[i].seed, cfg.seed + i);
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].error.x, b[i].error.x);
    EXPECT_EQ(a[i].error.theta_deg, b[i].error.theta_deg);
    EXPECT_EQ(a[i].final_map_size, b[i].final_map_size);
  }
  EXPECT_NE(a[0].error.x, a[1].error.x);
}

TEST(Batch, ZeroRunsIsEmpty)
{
  EXPECT_TRUE(run_batch(short_default(5.0), Estimator::DeadReckoning, 0, 2).empty());
}
