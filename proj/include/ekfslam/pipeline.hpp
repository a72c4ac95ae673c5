#pragma once

// Replays a sensor log through one estimator and records a RunLog.
//
// Multirate handling: records are grouped by timestamp. At each new
// timestamp the state is first predicted across the elapsed interval using
// the most recent speed and gyro-z samples (zero-order hold), then every
// sighting or scan stamped at that time is applied, then newly arrived
// control samples are latched for the next interval.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ekfslam/evaluation.hpp"
#include "ekfslam/filter.hpp"
#include "ekfslam/ingest.hpp"
#include "ekfslam/perception.hpp"
#include "ekfslam/simulator.hpp"

namespace ekfslam
{

enum class Estimator
{
  DeadReckoning,
  EkfLocalisation,
  EkfSlam,
};

struct PerceptionConfig
{
  bool prefilter{true};
  bool quality{true};
  double gap{0.25};
  ExtractionParams size;
  double min_separation{2.0};
  /// quality.d_max doubles as the gate for map association.
  QualityParams quality_params;
};

struct PipelineConfig
{
  Estimator estimator{Estimator::EkfSlam};
  ObservationMode mode{ObservationMode::RangeBearing};
  MotionNoiseConfig motion;
  SensorNoiseConfig sensor;
  PerceptionConfig perception;
  bool remove_bias{true};
  double bias_window{5.0};
  Pose initial_pose;
  std::optional<KnownMap> map;
  bool record_landmark_traces{true};

  /// Throws ConfigError; localisation requires a map.
  void validate() const;
};

/// Estimator-independent defaults copied from a scenario (noise, mode,
/// start pose, and the truth map for localisation).
PipelineConfig pipeline_for(const ScenarioConfig& scenario, const GroundTruth& truth, Estimator estimator);

struct PipelineStats
{
  std::size_t updates{0};
  std::size_t skipped_updates{0};
  std::size_t landmarks_initialised{0};
  std::size_t candidates_promoted{0};
  std::size_t candidates_cleared{0};
  std::optional<BiasEstimate> bias;
  /// First few skip reasons, for reporting.
  std::vector<std::string> diagnostics;
};

struct PipelineResult
{
  RunLog run;
  SlamState final_state;
  PipelineStats stats;
};

PipelineResult run_pipeline(const SensorLog& log, const PipelineConfig& cfg);

struct BatchRun
{
  std::uint64_t seed{0};
  Rmse error;
  Consistency within_3sigma;
  std::size_t final_map_size{0};
  std::uint64_t associations{0};
};

/// Simulates and runs `runs` independent seeds (scenario.seed + i) on up to
/// `threads` workers. Results are ordered by seed.
std::vector<BatchRun> run_batch(const ScenarioConfig& scenario, Estimator estimator, std::size_t runs,
                                unsigned threads, const PipelineConfig* overrides = nullptr);

}  // namespace ekfslam
