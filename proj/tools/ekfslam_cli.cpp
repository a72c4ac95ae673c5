// ekfslam: simulate scenarios, replay logs through an estimator, compare runs.
//
//   ekfslam simulate [--scenario FILE | --preset default|dynamic] [--seed N] --out DIR
//   ekfslam run --log FILE --estimator E --out DIR [--truth FILE] [--map FILE] [tuning flags]
//   ekfslam run (--scenario FILE | --preset P) --runs N --estimator E --out DIR [tuning flags]
//   ekfslam compare RUN.csv... [--labels a,b,...] [--out FILE]
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ekfslam/errors.hpp"
#include "ekfslam/evaluation.hpp"
#include "ekfslam/ingest.hpp"
#include "ekfslam/pipeline.hpp"
#include "ekfslam/simulator.hpp"

namespace fs = std::filesystem;
using namespace ekfslam;

namespace
{

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct TuningFlags
{
  std::string estimator{"ekf_slam"};
  std::string obs_mode{"both"};
  std::string prefilter{"on"};
  std::string quality{"on"};
  double d_max{0.3};
  double gap{0.25};
  std::size_t size_min{3};
  std::size_t size_max{8};
  int set_thresh{10};
  int clear_thresh{-20};
  double bias_window{5.0};
  double sigma_v{0.5};
  double sigma_omega_deg{2.0};
  double sigma_range{0.2};
  double sigma_bearing_deg{2.0};
  std::optional<double> offset_deg;
  std::string map_path;
};

void add_tuning_flags(CLI::App& cmd, TuningFlags& f)
{
  const std::map<std::string, std::string> estimators{
      {"dead_reckoning", "dead_reckoning"}, {"ekf_localisation", "ekf_localisation"}, {"ekf_slam", "ekf_slam"}};
  cmd.add_option("--estimator", f.estimator, "dead_reckoning | ekf_localisation | ekf_slam")
      ->check(CLI::IsMember({"dead_reckoning", "ekf_localisation", "ekf_slam"}));
  cmd.add_option("--obs-mode", f.obs_mode, "observation components used by updates")
      ->check(CLI::IsMember({"range", "bearing", "both"}));
  cmd.add_option("--prefilter", f.prefilter, "drop landmarks closer than 2 m to another")
      ->check(CLI::IsMember({"on", "off"}));
  cmd.add_option("--quality", f.quality, "landmark quality tracking")->check(CLI::IsMember({"on", "off"}));
  cmd.add_option("--d-max", f.d_max, "association gate [m]");
  cmd.add_option("--gap", f.gap, "segmentation range gap [m]");
  cmd.add_option("--size-min", f.size_min, "exclusive lower bound on landmark point count");
  cmd.add_option("--size-max", f.size_max, "exclusive upper bound on landmark point count");
  cmd.add_option("--set-thresh", f.set_thresh, "quality above which a candidate is registered");
  cmd.add_option("--clear-thresh", f.clear_thresh, "quality below which a candidate is dropped");
  cmd.add_option("--bias-window", f.bias_window, "stationary window for bias estimation [s]");
  cmd.add_option("--sigma-v", f.sigma_v, "speed noise [m/s]");
  cmd.add_option("--sigma-omega-deg", f.sigma_omega_deg, "yaw-rate noise [deg/s]");
  cmd.add_option("--sigma-range", f.sigma_range, "range noise [m]");
  cmd.add_option("--sigma-bearing-deg", f.sigma_bearing_deg, "bearing noise [deg]");
  cmd.add_option("--sensor-offset-deg", f.offset_deg,
                 "bearing of the forward axis (default 90 for scan logs, 0 otherwise)");
  cmd.add_option("--map", f.map_path, "known map file for ekf_localisation");
}

Estimator parse_estimator(const std::string& s)
{
  if (s == "dead_reckoning") return Estimator::DeadReckoning;
  if (s == "ekf_localisation") return Estimator::EkfLocalisation;
  return Estimator::EkfSlam;
}

ObservationMode parse_mode(const std::string& s)
{
  if (s == "range") return ObservationMode::RangeOnly;
  if (s == "bearing") return ObservationMode::BearingOnly;
  return ObservationMode::RangeBearing;
}

PipelineConfig build_pipeline(const TuningFlags& f, bool scan_log)
{
  PipelineConfig cfg;
  cfg.estimator = parse_estimator(f.estimator);
  cfg.mode = parse_mode(f.obs_mode);
  cfg.motion = {f.sigma_v, deg2rad(f.sigma_omega_deg)};
  cfg.sensor = {f.sigma_range, deg2rad(f.sigma_bearing_deg), f.offset_deg ? deg2rad(*f.offset_deg) : (scan_log ? kPi / 2.0 : 0.0)};
  cfg.perception.prefilter = f.prefilter == "on";
  cfg.perception.quality = f.quality == "on";
  cfg.perception.gap = f.gap;
  cfg.perception.size = {f.size_min, f.size_max};
  cfg.perception.quality_params.d_max = f.d_max;
  cfg.perception.quality_params.set_threshold = f.set_thresh;
  cfg.perception.quality_params.clear_threshold = f.clear_thresh;
  cfg.bias_window = f.bias_window;
  if (!f.map_path.empty())
  {
    cfg.map = read_map_file(f.map_path);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path, const std::string& preset)
{
  if (!path.empty())
  {
    return read_scenario_file(path);
  }
  if (preset == "dynamic")
  {
    return dynamic_scenario();
  }
  return default_scenario();
}

void ensure_dir(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
  {
    throw Error("cannot create directory " + dir + ": " + ec.message());
  }
}

std::ofstream open_out(const fs::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  return out;
}

int cmd_simulate(const std::string& scenario_path, const std::string& preset, std::optional<std::uint64_t> seed,
                 const std::string& out_dir)
{
  ScenarioConfig sc = load_scenario(scenario_path, preset);
  if (seed)
  {
    sc.seed = *seed;
  }
  const Simulation sim = simulate(sc);
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  write_log_file(sim.log, (dir / "log.txt").string());
  write_truth_file(sim.truth, (dir / "truth.txt").string());
  auto map_out = open_out(dir / "map.txt");
  write_map(truth_map(sim.truth), map_out);

  std::cout << "seed " << sc.seed << '\n'
            << "log " << (dir / "log.txt").string() << '\n'
            << "truth " << (dir / "truth.txt").string() << '\n'
            << "map " << (dir / "map.txt").string() << '\n';
  return 0;
}

int cmd_run_log(const std::string& log_path, const std::string& truth_path, const TuningFlags& flags,
                const std::string& out_dir)
{
  const SensorLog log = read_log_file(log_path);
  const bool scan_log = std::any_of(log.records.begin(), log.records.end(),
                                    [](const SensorRecord& r) { return r.kind() == RecordKind::Scan; });
  PipelineConfig cfg = build_pipeline(flags, scan_log);
  if (cfg.estimator == Estimator::EkfLocalisation && !cfg.map)
  {
    throw UsageError("ekf_localisation requires --map");
  }
  std::optional<std::vector<TimedPose>> truth;
  if (!truth_path.empty())
  {
    truth = read_truth_file(truth_path);
    if (!truth->empty())
    {
      cfg.initial_pose = truth->front().pose;
    }
  }

  auto result = run_pipeline(log, cfg);
  if (truth)
  {
    attach_truth(result.run, *truth);
  }

  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "run.csv");
    write_run_csv(result.run, out);
  }
  if (cfg.estimator == Estimator::EkfSlam)
  {
    auto traces = open_out(dir / "landmarks.csv");
    write_landmark_traces_csv(result.run, traces);
    auto map = open_out(dir / "map.csv");
    write_final_map_csv(result.final_state, map);
  }

  const auto& st = result.stats;
  std::cout << "steps " << result.run.steps.size() << '\n'
            << "updates " << st.updates << '\n'
            << "skipped " << st.skipped_updates << '\n'
            << "map_size " << result.final_state.landmark_count() << '\n';
  if (st.bias)
  {
    std::cout << "bias speed " << st.bias->speed_bias << " gyro_z " << st.bias->gyro_z_bias << '\n';
  }
  if (result.run.has_truth())
  {
    const auto e = rmse(result.run);
    std::cout << "rmse x " << e.x << " y " << e.y << " theta_deg " << e.theta_deg << '\n';
  }
  for (const auto& d : st.diagnostics)
  {
    std::cerr << "warning: " << d << '\n';
  }
  std::cout << "run " << (dir / "run.csv").string() << '\n';
  return 0;
}

int cmd_run_batch(const std::string& scenario_path, const std::string& preset, std::optional<std::uint64_t> seed,
                  std::size_t runs, unsigned threads, const TuningFlags& flags, const std::string& out_dir)
{
  ScenarioConfig sc = load_scenario(scenario_path, preset);
  if (seed)
  {
    sc.seed = *seed;
  }
  PipelineConfig overrides = build_pipeline(flags, sc.output == SensorOutput::Scans);
  const auto results = run_batch(sc, overrides.estimator, runs, threads, &overrides);

  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  auto out = open_out(dir / "batch.csv");
  out << "seed,rmse_x,rmse_y,rmse_theta_deg,within3sigma_x,within3sigma_y,map_size,associations\n";
  Rmse mean;
  for (const auto& r : results)
  {
    out << r.seed << ',' << r.error.x << ',' << r.error.y << ',' << r.error.theta_deg << ',' << r.within_3sigma.x
        << ',' << r.within_3sigma.y << ',' << r.final_map_size << ',' << r.associations << '\n';
    mean.x += r.error.x / static_cast<double>(runs);
    mean.y += r.error.y / static_cast<double>(runs);
    mean.theta_deg += r.error.theta_deg / static_cast<double>(runs);
  }
  std::cout << "runs " << runs << '\n'
            << "mean rmse x " << mean.x << " y " << mean.y << " theta_deg " << mean.theta_deg << '\n'
            << "batch " << (dir / "batch.csv").string() << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, std::vector<std::string> labels, const std::string& out_path)
{
  if (!labels.empty() && labels.size() != paths.size())
  {
    throw UsageError("--labels needs one label per run");
  }
  std::vector<RunLog> runs;
  for (std::size_t i = 0; i < paths.size(); ++i)
  {
    runs.push_back(read_run_file(paths[i]));
    if (labels.size() < paths.size())
    {
      const fs::path p(paths[i]);
      labels.push_back(p.has_parent_path() ? p.parent_path().filename().string() + "/" + p.filename().string()
                                           : p.filename().string());
    }
  }
  const Report report = compare(runs, labels);
  std::cout << report.to_text();
  auto out = open_out(out_path);
  out << report.to_csv();
  std::cout << "table " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"2D EKF-SLAM toolkit: simulation, log replay and evaluation"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a log, truth and map from a scenario");
  std::string sim_scenario;
  std::string sim_preset{"default"};
  std::optional<std::uint64_t> sim_seed;
  std::string sim_out;
  sim_cmd->add_option("--scenario", sim_scenario, "scenario file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--preset", sim_preset, "built-in scenario when no file is given")
      ->check(CLI::IsMember({"default", "dynamic"}));
  sim_cmd->add_option("--seed", sim_seed, "override the scenario seed");
  sim_cmd->add_option("--out", sim_out, "output directory")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "replay a log (or a seeded batch) through an estimator");
  std::string run_log;
  std::string run_truth;
  std::string run_scenario;
  std::string run_preset;
  std::optional<std::uint64_t> run_seed;
  std::size_t run_runs = 0;
  unsigned run_threads = std::max(1u, std::thread::hardware_concurrency());
  std::string run_out;
  TuningFlags flags;
  run_cmd->add_option("--log", run_log, "sensor log file")->check(CLI::ExistingFile);
  run_cmd->add_option("--truth", run_truth, "truth file for error columns")->check(CLI::ExistingFile);
  run_cmd->add_option("--scenario", run_scenario, "scenario file for --runs batches")->check(CLI::ExistingFile);
  run_cmd->add_option("--preset", run_preset, "built-in scenario for --runs batches")
      ->check(CLI::IsMember({"default", "dynamic"}));
  run_cmd->add_option("--seed", run_seed, "base seed for --runs batches");
  run_cmd->add_option("--runs", run_runs, "Monte-Carlo batch size");
  run_cmd->add_option("--threads", run_threads, "worker threads for batches");
  run_cmd->add_option("--out", run_out, "output directory")->required();
  add_tuning_flags(*run_cmd, flags);

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "tabulate RMSE and consistency of run files");
  std::vector<std::string> cmp_runs;
  std::vector<std::string> cmp_labels;
  std::string cmp_out{"comparison.csv"};
  cmp_cmd->add_option("runs", cmp_runs, "run.csv files")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--labels", cmp_labels, "comma-separated labels")->delimiter(',');
  cmp_cmd->add_option("--out", cmp_out, "table file");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try
  {
    if (sim_cmd->parsed())
    {
      return cmd_simulate(sim_scenario, sim_preset, sim_seed, sim_out);
    }
    if (run_cmd->parsed())
    {
      const bool batch = run_runs > 0;
      if (batch == !run_log.empty())
      {
        throw UsageError("run needs exactly one of --log or --runs N");
      }
      if (batch)
      {
        return cmd_run_batch(run_scenario, run_preset.empty() ? "default" : run_preset, run_seed, run_runs,
                             run_threads, flags, run_out);
      }
      return cmd_run_log(run_log, run_truth, flags, run_out);
    }
    return cmd_compare(cmp_runs, cmp_labels, cmp_out);
  }
  catch (const UsageError& e)
  {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  catch (const ConfigError& e)
  {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
