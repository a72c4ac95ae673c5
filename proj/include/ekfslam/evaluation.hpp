#pragma once

// Per-run error metrics and multi-run comparison tables.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ekfslam/filter.hpp"
#include "ekfslam/ingest.hpp"

namespace ekfslam
{

struct RunStep
{
  double t{0.0};
  Pose estimate;
  Eigen::Vector3d variance{Eigen::Vector3d::Zero()};  ///< diagonal of the robot covariance
  std::size_t landmark_count{0};
  std::uint64_t associations{0};  ///< cumulative association work
  std::optional<Pose> truth;
};

struct LandmarkTrace
{
  double t{0.0};
  LandmarkId id;
  double trace{0.0};
};

struct RunLog
{
  std::vector<RunStep> steps;
  std::vector<LandmarkTrace> landmark_traces;

  /// Throws DomainError unless timestamps strictly increase.
  void validate() const;
  bool has_truth() const;
};

/// Fills RunStep::truth from poses whose timestamps match within 1e-9 s.
void attach_truth(RunLog& run, std::span<const TimedPose> truth);

struct Rmse
{
  double x{0.0};          ///< m
  double y{0.0};          ///< m
  double theta_deg{0.0};  ///< deg, from wrapped heading differences
};

/// Throws DomainError when any step lacks truth or the run is empty.
Rmse rmse(const RunLog& run);

/// Fraction of steps whose error lies within 3 sigma, per axis.
struct Consistency
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};
};

Consistency consistency(const RunLog& run);

struct ReportRow
{
  std::string label;
  Rmse error;
  Consistency within_3sigma;
  std::size_t final_map_size{0};
  std::uint64_t associations{0};

  friend bool operator==(const ReportRow& a, const ReportRow& b)
  {
    return a.label == b.label && a.error.x == b.error.x && a.error.y == b.error.y &&
           a.error.theta_deg == b.error.theta_deg && a.within_3sigma.x == b.within_3sigma.x &&
           a.within_3sigma.y == b.within_3sigma.y && a.within_3sigma.theta == b.within_3sigma.theta &&
           a.final_map_size == b.final_map_size && a.associations == b.associations;
  }
};

struct Report
{
  std::vector<ReportRow> rows;

  std::string to_text() const;
  std::string to_csv() const;
};

/// Rows in the order given. Runs must share timestamps and carry truth;
/// otherwise throws AlignmentError.
Report compare(std::span<const RunLog> runs, std::span<const std::string> labels);

// Run CSV: t,x,y,theta,var_x,var_y,var_theta,landmarks,associations,true_x,true_y,true_theta
// (truth columns empty when unknown). Landmark traces CSV: t,id,trace.
void write_run_csv(const RunLog& run, std::ostream& out);
void write_landmark_traces_csv(const RunLog& run, std::ostream& out);
RunLog parse_run_csv(std::istream& in, std::string_view source = "<run>");
RunLog read_run_file(const std::string& path);

/// Final SLAM map CSV: id,x,y,cxx,cxy,cyy.
void write_final_map_csv(const SlamState& state, std::ostream& out);

}  // namespace ekfslam
