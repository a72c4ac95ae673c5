#include "ekfslam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "ekfslam/errors.hpp"
#include "text_util.hpp"

namespace ekfslam
{

namespace
{

constexpr double kTimeTolerance = 1e-9;

constexpr std::string_view kRunHeader =
    "t,x,y,theta,var_x,var_y,var_theta,landmarks,associations,true_x,true_y,true_theta";

void require_truth(const RunLog& run)
{
  if (run.steps.empty())
  {
    throw DomainError("run is empty");
  }
  for (const auto& s : run.steps)
  {
    if (!s.truth)
    {
      throw DomainError("run lacks truth at t=" + text::format_number(s.t));
    }
  }
}

}  // namespace

void RunLog::validate() const
{
  for (std::size_t i = 1; i < steps.size(); ++i)
  {
    if (!(steps[i].t > steps[i - 1].t))
    {
      throw DomainError("run timestamps must be strictly increasing");
    }
  }
}

bool RunLog::has_truth() const
{
  return !steps.empty() && std::all_of(steps.begin(), steps.end(), [](const RunStep& s) { return s.truth; });
}

void attach_truth(RunLog& run, std::span<const TimedPose> truth)
{
  std::size_t j = 0;
  for (auto& step : run.steps)
  {
    while (j < truth.size() && truth[j].t < step.t - kTimeTolerance)
    {
      ++j;
    }
    if (j < truth.size() && std::abs(truth[j].t - step.t) <= kTimeTolerance)
    {
      step.truth = truth[j].pose;
    }
    else
    {
      step.truth.reset();
    }
  }
}

Rmse rmse(const RunLog& run)
{
  require_truth(run);
  double sx = 0.0;
  double sy = 0.0;
  double st = 0.0;
  for (const auto& s : run.steps)
  {
    const double ex = s.estimate.x - s.truth->x;
    const double ey = s.estimate.y - s.truth->y;
    const double et = wrap_angle(s.estimate.theta - s.truth->theta);
    sx += ex * ex;
    sy += ey * ey;
    st += et * et;
  }
  const double n = static_cast<double>(run.steps.size());
  return {std::sqrt(sx / n), std::sqrt(sy / n), rad2deg(std::sqrt(st / n))};
}

Consistency consistency(const RunLog& run)
{
  require_truth(run);
  std::size_t cx = 0;
  std::size_t cy = 0;
  std::size_t ct = 0;
  for (const auto& s : run.steps)
  {
    const auto within = [](double err, double var) { return std::abs(err) <= 3.0 * std::sqrt(std::max(var, 0.0)); };
    cx += within(s.estimate.x - s.truth->x, s.variance(0));
    cy += within(s.estimate.y - s.truth->y, s.variance(1));
    ct += within(wrap_angle(s.estimate.theta - s.truth->theta), s.variance(2));
  }
  const double n = static_cast<double>(run.steps.size());
  return {static_cast<double>(cx) / n, static_cast<double>(cy) / n, static_cast<double>(ct) / n};
}

Report compare(std::span<const RunLog> runs, std::span<const std::string> labels)
{
  if (labels.size() != runs.size())
  {
    throw DomainError("one label per run is required");
  }
  Report report;
  if (runs.empty())
  {
    return report;
  }
  const auto& ref = runs.front();
  for (std::size_t r = 0; r < runs.size(); ++r)
  {
    const auto& run = runs[r];
    if (!run.has_truth())
    {
      throw AlignmentError("run '" + labels[r] + "' has no truth for every step");
    }
    if (run.steps.size() != ref.steps.size())
    {
      throw AlignmentError("run '" + labels[r] + "' has " + std::to_string(run.steps.size()) + " steps, expected " +
                           std::to_string(ref.steps.size()));
    }
    for (std::size_t i = 0; i < run.steps.size(); ++i)
    {
      if (std::abs(run.steps[i].t - ref.steps[i].t) > kTimeTolerance)
      {
        throw AlignmentError("run '" + labels[r] + "' timestamp mismatch at step " + std::to_string(i));
      }
    }
  }
  for (std::size_t r = 0; r < runs.size(); ++r)
  {
    const auto& run = runs[r];
    report.rows.push_back({labels[r], rmse(run), consistency(run), run.steps.back().landmark_count,
                           run.steps.back().associations});
  }
  return report;
}

std::string Report::to_text() const
{
  std::size_t label_width = 5;
  for (const auto& row : rows)
  {
    label_width = std::max(label_width, row.label.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "label" << std::right << std::setw(12) << "rmse_x"
      << std::setw(12) << "rmse_y" << std::setw(14) << "rmse_th_deg" << std::setw(10) << "3sig_x" << std::setw(10)
      << "3sig_y" << std::setw(10) << "map" << std::setw(14) << "assoc" << '\n';
  out << std::fixed;
  for (const auto& row : rows)
  {
    out << std::left << std::setw(static_cast<int>(label_width)) << row.label << std::right << std::setprecision(4)
        << std::setw(12) << row.error.x << std::setw(12) << row.error.y << std::setw(14) << row.error.theta_deg
        << std::setprecision(3) << std::setw(10) << row.within_3sigma.x << std::setw(10) << row.within_3sigma.y
        << std::setw(10) << row.final_map_size << std::setw(14) << row.associations << '\n';
  }
  return out.str();
}

std::string Report::to_csv() const
{
  std::ostringstream out;
  out << "label,rmse_x,rmse_y,rmse_theta_deg,within3sigma_x,within3sigma_y,within3sigma_theta,map_size,associations\n";
  for (const auto& row : rows)
  {
    out << row.label;
    for (const double v : {row.error.x, row.error.y, row.error.theta_deg, row.within_3sigma.x, row.within_3sigma.y,
                           row.within_3sigma.theta})
    {
      out << ',';
      text::put_number(out, v);
    }
    out << ',' << row.final_map_size << ',' << row.associations << '\n';
  }
  return out.str();
}

void write_run_csv(const RunLog& run, std::ostream& out)
{
  out << kRunHeader << '\n';
  for (const auto& s : run.steps)
  {
    text::put_number(out, s.t);
    for (const double v : {s.estimate.x, s.estimate.y, s.estimate.theta, s.variance(0), s.variance(1), s.variance(2)})
    {
      out << ',';
      text::put_number(out, v);
    }
    out << ',' << s.landmark_count << ',' << s.associations;
    if (s.truth)
    {
      for (const double v : {s.truth->x, s.truth->y, s.truth->theta})
      {
        out << ',';
        text::put_number(out, v);
      }
    }
    else
    {
      out << ",,,";
    }
    out << '\n';
  }
}

void write_landmark_traces_csv(const RunLog& run, std::ostream& out)
{
  out << "t,id,trace\n";
  for (const auto& lt : run.landmark_traces)
  {
    text::put_number(out, lt.t);
    out << ',' << lt.id.value << ',';
    text::put_number(out, lt.trace);
    out << '\n';
  }
}

RunLog parse_run_csv(std::istream& in, std::string_view source)
{
  RunLog run;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) { throw ParseError(std::string(source), line_no, what); };

  if (!std::getline(in, line))
  {
    fail("empty run file");
  }
  ++line_no;
  if (text::trim(line) != kRunHeader)
  {
    fail("unexpected run header");
  }
  while (std::getline(in, line))
  {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty())
    {
      continue;
    }
    const auto f = text::split_fields(trimmed, ',');
    if (f.size() != 12)
    {
      fail("expected 12 columns, got " + std::to_string(f.size()));
    }
    const auto num = [&](std::size_t i) {
      const auto v = text::parse_number(f[i]);
      if (!v)
      {
        fail("invalid number in column " + std::to_string(i + 1));
      }
      return *v;
    };
    const auto count = [&](std::size_t i) {
      const auto v = text::parse_integer<std::uint64_t>(f[i]);
      if (!v)
      {
        fail("invalid integer in column " + std::to_string(i + 1));
      }
      return *v;
    };
    RunStep s;
    s.t = num(0);
    s.estimate = Pose(num(1), num(2), num(3));
    s.variance = {num(4), num(5), num(6)};
    s.landmark_count = count(7);
    s.associations = count(8);
    const bool truth_empty = f[9].empty() && f[10].empty() && f[11].empty();
    if (!truth_empty)
    {
      s.truth = Pose(num(9), num(10), num(11));
    }
    if (!run.steps.empty() && !(s.t > run.steps.back().t))
    {
      fail("timestamps must be strictly increasing");
    }
    run.steps.push_back(s);
  }
  return run;
}

RunLog read_run_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ParseError(path, 0, "cannot open file");
  }
  return parse_run_csv(in, path);
}

void write_final_map_csv(const SlamState& state, std::ostream& out)
{
  out << "id,x,y,cxx,cxy,cyy\n";
  for (const auto id : state.landmark_ids())
  {
    const auto pos = state.landmark(id);
    const auto cov = state.landmark_covariance(id);
    out << id.value;
    for (const double v : {pos.x, pos.y, cov(0, 0), cov(0, 1), cov(1, 1)})
    {
      out << ',';
      text::put_number(out, v);
    }
    out << '\n';
  }
}

}  // namespace ekfslam
