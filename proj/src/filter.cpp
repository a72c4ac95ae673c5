#include "ekfslam/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "ekfslam/errors.hpp"

namespace ekfslam
{

namespace
{

std::string describe(LandmarkId id)
{
  return "landmark " + std::to_string(id.value);
}

void require_valid_observation(const Observation& z)
{
  if (!std::isfinite(z.range) || z.range <= 0.0 || !std::isfinite(z.bearing))
  {
    throw DomainError("observation must have finite positive range and finite bearing");
  }
}

/// Indices into [range, bearing] consumed by a mode.
std::vector<Eigen::Index> observed_rows(ObservationMode mode)
{
  switch (mode)
  {
    case ObservationMode::RangeOnly:
      return {0};
    case ObservationMode::BearingOnly:
      return {1};
    case ObservationMode::RangeBearing:
      break;
  }
  return {0, 1};
}

/// Inverse of a 1x1 or 2x2 symmetric innovation covariance, or nullopt when
/// it is numerically singular.
std::optional<Eigen::MatrixXd> invert_innovation(const Eigen::MatrixXd& s, std::string& diagnostic)
{
  if (s.rows() == 1)
  {
    if (!(s(0, 0) > kSingularDeterminant))
    {
      diagnostic = "innovation variance " + std::to_string(s(0, 0)) + " is not positive";
      return std::nullopt;
    }
    return Eigen::MatrixXd::Constant(1, 1, 1.0 / s(0, 0));
  }

  const double a = s(0, 0);
  const double b = 0.5 * (s(0, 1) + s(1, 0));
  const double d = s(1, 1);
  const double det = a * d - b * b;
  // Eigenvalues of the symmetric 2x2 for the condition number.
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  const double lmax = mid + rad;
  const double lmin = mid - rad;
  if (!(det > kSingularDeterminant) || !(lmin > 0.0) || lmax / lmin > kMaxInnovationCondition)
  {
    std::ostringstream msg;
    msg << "innovation covariance singular (det=" << det << ", eig=[" << lmin << ", " << lmax << "])";
    diagnostic = msg.str();
    return std::nullopt;
  }
  Eigen::MatrixXd inv(2, 2);
  inv << d, -b, -b, a;
  return inv / det;
}

}  // namespace

/// Privileged access for the filter operations.
struct StateEditor
{
  static Eigen::VectorXd& mean(SlamState& s) { return s.mean_; }
  static Eigen::MatrixXd& cov(SlamState& s) { return s.cov_; }
  static std::vector<LandmarkId>& ids(SlamState& s) { return s.ids_; }
  static LandmarkId take_id(SlamState& s) { return LandmarkId{s.next_id_++}; }
  static Eigen::Index require_index(const SlamState& s, LandmarkId id) { return s.require_index(id); }
  static void symmetrize(SlamState& s) { s.symmetrize(); }

  /// Shared measurement update. landmark_jacobian is null for known-map
  /// updates, in which case landmark_index is ignored.
  static UpdateResult apply(SlamState& s, const Matrix23& pose_jacobian, const Eigen::Matrix2d* landmark_jacobian,
                            Eigen::Index landmark_index, const Observation& z, const Observation& expected,
                            const SensorNoiseConfig& cfg, ObservationMode mode)
  {
    const Eigen::Vector2d full_innovation(z.range - expected.range, wrap_angle(z.bearing - expected.bearing));
    const auto rows = observed_rows(mode);
    const auto m = static_cast<Eigen::Index>(rows.size());
    const Eigen::Matrix2d r_full = cfg.covariance();

    Eigen::MatrixXd hx(m, kPoseDims);
    Eigen::MatrixXd hl(m, kLandmarkDims);
    Eigen::VectorXd nu(m);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
      hx.row(i) = pose_jacobian.row(rows[i]);
      if (landmark_jacobian != nullptr)
      {
        hl.row(i) = landmark_jacobian->row(rows[i]);
      }
      nu(i) = full_innovation(rows[i]);
      r(i, i) = r_full(rows[i], rows[i]);
    }

    Eigen::MatrixXd& p = s.cov_;
    // P H^T exploiting the sparsity of H: only robot and one landmark column block.
    Eigen::MatrixXd pht = p.leftCols(kPoseDims) * hx.transpose();
    if (landmark_jacobian != nullptr)
    {
      pht.noalias() += p.middleCols(landmark_index, kLandmarkDims) * hl.transpose();
    }
    Eigen::MatrixXd innov_cov = hx * pht.topRows(kPoseDims) + r;
    if (landmark_jacobian != nullptr)
    {
      innov_cov.noalias() += hl * pht.middleRows(landmark_index, kLandmarkDims);
    }

    UpdateResult result;
    for (Eigen::Index i = 0; i < m; ++i)
    {
      result.innovation(rows[i]) = nu(i);
    }

    const auto inv = invert_innovation(innov_cov, result.diagnostic);
    if (!inv)
    {
      result.status = UpdateStatus::Singular;
      return result;
    }

    const Eigen::MatrixXd gain = pht * (*inv);
    s.mean_.noalias() += gain * nu;
    s.mean_(2) = wrap_angle(s.mean_(2));
    p.noalias() -= gain * innov_cov * gain.transpose();
    s.symmetrize();
    return result;
  }
};

SlamState::SlamState(const Pose& p0) : mean_(p0.vector()), cov_(Eigen::MatrixXd::Zero(kPoseDims, kPoseDims))
{
}

SlamState SlamState::from_parts(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::vector<LandmarkId> ids,
                                std::optional<LandmarkId> next_id)
{
  const Eigen::Index n = mean.size();
  if (n < kPoseDims || (n - kPoseDims) % kLandmarkDims != 0)
  {
    throw DomainError("state vector must have length 3 + 2N");
  }
  if (cov.rows() != n || cov.cols() != n)
  {
    throw DomainError("covariance dimension does not match state vector");
  }
  if (static_cast<Eigen::Index>(ids.size()) != (n - kPoseDims) / kLandmarkDims)
  {
    throw DomainError("landmark id count does not match state vector");
  }
  if (!mean.allFinite() || !cov.allFinite())
  {
    throw DomainError("state contains non-finite values");
  }
  // rounding-level asymmetry is smoothed below; anything larger is a caller bug
  if (n > 0 && (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
  {
    throw DomainError("covariance is not symmetric");
  }
  std::unordered_set<LandmarkId> seen;
  std::uint64_t max_id = 0;
  for (const auto id : ids)
  {
    if (!seen.insert(id).second)
    {
      throw DomainError("duplicate " + describe(id));
    }
    max_id = std::max(max_id, id.value + 1);
  }
  if (next_id && next_id->value < max_id)
  {
    throw DomainError("next id would reuse an existing landmark id");
  }

  SlamState s;
  s.mean_ = std::move(mean);
  s.mean_(2) = wrap_angle(s.mean_(2));
  s.cov_ = std::move(cov);
  s.ids_ = std::move(ids);
  s.next_id_ = next_id ? next_id->value : max_id;
  s.symmetrize();
  return s;
}

std::optional<std::size_t> SlamState::slot_of(LandmarkId id) const
{
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end())
  {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

std::optional<Eigen::Index> SlamState::index_of(LandmarkId id) const
{
  const auto slot = slot_of(id);
  if (!slot)
  {
    return std::nullopt;
  }
  return kPoseDims + kLandmarkDims * static_cast<Eigen::Index>(*slot);
}

Eigen::Index SlamState::require_index(LandmarkId id) const
{
  const auto idx = index_of(id);
  if (!idx)
  {
    throw UnknownLandmarkError("unknown " + describe(id));
  }
  return *idx;
}

LandmarkPosition SlamState::landmark(LandmarkId id) const
{
  const auto i = require_index(id);
  return {mean_(i), mean_(i + 1)};
}

Eigen::Matrix2d SlamState::landmark_covariance(LandmarkId id) const
{
  const auto i = require_index(id);
  return cov_.block<2, 2>(i, i);
}

double SlamState::asymmetry() const
{
  return (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
}

double SlamState::min_eigenvalue() const
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void SlamState::symmetrize()
{
  cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
}

KnownMap::KnownMap(std::vector<std::pair<LandmarkId, LandmarkPosition>> entries) : entries_(std::move(entries))
{
  std::unordered_set<LandmarkId> seen;
  for (const auto& [id, pos] : entries_)
  {
    if (!seen.insert(id).second)
    {
      throw ConfigError("duplicate " + describe(id) + " in known map");
    }
    if (!std::isfinite(pos.x) || !std::isfinite(pos.y))
    {
      throw ConfigError(describe(id) + " has non-finite coordinates");
    }
  }
}

std::optional<LandmarkPosition> KnownMap::find(LandmarkId id) const
{
  const auto it = std::find_if(entries_.begin(), entries_.end(), [id](const auto& e) { return e.first == id; });
  if (it == entries_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

SlamState init_state(const Pose& p0)
{
  return SlamState(p0);
}

void predict(SlamState& s, const ControlInput& u, double dt, const MotionNoiseConfig& cfg)
{
  const Pose pose = s.pose();
  const auto jac = motion_jacobians(pose, u, dt);
  const Pose next = motion_step(pose, u, dt);

  auto& mean = StateEditor::mean(s);
  auto& p = StateEditor::cov(s);
  mean.head<3>() = next.vector();

  const Eigen::Index n = p.rows();
  const Eigen::Matrix3d prr = p.topLeftCorner<3, 3>();
  p.topLeftCorner<3, 3>() = jac.wrt_pose * prr * jac.wrt_pose.transpose() + process_noise(jac.wrt_control, cfg);
  if (n > kPoseDims)
  {
    const Eigen::MatrixXd prm = jac.wrt_pose * p.topRightCorner(kPoseDims, n - kPoseDims);
    p.topRightCorner(kPoseDims, n - kPoseDims) = prm;
    p.bottomLeftCorner(n - kPoseDims, kPoseDims) = prm.transpose();
  }
  const Eigen::Matrix3d robot = p.topLeftCorner<3, 3>();
  p.topLeftCorner<3, 3>() = 0.5 * (robot + robot.transpose());
}

UpdateResult update(SlamState& s, LandmarkId id, const Observation& z, const SensorNoiseConfig& cfg,
                    ObservationMode mode)
{
  require_valid_observation(z);
  const auto idx = StateEditor::require_index(s, id);
  const Pose pose = s.pose();
  const LandmarkPosition lm{s.mean()(idx), s.mean()(idx + 1)};
  const Observation expected = observe(pose, lm, cfg);
  const auto jac = observation_jacobians(pose, lm);
  return StateEditor::apply(s, jac.wrt_pose, &jac.wrt_landmark, idx, z, expected, cfg, mode);
}

UpdateResult update_known_map(SlamState& s, const KnownMap& map, LandmarkId id, const Observation& z,
                              const SensorNoiseConfig& cfg, ObservationMode mode)
{
  require_valid_observation(z);
  const auto lm = map.find(id);
  if (!lm)
  {
    throw UnknownLandmarkError(describe(id) + " not in known map");
  }
  const Pose pose = s.pose();
  const Observation expected = observe(pose, *lm, cfg);
  const auto jac = observation_jacobians(pose, *lm);
  return StateEditor::apply(s, jac.wrt_pose, nullptr, 0, z, expected, cfg, mode);
}

LandmarkId init_landmark(SlamState& s, const Observation& z, const SensorNoiseConfig& cfg)
{
  require_valid_observation(z);
  const Pose pose = s.pose();
  const LandmarkPosition lm = inverse_observe(pose, z, cfg);
  const auto jac = inverse_observation_jacobians(pose, z, cfg);

  auto& mean = StateEditor::mean(s);
  auto& p = StateEditor::cov(s);
  const Eigen::Index n = p.rows();

  // Cross-covariance with the whole prior state and the new marginal block.
  const Eigen::MatrixXd cross = jac.wrt_pose * p.topRows(kPoseDims);
  const Eigen::Matrix2d block = jac.wrt_pose * p.topLeftCorner<3, 3>() * jac.wrt_pose.transpose() +
                                jac.wrt_observation * cfg.covariance() * jac.wrt_observation.transpose();

  mean.conservativeResize(n + kLandmarkDims);
  mean.tail<2>() = lm.vector();
  p.conservativeResize(n + kLandmarkDims, n + kLandmarkDims);
  p.bottomLeftCorner(kLandmarkDims, n) = cross;
  p.topRightCorner(n, kLandmarkDims) = cross.transpose();
  p.bottomRightCorner<2, 2>() = 0.5 * (block + block.transpose());

  const LandmarkId id = StateEditor::take_id(s);
  StateEditor::ids(s).push_back(id);
  return id;
}

void remove_landmark(SlamState& s, LandmarkId id)
{
  const Eigen::Index idx = StateEditor::require_index(s, id);
  auto& mean = StateEditor::mean(s);
  auto& p = StateEditor::cov(s);
  const Eigen::Index n = p.rows();
  const Eigen::Index tail = n - idx - kLandmarkDims;

  Eigen::VectorXd reduced_mean(n - kLandmarkDims);
  reduced_mean << mean.head(idx), mean.tail(tail);

  Eigen::MatrixXd reduced(n - kLandmarkDims, n - kLandmarkDims);
  reduced.topLeftCorner(idx, idx) = p.topLeftCorner(idx, idx);
  reduced.topRightCorner(idx, tail) = p.topRightCorner(idx, tail);
  reduced.bottomLeftCorner(tail, idx) = p.bottomLeftCorner(tail, idx);
  reduced.bottomRightCorner(tail, tail) = p.bottomRightCorner(tail, tail);

  mean = std::move(reduced_mean);
  p = std::move(reduced);
  auto& ids = StateEditor::ids(s);
  ids.erase(std::find(ids.begin(), ids.end(), id));
}

}  // namespace ekfslam
