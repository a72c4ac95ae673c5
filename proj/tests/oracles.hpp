#pragma once

// Independent reference implementations for the test suite. Everything here
// is written against the textbook EKF equations with full dense matrices and
// shares no code with the library beyond the plain data types.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ekfslam/filter.hpp"
#include "ekfslam/models.hpp"

namespace oracle
{

inline double wrap(double a)
{
  while (a > M_PI)
  {
    a -= 2.0 * M_PI;
  }
  while (a <= -M_PI)
  {
    a += 2.0 * M_PI;
  }
  return a;
}

// Rows of a range/bearing measurement kept by each mode.
inline std::vector<int> mode_rows(ekfslam::ObservationMode mode)
{
  switch (mode)
  {
    case ekfslam::ObservationMode::RangeOnly:
      return {0};
    case ekfslam::ObservationMode::BearingOnly:
      return {1};
    default:
      return {0, 1};
  }
}

struct Dense
{
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
};

// P <- F P F^T + G Q G^T with F, G spanning the whole state.
inline Dense predict(const Dense& in, double v, double w, double dt, double sv, double sw)
{
  const Eigen::Index n = in.x.size();
  const double th = in.x(2);
  Dense out = in;
  out.x(0) += v * dt * std::cos(th);
  out.x(1) += v * dt * std::sin(th);
  out.x(2) = wrap(th + w * dt);

  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
  F(0, 2) = -v * dt * std::sin(th);
  F(1, 2) = v * dt * std::cos(th);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, 2);
  G(0, 0) = dt * std::cos(th);
  G(1, 0) = dt * std::sin(th);
  G(2, 1) = dt;
  Eigen::Matrix2d Q = Eigen::Vector2d(sv * sv, sw * sw).asDiagonal();
  out.P = F * in.P * F.transpose() + G * Q * G.transpose();
  return out;
}

// Expected (range, bearing) and its 2 x n Jacobian for landmark position
// (lx, ly). When landmark_col < 0 the landmark is a constant.
inline std::pair<Eigen::Vector2d, Eigen::MatrixXd> measure(const Eigen::VectorXd& x, double lx, double ly,
                                                           Eigen::Index landmark_col, double offset)
{
  const double dx = lx - x(0);
  const double dy = ly - x(1);
  const double q = dx * dx + dy * dy;
  const double r = std::sqrt(q);
  Eigen::Vector2d h(r, wrap(std::atan2(dy, dx) - x(2) + offset));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, x.size());
  H(0, 0) = -dx / r;
  H(0, 1) = -dy / r;
  H(1, 0) = dy / q;
  H(1, 1) = -dx / q;
  H(1, 2) = -1.0;
  if (landmark_col >= 0)
  {
    H(0, landmark_col) = dx / r;
    H(0, landmark_col + 1) = dy / r;
    H(1, landmark_col) = -dy / q;
    H(1, landmark_col + 1) = dx / q;
  }
  return {h, H};
}

// innovation, Z = H P H^T + R, K = P H^T Z^-1, x += K nu, P -= K Z K^T.
inline Dense update(const Dense& in, double lx, double ly, Eigen::Index landmark_col, double range, double bearing,
                    double sr, double sb, double offset, ekfslam::ObservationMode mode)
{
  const auto [h, H_full] = measure(in.x, lx, ly, landmark_col, offset);
  const auto rows = mode_rows(mode);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Vector2d z(range, bearing);
  const Eigen::Vector2d sig2(sr * sr, sb * sb);

  Eigen::MatrixXd H(m, in.x.size());
  Eigen::VectorXd nu(m);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
  {
    const int row = rows[static_cast<std::size_t>(k)];
    H.row(k) = H_full.row(row);
    nu(k) = row == 1 ? wrap(z(1) - h(1)) : z(0) - h(0);
    R(k, k) = sig2(row);
  }
  const Eigen::MatrixXd Z = H * in.P * H.transpose() + R;
  const Eigen::MatrixXd K = in.P * H.transpose() * Z.inverse();
  Dense out;
  out.x = in.x + K * nu;
  out.x(2) = wrap(out.x(2));
  out.P = in.P - K * Z * K.transpose();
  return out;
}

// Augmentation through the full Jacobian of g(x, z) = [x; landmark(x, z)]:
// P' = Y diag(P, R) Y^T.
inline Dense augment(const Dense& in, double range, double bearing, double sr, double sb, double offset)
{
  const Eigen::Index n = in.x.size();
  const double phi = bearing - offset + in.x(2);
  const double c = std::cos(phi);
  const double s = std::sin(phi);

  Dense out;
  out.x.resize(n + 2);
  out.x.head(n) = in.x;
  out.x(n) = in.x(0) + range * c;
  out.x(n + 1) = in.x(1) + range * s;

  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n + 2, n + 2);
  Y.topLeftCorner(n, n).setIdentity();
  Y(n, 0) = 1.0;
  Y(n, 2) = -range * s;
  Y(n + 1, 1) = 1.0;
  Y(n + 1, 2) = range * c;
  Y(n, n) = c;
  Y(n, n + 1) = -range * s;
  Y(n + 1, n) = s;
  Y(n + 1, n + 1) = range * c;

  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n + 2, n + 2);
  big.topLeftCorner(n, n) = in.P;
  big(n, n) = sr * sr;
  big(n + 1, n + 1) = sb * sb;
  out.P = Y * big * Y.transpose();
  return out;
}

// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double lo = 0.01, double hi = 1.0)
{
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    for (Eigen::Index j = 0; j < n; ++j)
    {
      A(i, j) = g(rng);
    }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    d(i) = u(rng);
  }
  const Eigen::MatrixXd P = Q * d.asDiagonal() * Q.transpose();
  return 0.5 * (P + P.transpose());
}

// Brute-force mutual nearest neighbour: i and j pair when each is the
// other's closest (lowest index on ties) and they are within d_max.
inline std::vector<std::pair<std::size_t, std::size_t>> mutual_nn(const std::vector<ekfslam::LandmarkPosition>& a,
                                                                  const std::vector<ekfslam::LandmarkPosition>& b,
                                                                  double d_max)
{
  const auto dist = [](const ekfslam::LandmarkPosition& p, const ekfslam::LandmarkPosition& q) {
    return std::hypot(p.x - q.x, p.y - q.y);
  };
  const auto argmin = [&](const ekfslam::LandmarkPosition& p, const std::vector<ekfslam::LandmarkPosition>& set) {
    std::size_t best = set.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < set.size(); ++k)
    {
      const double d = dist(p, set[k]);
      if (d < best_d)
      {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    const std::size_t j = argmin(a[i], b);
    if (j < b.size() && argmin(b[j], a) == i && dist(a[i], b[j]) <= d_max)
    {
      out.emplace_back(i, j);
    }
  }
  return out;
}

// Central finite-difference Jacobian. `angular` marks outputs that must be
// differenced through wrap().
inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x0, const std::vector<bool>& angular,
                                        double h = 1e-6)
{
  const Eigen::VectorXd f0 = f(x0);
  Eigen::MatrixXd J(f0.size(), x0.size());
  for (Eigen::Index k = 0; k < x0.size(); ++k)
  {
    Eigen::VectorXd xp = x0;
    Eigen::VectorXd xm = x0;
    xp(k) += h;
    xm(k) -= h;
    Eigen::VectorXd d = f(xp) - f(xm);
    for (Eigen::Index r = 0; r < d.size(); ++r)
    {
      if (static_cast<std::size_t>(r) < angular.size() && angular[static_cast<std::size_t>(r)])
      {
        d(r) = wrap(d(r));
      }
    }
    J.col(k) = d / (2.0 * h);
  }
  return J;
}

// Closed-form quality after k hits and m misses.
inline int quality_law(int q0, int k, int m, int up = 1, int down = 3) { return q0 + up * k - down * m; }

}  // namespace oracle
