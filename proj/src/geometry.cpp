#include "ambipose/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ambipose/errors.hpp"

namespace ambipose {

namespace {

constexpr double kRotationTolerance = 1e-6;
constexpr double kRecoveryEpsilon = 1e-12;

}  // namespace

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw ValidationError("rotation has non-finite entries");
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kRotationTolerance) {
    throw ValidationError("rotation is not orthonormal (max |R^T R - I| = " +
                          std::to_string(ortho) + ")");
  }
  if (std::abs(m.determinant() - 1.0) > kRotationTolerance) {
    throw ValidationError("rotation determinant is not +1");
  }
}

Rotation Rotation::about_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return Rotation(m, Unchecked{});
}

Rotation Rotation::about_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return Rotation(m, Unchecked{});
}

Rotation Rotation::about_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return Rotation(m, Unchecked{});
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) {
    throw ValidationError("quaternion must be finite and non-zero");
  }
  q.normalize();
  return Rotation(q.toRotationMatrix());
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

Eigen::Vector4d Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

Rotation operator*(const Rotation& a, const Rotation& b) {
  return Rotation(a.m_ * b.m_, Rotation::Unchecked{});
}

void validate(const PoseDistanceWeights& w) {
  if (!(w.translation > 0.0) || !(w.rotation > 0.0)) {
    throw ValidationError("pose distance weights must be strictly positive");
  }
}

Rotation rotation_from_6d(const Vec6& r) {
  const Vec3 u = r.head<3>();
  const Vec3 v = r.tail<3>();
  const double nu = u.norm();
  if (!std::isfinite(nu) || nu < kRecoveryEpsilon) {
    throw RecoveryError("6D rotation: first block has (near) zero length");
  }
  const Vec3 a1 = u / nu;
  const Vec3 w = v - a1.dot(v) * a1;
  const double nw = w.norm();
  if (!std::isfinite(nw) || nw < kRecoveryEpsilon * std::max(1.0, v.norm())) {
    throw RecoveryError("6D rotation: blocks are (near) parallel");
  }
  const Vec3 a2 = w / nw;
  Mat3 m;
  m.col(0) = a1;
  m.col(1) = a2;
  m.col(2) = a1.cross(a2);
  return Rotation(m, Rotation::Unchecked{});
}

Vec6 rotation_from_6d_vjp(const Vec6& r, const Mat3& G) {
  const Vec3 u = r.head<3>();
  const Vec3 v = r.tail<3>();
  const double nu = u.norm();
  const Vec3 a1 = u / nu;
  const double a1v = a1.dot(v);
  const Vec3 w = v - a1v * a1;
  const double nw = w.norm();
  const Vec3 a2 = w / nw;

  // a3 = a1 x a2  =>  g3 . a3 = a1 . (a2 x g3) = a2 . (g3 x a1)
  Vec3 ga1 = G.col(0) + a2.cross(G.col(2));
  const Vec3 ga2 = G.col(1) + G.col(2).cross(a1);

  const Vec3 gw = (ga2 - a2 * a2.dot(ga2)) / nw;
  const Vec3 gv = gw - a1 * a1.dot(gw);
  ga1 -= a1v * gw + v * a1.dot(gw);
  const Vec3 gu = (ga1 - a1 * a1.dot(ga1)) / nu;

  Vec6 out;
  out << gu, gv;
  return out;
}

double chordal_distance(const Rotation& a, const Rotation& b) {
  return (a.matrix() - b.matrix()).norm();
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
  const double c = ((a.matrix().transpose() * b.matrix()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double pose_distance(const Pose& a, const Pose& b, const PoseDistanceWeights& w) {
  return w.translation * (a.t - b.t).norm() + w.rotation * chordal_distance(a.R, b.R);
}

PoseDistanceGradient pose_distance_gradient(const Vec3& predicted_t, const Mat3& predicted_R,
                                            const Pose& target, const PoseDistanceWeights& w) {
  PoseDistanceGradient g;
  const Vec3 dt = predicted_t - target.t;
  const double nt = dt.norm();
  if (nt > 0.0) g.dt = w.translation * dt / nt;
  const Mat3 dR = predicted_R - target.R.matrix();
  const double nr = dR.norm();
  if (nr > 0.0) g.dR = w.rotation * dR / nr;
  return g;
}

Rotation chordal_l2_mean(std::span<const Rotation> rotations) {
  if (rotations.empty()) throw ValidationError("chordal_l2_mean: empty rotation list");
  Mat3 mean = Mat3::Zero();
  for (const auto& r : rotations) mean += r.matrix();
  mean /= static_cast<double>(rotations.size());

  Eigen::JacobiSVD<Mat3> svd(mean, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (s(1) <= 1e-9 * std::max(1.0, s(0))) {
    throw DegenerateMeanError("chordal_l2_mean: mean matrix is rank-deficient");
  }
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation(U * D * V.transpose(), Rotation::Unchecked{});
}

Pose point_prediction(std::span<const Pose> samples) {
  if (samples.empty()) throw ValidationError("point_prediction: empty sample set");
  Vec3 t = Vec3::Zero();
  std::vector<Rotation> rotations;
  rotations.reserve(samples.size());
  for (const auto& p : samples) {
    t += p.t;
    rotations.push_back(p.R);
  }
  return Pose{t / static_cast<double>(samples.size()), chordal_l2_mean(rotations)};
}

}  // namespace ambipose
