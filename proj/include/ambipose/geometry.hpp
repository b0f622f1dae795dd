#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>

namespace ambipose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Element of SO(3), stored as a 3x3 matrix. Construction validates
/// orthonormality and det = +1 to within 1e-6.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation about_x(double radians);
  static Rotation about_y(double radians);
  static Rotation about_z(double radians);
  /// Unit quaternion (w, x, y, z); normalized before conversion.
  static Rotation from_quaternion(double w, double x, double y, double z);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;
  /// Unit quaternion (w, x, y, z) with w >= 0.
  Eigen::Vector4d quaternion() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b);
  friend Vec3 operator*(const Rotation& r, const Vec3& v) { return r.m_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  friend Rotation rotation_from_6d(const Vec6& r);
  friend Rotation chordal_l2_mean(std::span<const Rotation> rotations);

  Mat3 m_;
};

struct Pose {
  Vec3 t = Vec3::Zero();
  Rotation R;
};

/// Weights of the translation and rotation terms in pose_distance.
struct PoseDistanceWeights {
  double translation = 5.0;
  double rotation = 2.0;
};

void validate(const PoseDistanceWeights& w);

/// Gram-Schmidt recovery from the continuous 6D representation: the first
/// block gives column 0, the second block orthogonalized against it gives
/// column 1, and column 2 is their cross product.
/// Throws RecoveryError on zero-length or parallel blocks.
Rotation rotation_from_6d(const Vec6& r);

/// Vector-Jacobian product of rotation_from_6d: maps dL/dR to dL/dr.
Vec6 rotation_from_6d_vjp(const Vec6& r, const Mat3& dL_dR);

/// Frobenius norm of Ra - Rb.
double chordal_distance(const Rotation& a, const Rotation& b);

/// Angle of Ra^T Rb in radians, in [0, pi].
double geodesic_angle(const Rotation& a, const Rotation& b);

/// lambda_t * |ta - tb| + lambda_r * |Ra - Rb|_F
double pose_distance(const Pose& a, const Pose& b, const PoseDistanceWeights& w);

/// Gradient of pose_distance with respect to the translation and rotation
/// matrix of `predicted`. Zero-norm terms contribute a zero subgradient.
struct PoseDistanceGradient {
  Vec3 dt = Vec3::Zero();
  Mat3 dR = Mat3::Zero();
};
PoseDistanceGradient pose_distance_gradient(const Vec3& predicted_t, const Mat3& predicted_R,
                                            const Pose& target, const PoseDistanceWeights& w);

/// Chordal L2 mean: the rotation minimizing the sum of squared Frobenius
/// distances, obtained by projecting the arithmetic mean onto SO(3).
/// Throws DegenerateMeanError when the mean matrix has rank < 2.
Rotation chordal_l2_mean(std::span<const Rotation> rotations);

/// Arithmetic-mean translation and chordal L2 mean rotation.
Pose point_prediction(std::span<const Pose> samples);

}  // namespace ambipose
