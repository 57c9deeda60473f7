#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace motraj::geom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid camera pose.
//
// IMPORTANT: `rotation` maps world directions into camera directions
// (world-to-camera), and `center` is the camera center in world coordinates:
//
//   x_cam = rotation * (x_world - center)
//
// Colmap stores the same rotation but a translation t = -R * c; OpenMVG stores
// R and c directly. Converters must produce this convention.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();
};

// Orthonormal with det +1 within `tolerance` elementwise.
bool IsRotation(const Mat3& rotation, double tolerance = 1e-9);
bool IsValid(const Pose& pose, double tolerance = 1e-9);

Vec3 WorldToCamera(const Pose& pose, const Vec3& point);
Vec3 CameraToWorld(const Pose& pose, const Vec3& point);

// Plane through `anchor` with unit `normal`.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  Vec3 anchor = Vec3::Zero();
};

bool IsValid(const Plane& plane, double tolerance = 1e-12);

// n . (point - anchor)
double SignedDistance(const Plane& plane, const Vec3& point);

// Parameter t such that origin + t * direction lies on the plane. Throws
// NearParallel when |direction . n| <= 1e-9 * |direction|.
double RayPlaneParameter(const Vec3& origin, const Vec3& direction,
                         const Plane& plane);

// x -> scale * rotation * x + translation
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator()(const Vec3& x) const {
    return scale * (rotation * x) + translation;
  }
  SimilarityTransform Inverse() const;
};

// Least-squares similarity mapping `source` onto `target` (Umeyama's closed
// form, reflections excluded). Throws DegenerateConfiguration for fewer than
// three correspondences or a source covariance of rank < 2.
SimilarityTransform EstimateSimilarity(std::span<const Vec3> source,
                                       std::span<const Vec3> target);

// Same closed form with an explicit minimum source rank. Rank-1 (collinear)
// inputs leave the rotation about the line undetermined but the scale is
// still unique.
SimilarityTransform EstimateSimilarity(std::span<const Vec3> source,
                                       std::span<const Vec3> target,
                                       int min_source_rank);

// Root of the mean squared residual |target_k - T(source_k)|^2.
double RmsResidual(const SimilarityTransform& transform,
                   std::span<const Vec3> source, std::span<const Vec3> target);

// Median with the mean-of-middle-two rule for even counts. Input is copied.
double Median(std::vector<double> values);

}  // namespace motraj::geom
