#include "motraj/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "motraj/error.hpp"

namespace motraj {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::ValidationError: return "validation-error";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::MissingMesh: return "missing-mesh";
    case ErrorCode::MissingLabelMap: return "missing-label-map";
    case ErrorCode::NoCommonFrames: return "no-common-frames";
    case ErrorCode::FrameMissingFromGroundTruth: return "frame-missing-from-ground-truth";
    case ErrorCode::NearParallel: return "near-parallel";
    case ErrorCode::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::EmptyMesh: return "empty-mesh";
    case ErrorCode::NoGroundObservations: return "no-ground-observations";
    case ErrorCode::DegenerateGroundSet: return "degenerate-ground-set";
    case ErrorCode::EmptyObjectCloud: return "empty-object-cloud";
    case ErrorCode::NonPositiveScale: return "non-positive-scale";
    case ErrorCode::IllConditionedPair: return "ill-conditioned-pair";
    case ErrorCode::NoValidPairs: return "no-valid-pairs";
    case ErrorCode::AllPairsDegenerate: return "all-pairs-degenerate";
    case ErrorCode::NoValidFrames: return "no-valid-frames";
    case ErrorCode::NoRayHits: return "no-ray-hits";
  }
  return "unknown";
}

namespace geom {

bool IsRotation(const Mat3& rotation, double tolerance) {
  if (!rotation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if (((gram - Mat3::Identity()).cwiseAbs().array() > tolerance).any()) {
    return false;
  }
  return std::abs(rotation.determinant() - 1.0) <= tolerance;
}

bool IsValid(const Pose& pose, double tolerance) {
  return IsRotation(pose.rotation, tolerance) && pose.center.allFinite();
}

Vec3 WorldToCamera(const Pose& pose, const Vec3& point) {
  return pose.rotation * (point - pose.center);
}

Vec3 CameraToWorld(const Pose& pose, const Vec3& point) {
  return pose.center + pose.rotation.transpose() * point;
}

bool IsValid(const Plane& plane, double tolerance) {
  return plane.normal.allFinite() && plane.anchor.allFinite() &&
         std::abs(plane.normal.norm() - 1.0) <= tolerance;
}

double SignedDistance(const Plane& plane, const Vec3& point) {
  return plane.normal.dot(point - plane.anchor);
}

double RayPlaneParameter(const Vec3& origin, const Vec3& direction,
                         const Plane& plane) {
  const double denom = direction.dot(plane.normal);
  if (std::abs(denom) <= 1e-9 * direction.norm()) {
    throw Error(ErrorCode::NearParallel, "ray is parallel to the plane");
  }
  return (plane.anchor - origin).dot(plane.normal) / denom;
}

SimilarityTransform SimilarityTransform::Inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.scale * (inv.rotation * translation));
  return inv;
}

SimilarityTransform EstimateSimilarity(std::span<const Vec3> source,
                                       std::span<const Vec3> target) {
  return EstimateSimilarity(source, target, 2);
}

SimilarityTransform EstimateSimilarity(std::span<const Vec3> source,
                                       std::span<const Vec3> target,
                                       int min_source_rank) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "similarity estimation needs equally sized point sets");
  }
  if (source.size() < 3) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "similarity estimation needs at least 3 correspondences");
  }
  const double n = static_cast<double>(source.size());

  Vec3 mean_src = Vec3::Zero();
  Vec3 mean_dst = Vec3::Zero();
  for (std::size_t k = 0; k < source.size(); ++k) {
    mean_src += source[k];
    mean_dst += target[k];
  }
  mean_src /= n;
  mean_dst /= n;

  Mat3 cov = Mat3::Zero();
  Mat3 src_cov = Mat3::Zero();
  double src_var = 0.0;
  for (std::size_t k = 0; k < source.size(); ++k) {
    const Vec3 s = source[k] - mean_src;
    const Vec3 d = target[k] - mean_dst;
    cov += d * s.transpose();
    src_cov += s * s.transpose();
    src_var += s.squaredNorm();
  }
  cov /= n;
  src_cov /= n;
  src_var /= n;

  const Eigen::JacobiSVD<Mat3> src_svd(src_cov);
  const Vec3 sv = src_svd.singularValues();
  int rank = 0;
  for (int k = 0; k < 3; ++k) {
    if (sv(k) > 1e-12 * sv(0) && sv(k) > 0.0) ++rank;
  }
  if (rank < min_source_rank || src_var <= 0.0) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "source points are degenerate (covariance rank " +
                    std::to_string(rank) + ")");
  }

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 signs = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    signs(2) = -1.0;
  }

  SimilarityTransform out;
  out.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  out.scale = svd.singularValues().dot(signs) / src_var;
  if (!(out.scale > 0.0) || !std::isfinite(out.scale)) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "similarity estimation produced a non-positive scale");
  }
  out.translation = mean_dst - out.scale * (out.rotation * mean_src);
  return out;
}

double RmsResidual(const SimilarityTransform& transform,
                   std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < source.size(); ++k) {
    sum += (target[k] - transform(source[k])).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(source.size()));
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace geom
}  // namespace motraj
