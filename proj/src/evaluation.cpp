#include "motraj/evaluation.hpp"

#include <cmath>

#include <json.hpp>

#include "motraj/error.hpp"
#include "motraj/mesh.hpp"

namespace motraj::eval {

AugmentedSets BuildAugmentedSets(const std::map<int, Pose>& recon,
                                 const std::map<int, Pose>& gt,
                                 const std::vector<int>& frames, double magnitude,
                                 double initial_scale) {
  const double recon_magnitude = magnitude / initial_scale;
  const std::size_t n = frames.size();
  AugmentedSets sets;
  sets.source.resize(3 * n);
  sets.target.resize(3 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const Pose& r = recon.at(frames[k]);
    const Pose& g = gt.at(frames[k]);
    sets.source[k] = r.center;
    sets.target[k] = g.center;
    sets.source[n + k] = r.center + recon_magnitude * r.rotation.transpose().col(1);
    sets.target[n + k] = g.center + magnitude * g.rotation.transpose().col(1);
    sets.source[2 * n + k] = r.center + recon_magnitude * r.rotation.transpose().col(2);
    sets.target[2 * n + k] = g.center + magnitude * g.rotation.transpose().col(2);
  }
  return sets;
}

RegistrationResult RegisterToGroundTruth(const std::map<int, Pose>& recon_cameras,
                                         const std::map<int, Pose>& gt_cameras) {
  std::vector<int> frames;
  for (const auto& [frame, pose] : recon_cameras) {
    if (gt_cameras.contains(frame)) frames.push_back(frame);
  }
  if (frames.empty()) {
    throw Error(ErrorCode::NoCommonFrames,
                "reconstruction and ground truth share no cameras");
  }
  if (frames.size() < 3) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "registration needs at least 3 common cameras");
  }

  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (int f : frames) {
    src.push_back(recon_cameras.at(f).center);
    dst.push_back(gt_cameras.at(f).center);
  }
  // Only the scale of the centers-only solution is used; collinear paths are
  // allowed here.
  const SimilarityTransform initial = geom::EstimateSimilarity(src, dst, 1);

  std::vector<double> spacing;
  for (std::size_t k = 1; k < dst.size(); ++k) {
    spacing.push_back((dst[k] - dst[k - 1]).norm());
  }
  const double magnitude = geom::Median(spacing);
  if (!(magnitude > 0.0)) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "ground-truth cameras do not move");
  }

  const AugmentedSets sets =
      BuildAugmentedSets(recon_cameras, gt_cameras, frames, magnitude, initial.scale);
  RegistrationResult result;
  result.transform = geom::EstimateSimilarity(sets.source, sets.target);
  result.initial_scale = initial.scale;
  result.magnitude = magnitude;
  result.rms_center_residual = geom::RmsResidual(result.transform, src, dst);
  return result;
}

traj::Trajectory Transform(const SimilarityTransform& transform,
                           const traj::Trajectory& trajectory) {
  traj::Trajectory out;
  for (const auto& [frame, pts] : trajectory) {
    std::vector<Vec3>& dst = out[frame];
    dst.reserve(pts.size());
    for (const Vec3& p : pts) dst.push_back(transform(p));
  }
  return out;
}

TrajectoryErrorReport TrajectoryError(const traj::Trajectory& trajectory,
                                      const io::GroundTruthScene& gt) {
  std::string missing;
  for (const auto& [frame, pts] : trajectory) {
    if (!gt.frames.contains(frame)) missing += " " + std::to_string(frame);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::FrameMissingFromGroundTruth,
                "trajectory frames missing from ground truth:" + missing);
  }

  TrajectoryErrorReport report;
  double total = 0.0;
  for (const auto& [frame, pts] : trajectory) {
    if (pts.empty()) continue;
    const geom::TriangleMesh mesh = gt.PosedMesh(frame);
    double sum = 0.0;
    for (const Vec3& p : pts) sum += geom::PointMeshDistance(p, mesh);
    report.per_frame_mean[frame] = sum / static_cast<double>(pts.size());
    total += sum;
    report.point_count += static_cast<int>(pts.size());
  }
  report.overall_mean =
      report.point_count > 0 ? total / static_cast<double>(report.point_count) : 0.0;
  return report;
}

ReferenceScale ReferenceScaleRatio(const io::Reconstruction& sfm_o,
                                   const io::GroundTruthScene& gt,
                                   const RegistrationResult& registration) {
  ReferenceScale out;
  std::vector<double> frame_medians;
  for (const auto& [frame, cam_o] : sfm_o.cameras) {
    const auto gt_frame = gt.frames.find(frame);
    if (gt_frame == gt.frames.end()) continue;
    const io::GroundTruthFrame& g = gt_frame->second;
    // Object mesh in GT camera coordinates: R_c * (R_obj * x + t - c).
    const geom::TriangleMesh mesh =
        geom::Transformed(gt.mesh, g.camera.rotation * g.object_rotation,
                          g.camera.rotation * (g.object_translation - g.camera.center));
    std::vector<double> ratios;
    for (const io::ScenePoint& p : sfm_o.points) {
      const Vec3 o = geom::WorldToCamera(cam_o, p.position);
      const double len = o.norm();
      if (!(len > 0.0)) continue;
      const auto hit = geom::RayMeshIntersection(Vec3::Zero(), o, mesh);
      if (!hit) {
        ++out.ray_misses;
        continue;
      }
      ++out.ray_hits;
      ratios.push_back(hit->norm() / len);
    }
    if (!ratios.empty()) frame_medians.push_back(geom::Median(std::move(ratios)));
  }
  if (frame_medians.empty()) {
    throw Error(ErrorCode::NoRayHits, "no object ray hits the ground-truth mesh");
  }
  out.object_to_world = geom::Median(frame_medians);
  out.background_to_world = registration.transform.scale;
  out.ratio = out.object_to_world / out.background_to_world;
  return out;
}

std::string SerializeEvalReport(double estimated, const ReferenceScale& reference,
                                const TrajectoryErrorReport& error) {
  using nlohmann::json;
  json doc;
  doc["scale_ratio_estimated"] = estimated;
  doc["scale_ratio_reference"] = reference.ratio;
  doc["scale_ratio_deviation"] = std::abs(estimated - reference.ratio) / reference.ratio;
  doc["trajectory_error_mean"] = error.overall_mean;
  json frames = json::array();
  for (const auto& [frame, mean] : error.per_frame_mean) {
    frames.push_back({{"frame", frame}, {"mean", mean}});
  }
  doc["per_frame"] = std::move(frames);
  return doc.dump(1) + "\n";
}

}  // namespace motraj::eval
