#pragma once

#include <map>
#include <string>
#include <vector>

#include "motraj/geometry.hpp"
#include "motraj/io.hpp"
#include "motraj/trajectory.hpp"

namespace motraj::eval {

using geom::Pose;
using geom::SimilarityTransform;
using geom::Vec3;

struct RegistrationResult {
  SimilarityTransform transform;  // reconstruction -> ground-truth world
  double rms_center_residual = 0.0;
  double initial_scale = 1.0;   // centers-only estimate
  double magnitude = 0.0;       // length of the up/forward offsets on the GT side
};

// Up (R^T e_y) and forward (R^T e_z) end points appended to the camera centers:
// source uses magnitude / initial_scale, target uses magnitude. Layout is
// [centers..., ups..., forwards...] over `frames`.
struct AugmentedSets {
  std::vector<Vec3> source;
  std::vector<Vec3> target;
};

AugmentedSets BuildAugmentedSets(const std::map<int, Pose>& recon,
                                 const std::map<int, Pose>& gt,
                                 const std::vector<int>& frames, double magnitude,
                                 double initial_scale);

// Two-stage similarity registration. Centers alone may admit several
// alignments (e.g. a straight camera path), so the second stage adds camera
// orientation through the augmented point sets. Throws NoCommonFrames or
// DegenerateConfiguration.
RegistrationResult RegisterToGroundTruth(const std::map<int, Pose>& recon_cameras,
                                         const std::map<int, Pose>& gt_cameras);

traj::Trajectory Transform(const SimilarityTransform& transform,
                           const traj::Trajectory& trajectory);

struct TrajectoryErrorReport {
  std::map<int, double> per_frame_mean;
  double overall_mean = 0.0;
  int point_count = 0;
};

// Mean distance from trajectory points (GT world coordinates) to the object
// mesh posed per frame. Throws FrameMissingFromGroundTruth.
TrajectoryErrorReport TrajectoryError(const traj::Trajectory& trajectory,
                                      const io::GroundTruthScene& gt);

struct ReferenceScale {
  double object_to_world = 0.0;      // r_(ov), nested median of |m| / |o|
  double background_to_world = 0.0;  // r_(bv), the registration scale
  double ratio = 0.0;                // r_(ob)^ref = r_(ov) / r_(bv)
  int ray_hits = 0;
  int ray_misses = 0;
};

// Rays from each object-reconstruction camera through its points, intersected
// with the posed GT mesh in GT camera coordinates. Rays that miss are skipped;
// throws NoRayHits if nothing is hit.
ReferenceScale ReferenceScaleRatio(const io::Reconstruction& sfm_o,
                                   const io::GroundTruthScene& gt,
                                   const RegistrationResult& registration);

// eval.json
std::string SerializeEvalReport(double estimated, const ReferenceScale& reference,
                                const TrajectoryErrorReport& error);

}  // namespace motraj::eval
