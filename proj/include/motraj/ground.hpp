#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "motraj/geometry.hpp"
#include "motraj/io.hpp"

namespace motraj::ground {

using geom::Plane;
using geom::Vec2;
using geom::Vec3;

// Background points need this many observations to take part.
inline constexpr int kMinObservations = 4;
inline constexpr int kDefaultNumB = 50;

enum class Semantic { Ground, NonGround };

struct LabeledPoint {
  int point_id = 0;
  Semantic semantic = Semantic::NonGround;
  int observation_count = 0;
};

// Majority vote over the labels under each observation; ground wins only with
// a strict plurality. Points with fewer than four observations are dropped.
// Output is sorted by point id.
std::vector<LabeledPoint> ClassifyPoints(
    const io::Reconstruction& sfm_b, const std::map<int, io::LabelMap>& label_maps,
    const io::SemanticConfig& config);

// One observation of a ground point in a particular frame.
struct GroundMeasurement {
  int point_id = 0;
  Vec3 position = Vec3::Zero();
  Vec2 pixel = Vec2::Zero();
};

// Ground-labelled points of `labels` observed in `frame`, in point order.
std::vector<GroundMeasurement> GroundMeasurementsInFrame(
    const io::Reconstruction& sfm_b, const std::vector<LabeledPoint>& labels,
    int frame);

struct LocalGroundSet {
  int frame = 0;
  std::vector<Vec3> points;
  std::vector<int> source_ids;
  int rounds = 0;
};

// Collects ground points around the object in pixel space. In round k every
// object observation contributes its k-th nearest ground measurement; rounds
// run until at least num_b distinct points are held or the measurements are
// exhausted. Within a round, object observations are visited in input order.
LocalGroundSet SelectLocalGroundPoints(int frame,
                                       std::span<const io::Observation> object_obs,
                                       std::span<const GroundMeasurement> ground,
                                       int num_b = kDefaultNumB);

struct RansacParams {
  int iterations = 256;
  // Inlier threshold as a fraction of the candidate set's bounding-box diagonal.
  double threshold_fraction = 0.01;
  bool refit = true;
};

struct GroundPlaneFit {
  Plane plane;
  double threshold = 0.0;
  std::vector<int> inliers;             // indices into the set
  std::vector<int> hypothesis_support;  // inlier count of every drawn sample
};

// RANSAC plane with least-squares refit on the inliers. The normal is oriented
// towards `camera_center`; the anchor is the inlier centroid. Throws
// DegenerateGroundSet on fewer than three or collinear points.
GroundPlaneFit FitGroundPlane(const LocalGroundSet& set, const Vec3& camera_center,
                              std::uint64_t seed, const RansacParams& params = {});

// Per-frame seed so that frames can be fitted in any order.
inline std::uint64_t FrameSeed(std::uint64_t seed, int frame) {
  return seed ^ static_cast<std::uint64_t>(frame);
}

// Least-squares plane (smallest principal axis), unoriented.
Plane FitPlaneLeastSquares(std::span<const Vec3> points);

}  // namespace motraj::ground
