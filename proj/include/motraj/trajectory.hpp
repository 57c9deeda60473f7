#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "motraj/geometry.hpp"
#include "motraj/io.hpp"

namespace motraj::traj {

using geom::Plane;
using geom::Vec3;

using FramePair = std::pair<int, int>;

// Per-frame data of the one-parameter trajectory family
//
//   o_j(frame; r) = camera_center + r * directions[j]
//
// where directions[j] = R_b^T * R_o * (o_j - c_o) rotates the object point,
// expressed in the object-reconstruction camera, into background axes.
struct FrameDirections {
  int frame = 0;
  Vec3 camera_center = Vec3::Zero();
  std::vector<Vec3> directions;  // aligned with TrajectoryFamily::point_ids
};

struct TrajectoryFamily {
  std::vector<int> point_ids;
  std::vector<FrameDirections> frames;  // ascending frame id

  const FrameDirections& Frame(int frame_id) const;
};

TrajectoryFamily ComputeFamily(const io::Reconstruction& sfm_o,
                               const io::Reconstruction& sfm_b,
                               const std::vector<int>& paired_frames);

// Frame id -> object points in background coordinates, in point_ids order.
using Trajectory = std::map<int, std::vector<Vec3>>;

Trajectory RealizeTrajectory(const TrajectoryFamily& family, double r);

// Difference of camera-plane distances n_b.(c_b - p_b) - n_a.(c_a - p_a).
double PairNumerator(const FrameDirections& a, const Plane& plane_a,
                     const FrameDirections& b, const Plane& plane_b);

// n_a.v_a - n_b.v_b for point j.
double PairDenominator(const FrameDirections& a, const Plane& plane_a,
                       const FrameDirections& b, const Plane& plane_b, int j);

// Conditioning bound on PairDenominator for point j.
double DenominatorEpsilon(const FrameDirections& a, const Plane& plane_a,
                          const FrameDirections& b, const Plane& plane_b, int j);

// Scale ratio that keeps point j at the same signed ground distance in both
// views. Throws IllConditionedPair when the denominator is below its bound.
double ScaleFromViewPair(const FrameDirections& a, const Plane& plane_a,
                         const FrameDirections& b, const Plane& plane_b, int j);

struct ViewPairScore {
  FramePair pair;
  double numerator = 0.0;
  double ratio_variance = 0.0;
  int distance_rank = 0;
  int variance_rank = 0;
  int combined_rank = 0;
  std::vector<int> conditioned_points;  // indices into point_ids
  std::vector<double> ratios;           // per conditioned point
};

// All pairs over frames taken every `stride` entries. stride <= 0 selects 1
// up to 500 frames and ceil(n / 500) above.
std::vector<FramePair> CandidatePairs(const std::vector<int>& frames, int stride = 0);

// Ranking one: |numerator| descending. Ranking two: sample variance of the
// per-point ratios ascending. Both use competition ranks (ties share the best
// rank); output is sorted by their sum, then by pair. Pairs with fewer than
// two conditioned points are left out (one suffices when the object cloud has
// a single point); throws NoValidPairs if none remain.
std::vector<ViewPairScore> RankViewPairs(const TrajectoryFamily& family,
                                         const std::map<int, Plane>& planes,
                                         const std::vector<FramePair>& candidates);

enum class Method { ConstantDistance, Intersection };

std::string MethodName(Method method);
Method ParseMethod(const std::string& name);

struct ScaleEstimate {
  double r = 0.0;
  Method method = Method::ConstantDistance;
  std::optional<FramePair> chosen_pair;
  std::vector<double> per_point_ratios;
  std::vector<double> frame_ratios;  // intersection method only
};

// Least squares over all conditioned equations of the best-ranked pair,
// r = b * sum(A_j) / sum(A_j^2). Falls through to the next pair while r is not
// positive and finite. Throws AllPairsDegenerate.
ScaleEstimate EstimateScaleConstantDistance(const TrajectoryFamily& family,
                                            const std::map<int, Plane>& planes,
                                            const std::vector<FramePair>& candidates);

// Baseline: per frame the smallest forward ray-plane parameter over all object
// points, then the median over frames. Throws NoValidFrames.
ScaleEstimate EstimateScaleIntersection(const TrajectoryFamily& family,
                                        const std::map<int, Plane>& planes);

// trajectory.json
std::string SerializeTrajectory(const ScaleEstimate& estimate,
                                const Trajectory& trajectory);

struct TrajectoryFile {
  std::string method;
  double scale_ratio = 0.0;
  std::optional<FramePair> chosen_pair;
  Trajectory frames;
};

TrajectoryFile ParseTrajectory(std::string_view text,
                               std::string_view source = "<memory>");

// ASCII PLY, one vertex element with double x y z.
std::string EncodePly(const std::vector<Vec3>& points);

}  // namespace motraj::traj
