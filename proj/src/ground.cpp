#include "motraj/ground.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "motraj/error.hpp"
#include "motraj/kdtree.hpp"

namespace motraj::ground {

std::vector<LabeledPoint> ClassifyPoints(
    const io::Reconstruction& sfm_b, const std::map<int, io::LabelMap>& label_maps,
    const io::SemanticConfig& config) {
  std::vector<LabeledPoint> out;
  for (const io::ScenePoint& p : sfm_b.points) {
    const int count = static_cast<int>(p.observations.size());
    if (count < kMinObservations) continue;

    int votes[3] = {0, 0, 0};
    for (const io::Observation& o : p.observations) {
      const auto it = label_maps.find(o.frame);
      if (it == label_maps.end()) {
        throw Error(ErrorCode::MissingLabelMap,
                    "no label map for frame " + std::to_string(o.frame));
      }
      const io::LabelMap& map = it->second;
      if (map.width != sfm_b.width || map.height != sfm_b.height) {
        throw Error(ErrorCode::DimensionMismatch,
                    "label map for frame " + std::to_string(o.frame) +
                        " does not match the reconstruction frame size");
      }
      ++votes[static_cast<int>(config.Resolve(map.at(o.pixel)))];
    }
    const int g = votes[static_cast<int>(io::SemanticClass::Ground)];
    const int obj = votes[static_cast<int>(io::SemanticClass::Object)];
    const int bg = votes[static_cast<int>(io::SemanticClass::Background)];
    const bool ground = g > obj && g > bg;
    out.push_back({p.id, ground ? Semantic::Ground : Semantic::NonGround, count});
  }
  std::sort(out.begin(), out.end(), [](const LabeledPoint& a, const LabeledPoint& b) {
    return a.point_id < b.point_id;
  });
  return out;
}

std::vector<GroundMeasurement> GroundMeasurementsInFrame(
    const io::Reconstruction& sfm_b, const std::vector<LabeledPoint>& labels,
    int frame) {
  std::set<int> ground_ids;
  for (const LabeledPoint& l : labels) {
    if (l.semantic == Semantic::Ground) ground_ids.insert(l.point_id);
  }
  std::vector<GroundMeasurement> out;
  for (const io::ScenePoint& p : sfm_b.points) {
    if (!ground_ids.contains(p.id)) continue;
    for (const io::Observation& o : p.observations) {
      if (o.frame == frame) {
        out.push_back({p.id, p.position, o.pixel});
        break;
      }
    }
  }
  return out;
}

LocalGroundSet SelectLocalGroundPoints(int frame,
                                       std::span<const io::Observation> object_obs,
                                       std::span<const GroundMeasurement> ground,
                                       int num_b) {
  if (num_b < 3) {
    throw Error(ErrorCode::InvalidConfig, "num_b must be at least 3");
  }
  if (ground.empty()) {
    throw Error(ErrorCode::NoGroundObservations,
                "frame " + std::to_string(frame) + " has no ground measurements");
  }
  LocalGroundSet set;
  set.frame = frame;
  if (object_obs.empty()) return set;

  std::vector<Vec2> pixels;
  pixels.reserve(ground.size());
  for (const GroundMeasurement& m : ground) pixels.push_back(m.pixel);
  const KdTree2 tree(std::move(pixels));

  // No more than num_b rounds are ever needed: each round adds at least one
  // new point until the measurements run out.
  const int depth = std::min<int>(num_b, static_cast<int>(ground.size()));
  std::vector<std::vector<int>> neighbours;
  neighbours.reserve(object_obs.size());
  for (const io::Observation& o : object_obs) {
    neighbours.push_back(tree.Nearest(o.pixel, depth));
  }

  std::set<int> taken;
  while (static_cast<int>(set.points.size()) < num_b && set.rounds < depth) {
    for (const auto& list : neighbours) {
      const GroundMeasurement& m = ground[list[set.rounds]];
      if (taken.insert(m.point_id).second) {
        set.points.push_back(m.position);
        set.source_ids.push_back(m.point_id);
      }
    }
    ++set.rounds;
  }
  return set;
}

Plane FitPlaneLeastSquares(std::span<const Vec3> points) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  geom::Mat3 cov = geom::Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<geom::Mat3> eig(cov);
  Plane plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.anchor = centroid;
  return plane;
}

namespace {

void CheckNonDegenerate(std::span<const Vec3> points, int frame) {
  if (points.size() < 3) {
    throw Error(ErrorCode::DegenerateGroundSet,
                "frame " + std::to_string(frame) + ": fewer than 3 ground points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  geom::Mat3 cov = geom::Mat3::Zero();
  for (const Vec3& p : points) cov += (p - centroid) * (p - centroid).transpose();
  const Vec3 sv = Eigen::JacobiSVD<geom::Mat3>(cov).singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-14 * sv(0)) {
    throw Error(ErrorCode::DegenerateGroundSet,
                "frame " + std::to_string(frame) + ": ground points are collinear");
  }
}

std::vector<int> Inliers(const Plane& plane, std::span<const Vec3> points,
                         double threshold) {
  std::vector<int> out;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (std::abs(geom::SignedDistance(plane, points[k])) <= threshold) {
      out.push_back(static_cast<int>(k));
    }
  }
  return out;
}

Plane RefitOn(std::span<const Vec3> points, const std::vector<int>& idx) {
  std::vector<Vec3> subset;
  subset.reserve(idx.size());
  for (int k : idx) subset.push_back(points[k]);
  return FitPlaneLeastSquares(subset);
}

}  // namespace

GroundPlaneFit FitGroundPlane(const LocalGroundSet& set, const Vec3& camera_center,
                              std::uint64_t seed, const RansacParams& params) {
  const std::span<const Vec3> pts(set.points);
  CheckNonDegenerate(pts, set.frame);

  Eigen::AlignedBox3d box;
  for (const Vec3& p : pts) box.extend(p);
  GroundPlaneFit fit;
  fit.threshold = params.threshold_fraction * box.diagonal().norm();

  // mt19937_64 with modulo draws keeps the sample sequence identical across
  // standard library implementations.
  std::mt19937_64 rng(seed);
  const std::uint64_t n = pts.size();
  Plane best_plane;
  std::vector<int> best;
  for (int it = 0; it < params.iterations; ++it) {
    const std::uint64_t i0 = rng() % n;
    std::uint64_t i1 = rng() % n;
    while (i1 == i0) i1 = rng() % n;
    std::uint64_t i2 = rng() % n;
    while (i2 == i0 || i2 == i1) i2 = rng() % n;

    const Vec3 ab = pts[i1] - pts[i0];
    const Vec3 ac = pts[i2] - pts[i0];
    const Vec3 normal = ab.cross(ac);
    if (normal.norm() <= 1e-12 * ab.norm() * ac.norm()) {
      fit.hypothesis_support.push_back(0);
      continue;
    }
    Plane hypothesis{normal.normalized(), pts[i0]};
    std::vector<int> support = Inliers(hypothesis, pts, fit.threshold);
    fit.hypothesis_support.push_back(static_cast<int>(support.size()));
    if (support.size() > best.size()) {
      best = std::move(support);
      best_plane = hypothesis;
    }
  }
  if (best.size() < 3) {
    throw Error(ErrorCode::DegenerateGroundSet,
                "frame " + std::to_string(set.frame) + ": no plane hypothesis found");
  }

  Plane plane = best_plane;
  std::vector<int> inliers = best;
  if (params.refit) {
    plane = RefitOn(pts, inliers);
    std::vector<int> again = Inliers(plane, pts, fit.threshold);
    if (again.size() >= inliers.size() && again.size() >= 3) {
      inliers = std::move(again);
      plane = RefitOn(pts, inliers);
    }
  } else {
    Vec3 centroid = Vec3::Zero();
    for (int k : inliers) centroid += pts[k];
    plane.anchor = centroid / static_cast<double>(inliers.size());
  }

  const double side = plane.normal.dot(camera_center - plane.anchor);
  if (side == 0.0) {
    throw Error(ErrorCode::DegenerateGroundSet,
                "frame " + std::to_string(set.frame) + ": camera lies on the ground plane");
  }
  if (side < 0.0) plane.normal = -plane.normal;
  fit.plane = plane;
  fit.inliers = std::move(inliers);
  return fit;
}

}  // namespace motraj::ground
