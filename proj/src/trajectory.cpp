#include "motraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "motraj/error.hpp"

namespace motraj::traj {

const FrameDirections& TrajectoryFamily::Frame(int frame_id) const {
  const auto it = std::lower_bound(
      frames.begin(), frames.end(), frame_id,
      [](const FrameDirections& f, int id) { return f.frame < id; });
  if (it == frames.end() || it->frame != frame_id) {
    throw Error(ErrorCode::ValidationError,
                "frame " + std::to_string(frame_id) + " is not part of the family");
  }
  return *it;
}

TrajectoryFamily ComputeFamily(const io::Reconstruction& sfm_o,
                               const io::Reconstruction& sfm_b,
                               const std::vector<int>& paired_frames) {
  if (sfm_o.points.empty()) {
    throw Error(ErrorCode::EmptyObjectCloud, "object reconstruction has no points");
  }
  std::vector<int> frames = paired_frames;
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  TrajectoryFamily family;
  family.point_ids.reserve(sfm_o.points.size());
  for (const io::ScenePoint& p : sfm_o.points) family.point_ids.push_back(p.id);

  for (int frame : frames) {
    const auto cam_o = sfm_o.cameras.find(frame);
    const auto cam_b = sfm_b.cameras.find(frame);
    if (cam_o == sfm_o.cameras.end() || cam_b == sfm_b.cameras.end()) {
      throw Error(ErrorCode::ValidationError,
                  "frame " + std::to_string(frame) + " is not in both reconstructions");
    }
    const geom::Pose& po = cam_o->second;
    const geom::Pose& pb = cam_b->second;
    // R_b^T * R_o, applied to (o - c_o).
    const geom::Mat3 rot = pb.rotation.transpose() * po.rotation;
    FrameDirections f;
    f.frame = frame;
    f.camera_center = pb.center;
    f.directions.reserve(sfm_o.points.size());
    for (const io::ScenePoint& p : sfm_o.points) {
      f.directions.push_back(rot * (p.position - po.center));
    }
    family.frames.push_back(std::move(f));
  }
  return family;
}

Trajectory RealizeTrajectory(const TrajectoryFamily& family, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::NonPositiveScale, "scale ratio must be positive and finite");
  }
  Trajectory out;
  for (const FrameDirections& f : family.frames) {
    std::vector<Vec3>& pts = out[f.frame];
    pts.reserve(f.directions.size());
    for (const Vec3& v : f.directions) pts.push_back(f.camera_center + r * v);
  }
  return out;
}

double PairNumerator(const FrameDirections& a, const Plane& plane_a,
                     const FrameDirections& b, const Plane& plane_b) {
  return plane_b.normal.dot(b.camera_center - plane_b.anchor) -
         plane_a.normal.dot(a.camera_center - plane_a.anchor);
}

double PairDenominator(const FrameDirections& a, const Plane& plane_a,
                       const FrameDirections& b, const Plane& plane_b, int j) {
  return plane_a.normal.dot(a.directions[j]) - plane_b.normal.dot(b.directions[j]);
}

double DenominatorEpsilon(const FrameDirections& a, const Plane& plane_a,
                          const FrameDirections& b, const Plane& plane_b, int j) {
  return 1e-9 * (std::abs(plane_a.normal.dot(a.directions[j])) +
                 std::abs(plane_b.normal.dot(b.directions[j])) + 1.0);
}

namespace {

bool Conditioned(const FrameDirections& a, const Plane& plane_a,
                 const FrameDirections& b, const Plane& plane_b, int j,
                 double* denominator) {
  *denominator = PairDenominator(a, plane_a, b, plane_b, j);
  return std::abs(*denominator) > DenominatorEpsilon(a, plane_a, b, plane_b, j);
}

}  // namespace

double ScaleFromViewPair(const FrameDirections& a, const Plane& plane_a,
                         const FrameDirections& b, const Plane& plane_b, int j) {
  double denom = 0.0;
  if (!Conditioned(a, plane_a, b, plane_b, j, &denom)) {
    throw Error(ErrorCode::IllConditionedPair,
                "view pair (" + std::to_string(a.frame) + ", " +
                    std::to_string(b.frame) + ") is ill-conditioned for point " +
                    std::to_string(j));
  }
  return PairNumerator(a, plane_a, b, plane_b) / denom;
}

std::vector<FramePair> CandidatePairs(const std::vector<int>& frames, int stride) {
  std::vector<int> sorted = frames;
  std::sort(sorted.begin(), sorted.end());
  if (stride <= 0) {
    const int n = static_cast<int>(sorted.size());
    stride = n <= 500 ? 1 : (n + 499) / 500;
  }
  std::vector<int> picked;
  for (std::size_t k = 0; k < sorted.size(); k += static_cast<std::size_t>(stride)) {
    picked.push_back(sorted[k]);
  }
  std::vector<FramePair> pairs;
  for (std::size_t a = 0; a < picked.size(); ++a) {
    for (std::size_t b = a + 1; b < picked.size(); ++b) {
      pairs.emplace_back(picked[a], picked[b]);
    }
  }
  return pairs;
}

namespace {

double SampleVariance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

// Competition ranks: 1 + number of entries strictly better.
template <typename Better>
std::vector<int> CompetitionRanks(const std::vector<double>& keys, Better better) {
  std::vector<int> order(keys.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return better(keys[a], keys[b]); });
  std::vector<int> ranks(keys.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && !better(keys[order[pos - 1]], keys[order[pos]])) {
      ranks[order[pos]] = ranks[order[pos - 1]];
    } else {
      ranks[order[pos]] = static_cast<int>(pos) + 1;
    }
  }
  return ranks;
}

}  // namespace

std::vector<ViewPairScore> RankViewPairs(const TrajectoryFamily& family,
                                         const std::map<int, Plane>& planes,
                                         const std::vector<FramePair>& candidates) {
  std::vector<ViewPairScore> scores;
  const int num_points = static_cast<int>(family.point_ids.size());
  // A one-point cloud has no variance to rank by; its single equation is kept.
  const std::size_t min_points = num_points == 1 ? 1 : 2;
  for (const FramePair& pair : candidates) {
    const auto pa = planes.find(pair.first);
    const auto pb = planes.find(pair.second);
    if (pa == planes.end() || pb == planes.end()) {
      throw Error(ErrorCode::ValidationError,
                  "view pair (" + std::to_string(pair.first) + ", " +
                      std::to_string(pair.second) + ") lacks a ground plane");
    }
    const FrameDirections& a = family.Frame(pair.first);
    const FrameDirections& b = family.Frame(pair.second);
    ViewPairScore score;
    score.pair = pair;
    score.numerator = PairNumerator(a, pa->second, b, pb->second);
    for (int j = 0; j < num_points; ++j) {
      double denom = 0.0;
      if (!Conditioned(a, pa->second, b, pb->second, j, &denom)) continue;
      score.conditioned_points.push_back(j);
      score.ratios.push_back(score.numerator / denom);
    }
    if (score.ratios.size() < min_points) continue;
    score.ratio_variance = SampleVariance(score.ratios);
    scores.push_back(std::move(score));
  }
  if (scores.empty()) {
    throw Error(ErrorCode::NoValidPairs,
                "no view pair has two or more well-conditioned points");
  }

  std::vector<double> distance_keys;
  std::vector<double> variance_keys;
  for (const ViewPairScore& s : scores) {
    distance_keys.push_back(std::abs(s.numerator));
    variance_keys.push_back(s.ratio_variance);
  }
  const auto distance_ranks =
      CompetitionRanks(distance_keys, [](double x, double y) { return x > y; });
  const auto variance_ranks =
      CompetitionRanks(variance_keys, [](double x, double y) { return x < y; });
  for (std::size_t k = 0; k < scores.size(); ++k) {
    scores[k].distance_rank = distance_ranks[k];
    scores[k].variance_rank = variance_ranks[k];
    scores[k].combined_rank = distance_ranks[k] + variance_ranks[k];
  }
  std::sort(scores.begin(), scores.end(),
            [](const ViewPairScore& x, const ViewPairScore& y) {
              if (x.combined_rank != y.combined_rank) {
                return x.combined_rank < y.combined_rank;
              }
              return x.pair < y.pair;
            });
  return scores;
}

std::string MethodName(Method method) {
  return method == Method::ConstantDistance ? "constant-distance" : "intersection";
}

Method ParseMethod(const std::string& name) {
  if (name == "constant-distance") return Method::ConstantDistance;
  if (name == "intersection") return Method::Intersection;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + name + "'");
}

ScaleEstimate EstimateScaleConstantDistance(const TrajectoryFamily& family,
                                            const std::map<int, Plane>& planes,
                                            const std::vector<FramePair>& candidates) {
  std::vector<ViewPairScore> ranked;
  try {
    ranked = RankViewPairs(family, planes, candidates);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoValidPairs) throw;
    throw Error(ErrorCode::AllPairsDegenerate,
                "degenerate camera motion: every view pair is ill-conditioned");
  }

  for (const ViewPairScore& score : ranked) {
    const FrameDirections& a = family.Frame(score.pair.first);
    const FrameDirections& b = family.Frame(score.pair.second);
    const Plane& pa = planes.at(score.pair.first);
    const Plane& pb = planes.at(score.pair.second);
    double sum_a = 0.0;
    double sum_a2 = 0.0;
    for (int j : score.conditioned_points) {
      const double denom = PairDenominator(a, pa, b, pb, j);
      sum_a += denom;
      sum_a2 += denom * denom;
    }
    const double r = score.numerator * sum_a / sum_a2;
    if (r > 0.0 && std::isfinite(r)) {
      ScaleEstimate est;
      est.r = r;
      est.method = Method::ConstantDistance;
      est.chosen_pair = score.pair;
      est.per_point_ratios = score.ratios;
      return est;
    }
  }
  throw Error(ErrorCode::AllPairsDegenerate,
              "degenerate camera motion: no view pair yields a positive scale ratio");
}

ScaleEstimate EstimateScaleIntersection(const TrajectoryFamily& family,
                                        const std::map<int, Plane>& planes) {
  ScaleEstimate est;
  est.method = Method::Intersection;
  for (const FrameDirections& f : family.frames) {
    const auto plane = planes.find(f.frame);
    if (plane == planes.end()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& v : f.directions) {
      double t = 0.0;
      try {
        t = geom::RayPlaneParameter(f.camera_center, v, plane->second);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NearParallel) throw;
        continue;
      }
      if (t > 0.0 && std::isfinite(t)) best = std::min(best, t);
    }
    if (std::isfinite(best)) est.frame_ratios.push_back(best);
  }
  if (est.frame_ratios.empty()) {
    throw Error(ErrorCode::NoValidFrames,
                "no camera has an object ray intersecting its ground plane");
  }
  est.r = geom::Median(est.frame_ratios);
  return est;
}

// -- Files ------------------------------------------------------------------

std::string SerializeTrajectory(const ScaleEstimate& estimate,
                                const Trajectory& trajectory) {
  using nlohmann::json;
  json doc;
  doc["method"] = MethodName(estimate.method);
  doc["scale_ratio"] = estimate.r;
  if (estimate.chosen_pair) {
    doc["chosen_pair"] = {estimate.chosen_pair->first, estimate.chosen_pair->second};
  } else {
    doc["chosen_pair"] = nullptr;
  }
  json frames = json::array();
  for (const auto& [frame, pts] : trajectory) {
    json points = json::array();
    for (const Vec3& p : pts) points.push_back({p.x(), p.y(), p.z()});
    frames.push_back({{"frame", frame}, {"points", std::move(points)}});
  }
  doc["frames"] = std::move(frames);
  return doc.dump() + "\n";
}

TrajectoryFile ParseTrajectory(std::string_view text, std::string_view source) {
  using nlohmann::json;
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::ParseError, std::string(source) + ": " + what);
  };
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw fail(e.what());
  }
  TrajectoryFile out;
  try {
    out.method = doc.at("method").get<std::string>();
    out.scale_ratio = doc.at("scale_ratio").get<double>();
    const json& pair = doc.at("chosen_pair");
    if (!pair.is_null()) {
      out.chosen_pair = FramePair(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    for (const json& f : doc.at("frames")) {
      std::vector<Vec3>& pts = out.frames[f.at("frame").get<int>()];
      for (const json& p : f.at("points")) {
        if (p.size() != 3) throw fail("trajectory point needs 3 coordinates");
        pts.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  return out;
}

std::string EncodePly(const std::vector<Vec3>& points) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " +
                    std::to_string(points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n"
                    "end_header\n";
  char buf[96];
  for (const Vec3& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

}  // namespace motraj::traj
