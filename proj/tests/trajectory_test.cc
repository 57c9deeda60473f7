#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "motraj/error.hpp"
#include "motraj/pipeline.hpp"
#include "motraj/synthetic.hpp"
#include "motraj/trajectory.hpp"
#include "test_util.hpp"

namespace motraj::traj {
namespace {

using geom::Mat3;
using geom::Pose;
using testing::RandomPose;
using testing::RandomVec;

const Plane kZ0{Vec3::UnitZ(), Vec3::Zero()};

FrameDirections Frame(int id, const Vec3& center, std::vector<Vec3> dirs) {
  return {id, center, std::move(dirs)};
}

io::Reconstruction Recon(std::map<int, Pose> cams, std::vector<Vec3> pts) {
  io::Reconstruction r;
  r.width = r.height = 100;
  r.cameras = std::move(cams);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    r.points.push_back({static_cast<int>(k), pts[k], {}});
  }
  return r;
}

TEST(ComputeFamily, IdentityPoses) {
  const auto o = Recon({{0, Pose{}}}, {Vec3(1, 2, 3)});
  const auto b = Recon({{0, Pose{}}}, {});
  const TrajectoryFamily f = ComputeFamily(o, b, {0});
  ASSERT_EQ(f.frames.size(), 1u);
  EXPECT_EQ(f.frames[0].directions[0], Vec3(1, 2, 3));
  EXPECT_EQ(f.frames[0].camera_center, Vec3::Zero());
}

TEST(ComputeFamily, TranslationOnly) {
  const auto o = Recon({{0, Pose{Mat3::Identity(), Vec3(1, 0, 0)}}}, {Vec3(2, 0, 0)});
  const auto b = Recon({{0, Pose{}}}, {});
  EXPECT_EQ(ComputeFamily(o, b, {0}).frames[0].directions[0], Vec3(1, 0, 0));
}

TEST(ComputeFamily, UnitScaleMatchesTwoStepTransform) {
  std::mt19937_64 rng(31);
  std::map<int, Pose> co;
  std::map<int, Pose> cb;
  for (int f = 0; f < 5; ++f) {
    co[f] = RandomPose(rng);
    cb[f] = RandomPose(rng);
  }
  std::vector<Vec3> pts;
  for (int k = 0; k < 20; ++k) pts.push_back(RandomVec(rng, 3.0));
  const auto o = Recon(co, pts);
  const TrajectoryFamily f = ComputeFamily(o, Recon(cb, {}), {0, 1, 2, 3, 4});
  const Trajectory t = RealizeTrajectory(f, 1.0);
  for (int frame = 0; frame < 5; ++frame) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const Vec3 expected = geom::CameraToWorld(cb[frame], geom::WorldToCamera(co[frame], pts[j]));
      EXPECT_LT((t.at(frame)[j] - expected).norm(), 1e-12);
    }
  }
}

TEST(ComputeFamily, Errors) {
  EXPECT_THROW(ComputeFamily(Recon({{0, Pose{}}}, {}), Recon({{0, Pose{}}}, {}), {0}), Error);
  EXPECT_THROW(ComputeFamily(Recon({{0, Pose{}}}, {Vec3(1, 1, 1)}), Recon({{1, Pose{}}}, {}), {0}),
               Error);
}

TEST(RealizeTrajectory, CollapseLinearityAndIdentity) {
  TrajectoryFamily f;
  f.point_ids = {0, 1};
  f.frames = {Frame(0, Vec3(1, 2, 3), {Vec3(1, 0, 0), Vec3(0, -2, 5)})};
  const Trajectory tiny = RealizeTrajectory(f, 1e-12);
  for (const Vec3& p : tiny.at(0)) EXPECT_LT((p - Vec3(1, 2, 3)).norm(), 1e-9);
  const Trajectory one = RealizeTrajectory(f, 1.0);
  const Trajectory two = RealizeTrajectory(f, 2.0);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ((two.at(0)[j] - Vec3(1, 2, 3)).norm(), 2.0 * (one.at(0)[j] - Vec3(1, 2, 3)).norm());
    EXPECT_EQ(one.at(0)[j], Vec3(1, 2, 3) + f.frames[0].directions[j]);
  }
  EXPECT_THROW(RealizeTrajectory(f, 0.0), Error);
  EXPECT_THROW(RealizeTrajectory(f, -1.0), Error);
}

TEST(ScaleFromViewPair, HandExample) {
  const FrameDirections a = Frame(0, Vec3(0, 0, 4), {Vec3(1, 1, -2)});
  const FrameDirections b = Frame(1, Vec3(3, 0, 6), {Vec3(0, 2, -3)});
  const double r = ScaleFromViewPair(a, kZ0, b, kZ0, 0);
  EXPECT_NEAR(r, 2.0, 1e-12);
  // Substituting r back gives equal signed distances in both views.
  const double da = geom::SignedDistance(kZ0, a.camera_center + r * a.directions[0]);
  const double db = geom::SignedDistance(kZ0, b.camera_center + r * b.directions[0]);
  EXPECT_NEAR(da, 0.0, 1e-12);
  EXPECT_NEAR(db, 0.0, 1e-12);
}

TEST(ScaleFromViewPair, SelfPairIsIllConditioned) {
  const FrameDirections a = Frame(0, Vec3(0, 0, 4), {Vec3(1, 1, -2)});
  try {
    ScaleFromViewPair(a, kZ0, a, kZ0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IllConditionedPair);
  }
}

TEST(ScaleFromViewPair, ZeroNumerator) {
  const FrameDirections a = Frame(0, Vec3(0, 0, 4), {Vec3(1, 1, -2)});
  const FrameDirections b = Frame(1, Vec3(7, 1, 4), {Vec3(0, 2, -3)});
  EXPECT_EQ(ScaleFromViewPair(a, kZ0, b, kZ0, 0), 0.0);
}

// Cameras straight above the origin at heights h; points at heights z seen
// with r = 1, so every pair's per-point ratio is exactly 1.
TrajectoryFamily Stacked(const std::vector<double>& heights, const std::vector<double>& z) {
  TrajectoryFamily f;
  for (std::size_t j = 0; j < z.size(); ++j) f.point_ids.push_back(static_cast<int>(j));
  for (std::size_t i = 0; i < heights.size(); ++i) {
    std::vector<Vec3> dirs;
    for (double zj : z) dirs.emplace_back(0.1 * zj, 0.0, zj - heights[i]);
    f.frames.push_back(Frame(static_cast<int>(i), Vec3(0, 0, heights[i]), dirs));
  }
  return f;
}

std::map<int, Plane> FlatPlanes(int n) {
  std::map<int, Plane> planes;
  for (int i = 0; i < n; ++i) planes[i] = kZ0;
  return planes;
}

TEST(RankViewPairs, LargerNumeratorFirst) {
  const TrajectoryFamily f = Stacked({5.0, 7.0, 5.01}, {0.5, 1.0, 1.5});
  const auto ranked = RankViewPairs(f, FlatPlanes(3), {{0, 2}, {0, 1}});
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].pair, FramePair(0, 1));
  EXPECT_NEAR(ranked[0].numerator, 2.0, 1e-12);
  EXPECT_NEAR(ranked[1].numerator, 0.01, 1e-12);
  EXPECT_EQ(ranked[0].distance_rank, 1);
  EXPECT_EQ(ranked[1].distance_rank, 2);
  EXPECT_EQ(ranked[0].variance_rank, ranked[1].variance_rank);
}

TEST(RankViewPairs, LowerVarianceFirst) {
  // Both pairs have numerator 1; per-point ratios are 1 / d_j.
  TrajectoryFamily f;
  f.point_ids = {0, 1, 2};
  const std::vector<double> d_low = {1.0, 1.001, 0.999};
  const std::vector<double> d_high = {0.5, 1.0, 2.0};
  auto dirs = [](const std::vector<double>& d) {
    std::vector<Vec3> out;
    for (double x : d) out.emplace_back(0, 0, -1.0 - x);
    return out;
  };
  const std::vector<Vec3> down(3, Vec3(0, 0, -1));
  f.frames = {Frame(0, Vec3(0, 0, 4), down), Frame(1, Vec3(0, 0, 5), dirs(d_high)),
              Frame(2, Vec3(0, 0, 10), down), Frame(3, Vec3(0, 0, 11), dirs(d_low))};
  const auto ranked = RankViewPairs(f, FlatPlanes(4), {{0, 1}, {2, 3}});
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].pair, FramePair(2, 3));
  // Brute-force unbiased variance of 1 / d.
  auto variance = [](const std::vector<double>& d) {
    double m = 0;
    for (double x : d) m += 1.0 / x;
    m /= d.size();
    double ss = 0;
    for (double x : d) ss += (1.0 / x - m) * (1.0 / x - m);
    return ss / (d.size() - 1);
  };
  EXPECT_NEAR(ranked[0].ratio_variance, variance(d_low), 1e-12);
  EXPECT_NEAR(ranked[1].ratio_variance, variance(d_high), 1e-12);
  EXPECT_EQ(ranked[0].distance_rank, 1);
  EXPECT_EQ(ranked[1].distance_rank, 1);
}

TEST(RankViewPairs, SingleCandidate) {
  const TrajectoryFamily f = Stacked({5.0, 7.0}, {0.5, 1.0});
  const auto ranked = RankViewPairs(f, FlatPlanes(2), {{0, 1}});
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].combined_rank, 2);
}

TEST(RankViewPairs, OutputIsPermutationWithMonotoneRank) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> h(3.0, 12.0);
  std::vector<double> heights;
  for (int i = 0; i < 12; ++i) heights.push_back(h(rng));
  TrajectoryFamily f = Stacked(heights, {0.3, 0.8, 1.2, 1.6});
  for (auto& frame : f.frames) {
    for (Vec3& v : frame.directions) v += RandomVec(rng, 0.05);
  }
  const auto candidates = CandidatePairs({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const auto ranked = RankViewPairs(f, FlatPlanes(12), candidates);
  ASSERT_EQ(ranked.size(), candidates.size());
  std::set<FramePair> seen;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    seen.insert(ranked[k].pair);
    EXPECT_EQ(ranked[k].combined_rank, ranked[k].distance_rank + ranked[k].variance_rank);
    if (k > 0) EXPECT_LE(ranked[k - 1].combined_rank, ranked[k].combined_rank);
  }
  EXPECT_EQ(seen, std::set<FramePair>(candidates.begin(), candidates.end()));
}

TEST(RankViewPairs, NoConditionedPairs) {
  const TrajectoryFamily f = Stacked({5.0, 5.0}, {0.5, 1.0});
  try {
    RankViewPairs(f, FlatPlanes(2), {{0, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidPairs);
  }
}

TEST(CandidatePairs, AllPairsAndStride) {
  EXPECT_EQ(CandidatePairs({3, 1, 2}), (std::vector<FramePair>{{1, 2}, {1, 3}, {2, 3}}));
  EXPECT_EQ(CandidatePairs({0, 1, 2, 3, 4}, 2), (std::vector<FramePair>{{0, 2}, {0, 4}, {2, 4}}));
  std::vector<int> many(1200);
  std::iota(many.begin(), many.end(), 0);
  EXPECT_EQ(CandidatePairs(many).size(), 400u * 399u / 2u);
}

TEST(EstimateScaleConstantDistance, SinglePointEqualsViewPairScale) {
  const FrameDirections a = Frame(0, Vec3(0, 0, 4), {Vec3(1, 1, -2)});
  const FrameDirections b = Frame(1, Vec3(3, 0, 6), {Vec3(0, 2, -3)});
  TrajectoryFamily f;
  f.point_ids = {0};
  f.frames = {a, b};
  const ScaleEstimate est = EstimateScaleConstantDistance(f, FlatPlanes(2), {{0, 1}});
  EXPECT_EQ(est.r, ScaleFromViewPair(a, kZ0, b, kZ0, 0));
  EXPECT_EQ(est.chosen_pair, FramePair(0, 1));
}

TEST(EstimateScaleConstantDistance, FallsThroughNegativePairs) {
  // Pair (0, 1) has the larger numerator but a negative ratio.
  TrajectoryFamily f;
  f.point_ids = {0, 1};
  f.frames = {Frame(0, Vec3(0, 0, 4), {Vec3(0, 0, -1), Vec3(0, 0, -2)}),
              Frame(1, Vec3(0, 0, 8), {Vec3(0, 0, -0.5), Vec3(0, 0, -1.5)}),
              Frame(2, Vec3(0, 0, 5), {Vec3(0, 0, -1.5), Vec3(0, 0, -2.5)})};
  const ScaleEstimate est = EstimateScaleConstantDistance(f, FlatPlanes(3), {{0, 1}, {0, 2}});
  EXPECT_EQ(est.chosen_pair, FramePair(0, 2));
  EXPECT_NEAR(est.r, 2.0, 1e-12);
}

TEST(EstimateScaleConstantDistance, AllDegenerateThrows) {
  const TrajectoryFamily f = Stacked({5.0, 5.0, 5.0}, {0.5, 1.0});
  try {
    EstimateScaleConstantDistance(f, FlatPlanes(3), CandidatePairs({0, 1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllPairsDegenerate);
  }
}

TEST(EstimateScaleIntersection, HandRays) {
  TrajectoryFamily f;
  f.point_ids = {0, 1};
  f.frames = {Frame(0, Vec3(0, 0, 10), {Vec3(0, 0, -1), Vec3(0, 0, -2)})};
  const ScaleEstimate est = EstimateScaleIntersection(f, FlatPlanes(1));
  EXPECT_EQ(est.frame_ratios, (std::vector<double>{5.0}));
  EXPECT_EQ(est.r, 5.0);
}

TEST(EstimateScaleIntersection, MedianOverFrames) {
  TrajectoryFamily f;
  f.point_ids = {0};
  f.frames = {Frame(0, Vec3(0, 0, 1), {Vec3(0, 0, -1)}),
              Frame(1, Vec3(0, 0, 2), {Vec3(0, 0, -1)}),
              Frame(2, Vec3(0, 0, 100), {Vec3(0, 0, -1)})};
  EXPECT_EQ(EstimateScaleIntersection(f, FlatPlanes(3)).r, 2.0);
}

TEST(EstimateScaleIntersection, NoForwardHits) {
  TrajectoryFamily f;
  f.point_ids = {0};
  f.frames = {Frame(0, Vec3(0, 0, 1), {Vec3(0, 0, 1)})};
  try {
    EstimateScaleIntersection(f, FlatPlanes(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidFrames);
  }
}

class SceneEstimates : public ::testing::Test {
 protected:
  static ReconstructResult Run(const synth::SyntheticScene& s, Method method) {
    ReconstructOptions options;
    options.method = method;
    return Reconstruct(s.object, s.background, s.labels, s.semantic, options);
  }
};

TEST_F(SceneEstimates, NoiseFreeRecovery) {
  synth::SceneConfig config;
  const synth::SyntheticScene s = synth::GenerateScene(config, 1);
  const ReconstructResult res = Run(s, Method::ConstantDistance);
  EXPECT_NEAR(res.estimate.r / 2.5, 1.0, 1e-6);
}

TEST_F(SceneEstimates, EveryConditionedPairAgrees) {
  synth::SceneConfig config;
  config.object_path = synth::PathShape::Arc;
  config.ground = synth::GroundShape::Inclined;
  const synth::SyntheticScene s = synth::GenerateScene(config, 2);
  const ReconstructResult res = Run(s, Method::ConstantDistance);
  const auto ranked = RankViewPairs(res.family, res.planes, CandidatePairs({0, 3, 7, 11, 15}));
  for (const ViewPairScore& score : ranked) {
    for (double r : score.ratios) EXPECT_NEAR(r / s.true_r, 1.0, 1e-9);
  }
}

TEST_F(SceneEstimates, ScaleInvariance) {
  synth::SceneConfig config;
  config.object_path = synth::PathShape::SCurve;
  config.noise.pixel_sigma = 0.5;
  const synth::SyntheticScene s = synth::GenerateScene(config, 3);
  const double base = Run(s, Method::ConstantDistance).estimate.r;
  for (double factor : {0.5, 2.0, 10.0}) {
    synth::SyntheticScene scaled = s;
    for (auto& [frame, pose] : scaled.object.cameras) pose.center *= factor;
    for (auto& p : scaled.object.points) p.position *= factor;
    const double r = Run(scaled, Method::ConstantDistance).estimate.r;
    EXPECT_NEAR(r * factor / base, 1.0, 1e-12) << "factor " << factor;
  }
}

TEST_F(SceneEstimates, DegenerateMotion) {
  synth::SceneConfig config;
  config.degenerate_parallel = true;
  const synth::SyntheticScene s = synth::GenerateScene(config, 4);
  try {
    Run(s, Method::ConstantDistance);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllPairsDegenerate);
  }
}

TEST_F(SceneEstimates, IntersectionWithContactPoints) {
  synth::SceneConfig config;
  config.include_contact_points = true;
  const synth::SyntheticScene s = synth::GenerateScene(config, 5);
  EXPECT_NEAR(Run(s, Method::Intersection).estimate.r / s.true_r, 1.0, 0.05);
}

TEST_F(SceneEstimates, IntersectionBiasDirection) {
  synth::SceneConfig config;
  const synth::SyntheticScene s = synth::GenerateScene(config, 6);
  const double r = Run(s, Method::Intersection).estimate.r;
  double min_height = std::numeric_limits<double>::infinity();
  for (const auto& [frame, pose] : s.background.cameras) {
    min_height = std::min(min_height, pose.center.z());
  }
  EXPECT_GE(r, s.true_r * (1.0 - synth::kClearance / min_height));
  EXPECT_GT(r, s.true_r);
}

TEST(TrajectoryFile, RoundTrip) {
  ScaleEstimate est;
  est.r = 2.5000000000000004;
  est.chosen_pair = FramePair(3, 9);
  Trajectory t;
  t[3] = {Vec3(0.1, 0.2, 0.3), Vec3(1.0 / 3.0, -2, 1e-300)};
  t[9] = {Vec3(4, 5, 6), Vec3(7, 8, 9)};
  const std::string text = SerializeTrajectory(est, t);
  const TrajectoryFile back = ParseTrajectory(text);
  EXPECT_EQ(back.method, "constant-distance");
  EXPECT_EQ(back.scale_ratio, est.r);
  EXPECT_EQ(back.chosen_pair, est.chosen_pair);
  EXPECT_EQ(back.frames, t);

  ScaleEstimate baseline;
  baseline.method = Method::Intersection;
  baseline.r = 1.0;
  EXPECT_FALSE(ParseTrajectory(SerializeTrajectory(baseline, t)).chosen_pair.has_value());
  EXPECT_THROW(ParseTrajectory("[]"), Error);
}

TEST(EncodePly, HeaderAndRows) {
  const std::string ply = EncodePly({Vec3(1, 2, 3), Vec3(0.5, -1, 1e-9)});
  EXPECT_EQ(ply.rfind("ply\nformat ascii 1.0\n", 0), 0u);
  EXPECT_NE(ply.find("element vertex 2\n"), std::string::npos);
  EXPECT_NE(ply.find("property double x\nproperty double y\nproperty double z\n"),
            std::string::npos);
  EXPECT_NE(ply.find("end_header\n1 2 3\n0.5 -1 1.0000000000000001e-09\n"), std::string::npos);
}

TEST(Method, Names) {
  EXPECT_EQ(ParseMethod(MethodName(Method::Intersection)), Method::Intersection);
  EXPECT_EQ(MethodName(Method::ConstantDistance), "constant-distance");
  EXPECT_THROW(ParseMethod("median"), Error);
}

}  // namespace
}  // namespace motraj::traj
