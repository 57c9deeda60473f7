#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "motraj/error.hpp"
#include "motraj/evaluation.hpp"
#include "motraj/mesh.hpp"
#include "test_util.hpp"

namespace motraj::eval {
namespace {

using geom::Mat3;
using testing::RandomPose;
using testing::RandomRotation;
using testing::RandomVec;

// recon = S^-1(gt): centers map through S^-1 and rotations pick up R_S.
std::map<int, Pose> Displace(const std::map<int, Pose>& gt, const SimilarityTransform& s) {
  const SimilarityTransform inv = s.Inverse();
  std::map<int, Pose> out;
  for (const auto& [frame, pose] : gt) {
    out[frame] = Pose{pose.rotation * s.rotation, inv(pose.center)};
  }
  return out;
}

void ExpectTransformNear(const SimilarityTransform& a, const SimilarityTransform& b, double tol) {
  EXPECT_NEAR(a.scale, b.scale, tol);
  EXPECT_LT((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
}

TEST(RegisterToGroundTruth, IdentityWhenEqual) {
  std::mt19937_64 rng(51);
  std::map<int, Pose> gt;
  for (int f = 0; f < 6; ++f) gt[f] = RandomPose(rng);
  const RegistrationResult r = RegisterToGroundTruth(gt, gt);
  ExpectTransformNear(r.transform, SimilarityTransform{}, 1e-9);
  EXPECT_LT(r.rms_center_residual, 1e-9);
}

TEST(RegisterToGroundTruth, KnownSimilarity) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    std::map<int, Pose> gt;
    for (int f = 0; f < 10; ++f) gt[f] = RandomPose(rng);
    const SimilarityTransform truth{3.0, RandomRotation(rng), RandomVec(rng, 5.0)};
    const RegistrationResult r = RegisterToGroundTruth(Displace(gt, truth), gt);
    ExpectTransformNear(r.transform, truth, 1e-9);
  }
}

TEST(RegisterToGroundTruth, StraightLineImposter) {
  std::mt19937_64 rng(53);
  std::map<int, Pose> gt;
  for (int f = 0; f < 10; ++f) gt[f] = Pose{RandomRotation(rng), Vec3(1.5 * f, 0, 0)};
  const SimilarityTransform truth{0.7, RandomRotation(rng), Vec3(2, -1, 4)};
  const auto recon = Displace(gt, truth);

  // Half-turn about the camera line leaves every center in place.
  const Mat3 half_turn = Eigen::AngleAxisd(M_PI, Vec3::UnitX()).toRotationMatrix();
  SimilarityTransform imposter = truth;
  imposter.rotation = half_turn * truth.rotation;
  imposter.translation = half_turn * truth.translation;

  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  std::vector<int> frames;
  for (const auto& [f, pose] : gt) {
    frames.push_back(f);
    src.push_back(recon.at(f).center);
    dst.push_back(pose.center);
  }
  EXPECT_LT(geom::RmsResidual(imposter, src, dst), 1e-9);
  EXPECT_LT(geom::RmsResidual(truth, src, dst), 1e-9);

  const RegistrationResult r = RegisterToGroundTruth(recon, gt);
  ExpectTransformNear(r.transform, truth, 1e-9);
  const AugmentedSets sets = BuildAugmentedSets(recon, gt, frames, r.magnitude, r.initial_scale);
  EXPECT_LT(geom::RmsResidual(truth, sets.source, sets.target),
            geom::RmsResidual(imposter, sets.source, sets.target));
}

TEST(RegisterToGroundTruth, Errors) {
  std::map<int, Pose> a = {{0, Pose{}}, {1, Pose{}}};
  std::map<int, Pose> b = {{5, Pose{}}};
  try {
    RegisterToGroundTruth(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCommonFrames);
  }
  try {
    RegisterToGroundTruth(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}

// Large flat plate: 10 x 10 square in z = 0 plus a thin rim below.
geom::TriangleMesh Plate() {
  return {{{-5, -5, 0}, {5, -5, 0}, {5, 5, 0}, {-5, 5, 0}}, {{0, 1, 2}, {0, 2, 3}}};
}

io::GroundTruthScene TwoFrameScene(std::mt19937_64& rng) {
  io::GroundTruthScene gt;
  gt.mesh = Plate();
  for (int f = 0; f < 2; ++f) {
    io::GroundTruthFrame g;
    g.object_rotation = RandomRotation(rng);
    g.object_translation = RandomVec(rng, 3.0);
    const Vec3 up = g.object_rotation.col(2);
    const Vec3 center = g.object_translation + 8.0 * up;
    // Camera looks straight down at the plate.
    Mat3 r;
    r.row(2) = -up.transpose();
    r.row(0) = g.object_rotation.col(0).transpose();
    r.row(1) = r.row(2).cross(r.row(0));
    g.camera = Pose{r, center};
    gt.frames[f] = g;
  }
  return gt;
}

TEST(TrajectoryError, PointsOnSurface) {
  std::mt19937_64 rng(54);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  traj::Trajectory t;
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (const auto& [f, g] : gt.frames) {
    for (int k = 0; k < 30; ++k) {
      t[f].push_back(g.object_rotation * Vec3(u(rng), u(rng), 0) + g.object_translation);
    }
  }
  const TrajectoryErrorReport rep = TrajectoryError(t, gt);
  EXPECT_NEAR(rep.overall_mean, 0.0, 1e-9);
  EXPECT_EQ(rep.point_count, 60);
}

TEST(TrajectoryError, UniformNormalOffset) {
  std::mt19937_64 rng(55);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  traj::Trajectory t;
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const auto& [f, g] : gt.frames) {
    for (int k = 0; k < 30; ++k) {
      const double side = k % 2 ? 0.2 : -0.2;
      t[f].push_back(g.object_rotation * Vec3(u(rng), u(rng), side) + g.object_translation);
    }
  }
  const TrajectoryErrorReport rep = TrajectoryError(t, gt);
  EXPECT_NEAR(rep.overall_mean, 0.2, 1e-9);
  for (const auto& [f, m] : rep.per_frame_mean) EXPECT_NEAR(m, 0.2, 1e-9);
}

TEST(TrajectoryError, RigidInvariance) {
  std::mt19937_64 rng(56);
  io::GroundTruthScene gt = TwoFrameScene(rng);
  traj::Trajectory t;
  for (const auto& [f, g] : gt.frames) {
    for (int k = 0; k < 20; ++k) t[f].push_back(RandomVec(rng, 6.0));
  }
  const double before = TrajectoryError(t, gt).overall_mean;
  const SimilarityTransform rigid{1.0, RandomRotation(rng), RandomVec(rng, 10.0)};
  const traj::Trajectory moved = Transform(rigid, t);
  for (auto& [f, g] : gt.frames) {
    g.object_rotation = rigid.rotation * g.object_rotation;
    g.object_translation = rigid(g.object_translation);
  }
  EXPECT_NEAR(TrajectoryError(moved, gt).overall_mean, before, 1e-9);
}

TEST(TrajectoryError, MissingFrame) {
  std::mt19937_64 rng(57);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  traj::Trajectory t;
  t[0] = {Vec3::Zero()};
  t[7] = {Vec3::Zero()};
  try {
    TrajectoryError(t, gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameMissingFromGroundTruth);
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

// Object reconstruction whose cameras see the plate exactly as the GT cameras
// do, with all coordinates divided by `shrink`.
io::Reconstruction ShrunkObject(const io::GroundTruthScene& gt, double shrink,
                                std::mt19937_64& rng) {
  io::Reconstruction r;
  r.width = r.height = 100;
  for (const auto& [f, g] : gt.frames) {
    r.cameras[f] = Pose{g.camera.rotation * g.object_rotation,
                        g.object_rotation.transpose() * (g.camera.center - g.object_translation) / shrink};
  }
  std::uniform_real_distribution<double> u(-4.5, 4.5);
  for (int k = 0; k < 25; ++k) {
    r.points.push_back({k, Vec3(u(rng), u(rng), 0) / shrink, {}});
  }
  return r;
}

TEST(ReferenceScaleRatio, RadialScaling) {
  std::mt19937_64 rng(58);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  const io::Reconstruction o = ShrunkObject(gt, 3.0, rng);
  RegistrationResult reg;
  const ReferenceScale ref = ReferenceScaleRatio(o, gt, reg);
  EXPECT_NEAR(ref.object_to_world, 3.0, 1e-9);
  EXPECT_NEAR(ref.ratio, 3.0, 1e-9);
  EXPECT_EQ(ref.ray_misses, 0);
}

TEST(ReferenceScaleRatio, BackgroundScaleDivides) {
  std::mt19937_64 rng(59);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  const io::Reconstruction o = ShrunkObject(gt, 1.0, rng);
  RegistrationResult reg;
  reg.transform.scale = 2.0;
  const ReferenceScale ref = ReferenceScaleRatio(o, gt, reg);
  EXPECT_NEAR(ref.ratio, 0.5, 1e-9);
  EXPECT_NEAR(ref.object_to_world, ref.ratio * ref.background_to_world, 1e-12);
}

TEST(ReferenceScaleRatio, PermutationInvariantAndSkipsMisses) {
  std::mt19937_64 rng(60);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  io::Reconstruction o = ShrunkObject(gt, 2.0, rng);
  o.points.push_back({99, Vec3(50, 50, 0), {}});  // off the plate
  RegistrationResult reg;
  const ReferenceScale a = ReferenceScaleRatio(o, gt, reg);
  std::shuffle(o.points.begin(), o.points.end(), rng);
  const ReferenceScale b = ReferenceScaleRatio(o, gt, reg);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_EQ(a.ray_misses, 2);
}

TEST(ReferenceScaleRatio, NoHits) {
  std::mt19937_64 rng(61);
  const io::GroundTruthScene gt = TwoFrameScene(rng);
  io::Reconstruction o = ShrunkObject(gt, 1.0, rng);
  o.points = {{0, Vec3(50, 50, 0), {}}};
  try {
    ReferenceScaleRatio(o, gt, RegistrationResult{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRayHits);
  }
}

TEST(SerializeEvalReport, Fields) {
  ReferenceScale ref;
  ref.ratio = 2.0;
  TrajectoryErrorReport err;
  err.per_frame_mean = {{0, 0.1}, {3, 0.3}};
  err.overall_mean = 0.2;
  const std::string text = SerializeEvalReport(2.5, ref, err);
  EXPECT_NE(text.find("\"scale_ratio_deviation\": 0.25"), std::string::npos);
  EXPECT_NE(text.find("\"scale_ratio_estimated\": 2.5"), std::string::npos);
  EXPECT_NE(text.find("\"trajectory_error_mean\": 0.2"), std::string::npos);
  EXPECT_NE(text.find("\"frame\": 3"), std::string::npos);
}

}  // namespace
}  // namespace motraj::eval
