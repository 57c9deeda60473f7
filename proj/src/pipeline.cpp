#include "motraj/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <optional>
#include <thread>

#include "motraj/error.hpp"

namespace motraj {

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>* out) : out_(out) {}
  void Lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    out_->push_back({stage, std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>* out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct FrameOutcome {
  std::optional<geom::Plane> plane;
  std::string skip_reason;
  std::exception_ptr failure;
};

std::vector<io::Observation> ObjectObservationsInFrame(const io::Reconstruction& sfm_o,
                                                       int frame) {
  std::vector<io::Observation> out;
  for (const io::ScenePoint& p : sfm_o.points) {
    for (const io::Observation& o : p.observations) {
      if (o.frame == frame) out.push_back(o);
    }
  }
  return out;
}

}  // namespace

std::map<int, geom::Plane> FitFramePlanes(const io::Reconstruction& sfm_o,
                                          const io::Reconstruction& sfm_b,
                                          const std::vector<ground::LabeledPoint>& labels,
                                          const std::vector<int>& frames,
                                          const ReconstructOptions& options,
                                          std::map<int, std::string>* skipped) {
  std::vector<FrameOutcome> outcomes(frames.size());
  auto fit_one = [&](std::size_t k) {
    const int frame = frames[k];
    FrameOutcome& out = outcomes[k];
    try {
      const auto object_obs = ObjectObservationsInFrame(sfm_o, frame);
      const auto measurements = ground::GroundMeasurementsInFrame(sfm_b, labels, frame);
      const ground::LocalGroundSet set =
          ground::SelectLocalGroundPoints(frame, object_obs, measurements, options.num_b);
      const ground::GroundPlaneFit fit =
          ground::FitGroundPlane(set, sfm_b.cameras.at(frame).center,
                                 ground::FrameSeed(options.seed, frame), options.ransac);
      out.plane = fit.plane;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoGroundObservations ||
          e.code() == ErrorCode::DegenerateGroundSet) {
        out.skip_reason = std::string(ErrorCodeName(e.code()));
      } else {
        out.failure = std::current_exception();
      }
    } catch (...) {
      out.failure = std::current_exception();
    }
  };

  const int threads =
      std::clamp(options.threads, 1, std::max(1, static_cast<int>(frames.size())));
  if (threads == 1) {
    for (std::size_t k = 0; k < frames.size(); ++k) fit_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < frames.size(); k = next++) fit_one(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::map<int, geom::Plane> planes;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (outcomes[k].failure) std::rethrow_exception(outcomes[k].failure);
    if (outcomes[k].plane) {
      planes.emplace(frames[k], *outcomes[k].plane);
    } else if (skipped != nullptr) {
      (*skipped)[frames[k]] = outcomes[k].skip_reason;
    }
  }
  return planes;
}

ReconstructResult Reconstruct(const io::Reconstruction& sfm_o,
                              const io::Reconstruction& sfm_b,
                              const std::map<int, io::LabelMap>& label_maps,
                              const io::SemanticConfig& semantic,
                              const ReconstructOptions& options) {
  ReconstructResult result;
  StageClock clock(&result.timings);

  const std::vector<int> frames = io::PairCameras(sfm_o, sfm_b);
  clock.Lap("pair_cameras");
  const auto labels = ground::ClassifyPoints(sfm_b, label_maps, semantic);
  clock.Lap("classify_points");
  result.planes =
      FitFramePlanes(sfm_o, sfm_b, labels, frames, options, &result.skipped_frames);
  clock.Lap("fit_ground_planes");
  result.family = traj::ComputeFamily(sfm_o, sfm_b, frames);
  clock.Lap("compute_family");

  if (options.method == traj::Method::ConstantDistance) {
    std::vector<int> with_plane;
    for (const auto& [frame, plane] : result.planes) with_plane.push_back(frame);
    const auto candidates = traj::CandidatePairs(with_plane, options.pair_stride);
    result.estimate =
        traj::EstimateScaleConstantDistance(result.family, result.planes, candidates);
  } else {
    result.estimate = traj::EstimateScaleIntersection(result.family, result.planes);
  }
  clock.Lap("estimate_scale");
  result.trajectory = traj::RealizeTrajectory(result.family, result.estimate.r);
  clock.Lap("realize_trajectory");
  return result;
}

EvaluationResult Evaluate(const traj::TrajectoryFile& trajectory,
                          const io::Reconstruction& sfm_o,
                          const io::Reconstruction& sfm_b,
                          const io::GroundTruthScene& gt) {
  std::map<int, geom::Pose> gt_cameras;
  for (const auto& [frame, g] : gt.frames) gt_cameras.emplace(frame, g.camera);

  EvaluationResult result;
  result.estimated_r = trajectory.scale_ratio;
  result.registration = eval::RegisterToGroundTruth(sfm_b.cameras, gt_cameras);
  result.registered = eval::Transform(result.registration.transform, trajectory.frames);
  result.error = eval::TrajectoryError(result.registered, gt);
  result.reference = eval::ReferenceScaleRatio(sfm_o, gt, result.registration);
  return result;
}

}  // namespace motraj
