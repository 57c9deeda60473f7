#pragma once

#include <map>
#include <string>
#include <vector>

#include "motraj/evaluation.hpp"
#include "motraj/ground.hpp"
#include "motraj/io.hpp"
#include "motraj/trajectory.hpp"

namespace motraj {

struct ReconstructOptions {
  traj::Method method = traj::Method::ConstantDistance;
  int num_b = ground::kDefaultNumB;
  ground::RansacParams ransac;
  std::uint64_t seed = 0;
  int pair_stride = 0;  // <= 0 selects automatically
  int threads = 1;      // per-frame plane fitting; results do not depend on it
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ReconstructResult {
  traj::TrajectoryFamily family;
  std::map<int, geom::Plane> planes;
  std::map<int, std::string> skipped_frames;  // frame -> error name
  traj::ScaleEstimate estimate;
  traj::Trajectory trajectory;
  std::vector<StageTiming> timings;
};

// Ground plane per paired frame from the background points around the
// object. Frames without ground support are reported in `skipped`.
std::map<int, geom::Plane> FitFramePlanes(const io::Reconstruction& sfm_o,
                                          const io::Reconstruction& sfm_b,
                                          const std::vector<ground::LabeledPoint>& labels,
                                          const std::vector<int>& frames,
                                          const ReconstructOptions& options,
                                          std::map<int, std::string>* skipped = nullptr);

// Full chain: pair cameras, classify, fit planes, build the trajectory family,
// estimate r and realize the trajectory.
ReconstructResult Reconstruct(const io::Reconstruction& sfm_o,
                              const io::Reconstruction& sfm_b,
                              const std::map<int, io::LabelMap>& label_maps,
                              const io::SemanticConfig& semantic,
                              const ReconstructOptions& options = {});

struct EvaluationResult {
  eval::RegistrationResult registration;
  traj::Trajectory registered;
  eval::TrajectoryErrorReport error;
  eval::ReferenceScale reference;
  double estimated_r = 0.0;
};

// Registers the background cameras to the ground truth and scores a
// reconstructed trajectory and its scale ratio.
EvaluationResult Evaluate(const traj::TrajectoryFile& trajectory,
                          const io::Reconstruction& sfm_o,
                          const io::Reconstruction& sfm_b,
                          const io::GroundTruthScene& gt);

}  // namespace motraj
