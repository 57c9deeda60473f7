#include "motraj/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "motraj/error.hpp"
#include "motraj/io.hpp"
#include "motraj/pipeline.hpp"
#include "motraj/synthetic.hpp"

namespace motraj::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + "\"";
}

int ExitCodeFor(const std::string& command, ErrorCode code) {
  switch (code) {
    case ErrorCode::AllPairsDegenerate:
    case ErrorCode::NoValidFrames:
    case ErrorCode::NoValidPairs:
      return kExitDegenerate;
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::NoRayHits:
      return kExitRegistration;
    case ErrorCode::NoCommonFrames:
      return command == "evaluate" ? kExitRegistration : kExitInput;
    default:
      return kExitInput;
  }
}

void Diagnose(std::ostream& err, const std::string& command, const Error& e) {
  err << "command=" << command << " error=" << ErrorCodeName(e.code());
  if (e.code() == ErrorCode::AllPairsDegenerate || e.code() == ErrorCode::NoValidPairs) {
    err << " diagnostic=degenerate-camera-motion";
  }
  err << " message=" << Quote(e.what()) << "\n";
}

struct ReconstructArgs {
  std::string object_sfm;
  std::string background_sfm;
  std::string labels_dir;
  std::string semantic_config;
  std::string out;
  std::string method = "constant-distance";
  int num_b = ground::kDefaultNumB;
  int ransac_iters = ground::RansacParams{}.iterations;
  double ransac_threshold = ground::RansacParams{}.threshold_fraction;
  std::uint64_t seed = 0;
  int pair_stride = 0;
  int threads = 1;
  bool write_ply = false;
};

struct EvaluateArgs {
  std::string trajectory;
  std::string object_sfm;
  std::string background_sfm;
  std::string gt;
  std::string out;
};

struct SynthArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<int> frames;
  std::optional<double> scale_ratio;
  std::optional<std::string> path;
  std::optional<std::string> ground;
  std::optional<double> ground_angle;
  std::optional<double> pixel_sigma;
  std::optional<double> point_sigma;
  std::optional<int> object_points;
  std::optional<int> ground_points;
  bool contact_points = false;
  bool degenerate_parallel = false;
};

int CmdReconstruct(const ReconstructArgs& a, std::ostream& out) {
  if (a.num_b < 3) throw Error(ErrorCode::InvalidConfig, "--num-b must be at least 3");
  if (a.ransac_iters < 1) throw Error(ErrorCode::InvalidConfig, "--ransac-iters must be positive");
  if (!(a.ransac_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "--ransac-threshold must be positive");
  }
  ReconstructOptions options;
  options.method = traj::ParseMethod(a.method);
  options.num_b = a.num_b;
  options.ransac.iterations = a.ransac_iters;
  options.ransac.threshold_fraction = a.ransac_threshold;
  options.seed = a.seed;
  options.pair_stride = a.pair_stride;
  options.threads = std::max(1, a.threads);

  const io::Reconstruction sfm_o = io::LoadReconstruction(a.object_sfm);
  const io::Reconstruction sfm_b = io::LoadReconstruction(a.background_sfm);
  const io::SemanticConfig semantic = io::LoadSemanticConfig(a.semantic_config);
  const auto labels = io::LoadLabelMaps(a.labels_dir);

  const ReconstructResult result = Reconstruct(sfm_o, sfm_b, labels, semantic, options);

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  io::WriteFile(dir / "trajectory.json",
                traj::SerializeTrajectory(result.estimate, result.trajectory));
  if (a.write_ply) {
    fs::create_directories(dir / "ply", ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + (dir / "ply").string());
    for (const auto& [frame, pts] : result.trajectory) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame%05d.ply", frame);
      io::WriteFile(dir / "ply" / name, traj::EncodePly(pts));
    }
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "reconstruct";
  manifest["inputs"] = {{"object_sfm", a.object_sfm},
                        {"background_sfm", a.background_sfm},
                        {"labels_dir", a.labels_dir},
                        {"semantic_config", a.semantic_config}};
  manifest["parameters"] = {{"method", a.method},
                            {"num_b", a.num_b},
                            {"ransac_iters", a.ransac_iters},
                            {"ransac_threshold", a.ransac_threshold},
                            {"seed", a.seed},
                            {"pair_stride", a.pair_stride},
                            {"threads", options.threads},
                            {"write_ply", a.write_ply}};
  json timings = json::array();
  for (const StageTiming& t : result.timings) {
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }
  manifest["timings"] = std::move(timings);
  json skipped = json::array();
  for (const auto& [frame, reason] : result.skipped_frames) {
    skipped.push_back({{"frame", frame}, {"reason", reason}});
  }
  manifest["skipped_frames"] = std::move(skipped);
  io::WriteFile(dir / "run-manifest.json", manifest.dump(1) + "\n");

  out << "scale_ratio=" << json(result.estimate.r).dump() << " method=" << a.method
      << " frames=" << result.trajectory.size() << "\n";
  return kExitSuccess;
}

int CmdEvaluate(const EvaluateArgs& a, std::ostream& out) {
  const traj::TrajectoryFile trajectory =
      traj::ParseTrajectory(io::ReadFile(a.trajectory), a.trajectory);
  const io::Reconstruction sfm_o = io::LoadReconstruction(a.object_sfm);
  const io::Reconstruction sfm_b = io::LoadReconstruction(a.background_sfm);
  const io::GroundTruthScene gt = io::LoadGroundTruth(a.gt);

  // Frame mismatch is an input error; report it before registration.
  std::string missing;
  for (const auto& [frame, pts] : trajectory.frames) {
    if (!gt.frames.contains(frame)) missing += " " + std::to_string(frame);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::FrameMissingFromGroundTruth,
                "trajectory frames missing from ground truth:" + missing);
  }

  const EvaluationResult result = Evaluate(trajectory, sfm_o, sfm_b, gt);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  io::WriteFile(dir / "eval.json",
                eval::SerializeEvalReport(result.estimated_r, result.reference, result.error));
  out << "trajectory_error_mean=" << json(result.error.overall_mean).dump()
      << " scale_ratio_reference=" << json(result.reference.ratio).dump() << "\n";
  return kExitSuccess;
}

int CmdSynth(const SynthArgs& a, std::ostream& out) {
  synth::SceneConfig config;
  if (!a.config.empty()) config = synth::ParseSceneConfig(io::ReadFile(a.config), a.config);
  if (a.frames) config.frame_count = *a.frames;
  if (a.scale_ratio) config.true_scale_ratio = *a.scale_ratio;
  if (a.path) config.object_path = synth::ParsePathShape(*a.path);
  if (a.ground) config.ground = synth::ParseGroundShape(*a.ground);
  if (a.ground_angle) config.ground_angle_deg = *a.ground_angle;
  if (a.pixel_sigma) config.noise.pixel_sigma = *a.pixel_sigma;
  if (a.point_sigma) config.noise.point_sigma = *a.point_sigma;
  if (a.object_points) config.object_point_count = *a.object_points;
  if (a.ground_points) config.ground_point_count = *a.ground_points;
  if (a.contact_points) config.include_contact_points = true;
  if (a.degenerate_parallel) config.degenerate_parallel = true;

  const synth::SyntheticScene scene = synth::GenerateScene(config, a.seed);
  const auto files = synth::WriteScene(scene, a.out);
  out << "files=" << files.size() << " true_scale_ratio=" << json(scene.true_r).dump() << "\n";
  return kExitSuccess;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object trajectory reconstruction from object and background SfM", "motraj"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ReconstructArgs rec;
  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "Estimate the scale ratio and write trajectory.json");
  reconstruct->add_option("--object-sfm", rec.object_sfm, "Object reconstruction JSON")->required();
  reconstruct->add_option("--background-sfm", rec.background_sfm, "Background reconstruction JSON")
      ->required();
  reconstruct->add_option("--labels-dir", rec.labels_dir, "Directory of frame%05d.pgm label maps")
      ->required();
  reconstruct->add_option("--semantic-config", rec.semantic_config, "semantic.json")->required();
  reconstruct->add_option("--out", rec.out, "Output directory")->required();
  reconstruct->add_option("--method", rec.method, "constant-distance or intersection")
      ->check(CLI::IsMember({"constant-distance", "intersection"}))
      ->capture_default_str();
  reconstruct->add_option("--num-b", rec.num_b, "Local ground points per frame")->capture_default_str();
  reconstruct->add_option("--ransac-iters", rec.ransac_iters, "RANSAC iterations")->capture_default_str();
  reconstruct->add_option("--ransac-threshold", rec.ransac_threshold,
                          "Inlier threshold as a fraction of the set's bounding-box diagonal")
      ->capture_default_str();
  reconstruct->add_option("--seed", rec.seed, "RANSAC seed")->capture_default_str();
  reconstruct->add_option("--pair-stride", rec.pair_stride, "Frame stride for view pairs (0 = auto)")
      ->capture_default_str();
  reconstruct->add_option("--threads", rec.threads, "Worker threads for plane fitting")
      ->capture_default_str();
  reconstruct->add_flag("--write-ply", rec.write_ply, "Also write ply/frame%05d.ply per frame");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a trajectory against ground truth");
  evaluate->add_option("--trajectory", ev.trajectory, "trajectory.json")->required();
  evaluate->add_option("--object-sfm", ev.object_sfm, "Object reconstruction JSON")->required();
  evaluate->add_option("--background-sfm", ev.background_sfm, "Background reconstruction JSON")
      ->required();
  evaluate->add_option("--gt", ev.gt, "gt.json")->required();
  evaluate->add_option("--out", ev.out, "Output directory")->required();

  SynthArgs sy;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene directory");
  synth_cmd->add_option("--config", sy.config, "scene-config.json");
  synth_cmd->add_option("--out", sy.out, "Output directory")->required();
  synth_cmd->add_option("--seed", sy.seed, "Scene seed")->capture_default_str();
  synth_cmd->add_option("--frames", sy.frames, "Frame count");
  synth_cmd->add_option("--scale-ratio", sy.scale_ratio, "Injected scale ratio");
  synth_cmd->add_option("--path", sy.path, "line, arc or s-curve");
  synth_cmd->add_option("--ground", sy.ground, "flat, inclined or piecewise");
  synth_cmd->add_option("--ground-angle", sy.ground_angle, "Incline in degrees");
  synth_cmd->add_option("--pixel-sigma", sy.pixel_sigma, "Pixel noise sigma");
  synth_cmd->add_option("--point-sigma", sy.point_sigma, "3D point noise sigma");
  synth_cmd->add_option("--object-points", sy.object_points, "Object point count");
  synth_cmd->add_option("--ground-points", sy.ground_points, "Ground point count");
  synth_cmd->add_flag("--contact-points", sy.contact_points, "Sample points where the wheels touch");
  synth_cmd->add_flag("--degenerate-parallel", sy.degenerate_parallel,
                      "Camera translates parallel to the object's ground plane");

  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error=usage message=" << Quote(e.what()) << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitInput;
  }

  std::string command = "motraj";
  try {
    if (reconstruct->parsed()) {
      command = "reconstruct";
      return CmdReconstruct(rec, out);
    }
    if (evaluate->parsed()) {
      command = "evaluate";
      return CmdEvaluate(ev, out);
    }
    command = "synth";
    return CmdSynth(sy, out);
  } catch (const Error& e) {
    Diagnose(err, command, e);
    return ExitCodeFor(command, e.code());
  } catch (const std::exception& e) {
    err << "command=" << command << " error=internal message=" << Quote(e.what()) << "\n";
    return kExitInput;
  }
}

}  // namespace motraj::cli
