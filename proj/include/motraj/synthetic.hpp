#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "motraj/io.hpp"

// Procedural scenes with exact ground truth: a box-shaped vehicle proxy with
// four wheels drives over planar terrain inside a walled courtyard while a
// camera circles it. The object reconstruction is the canonical object scaled
// by 1 / true_scale_ratio; the background reconstruction is in world units.
namespace motraj::synth {

enum class PathShape { Line, Arc, SCurve };
enum class GroundShape { Flat, Inclined, Piecewise };

struct CameraOrbit {
  double radius = 12.0;            // horizontal distance to the object
  double height = 9.0;             // mean height above the local ground
  double angular_speed_deg = 5.0;  // orbit advance per frame
  double height_variation = 3.0;   // height ramps from -var to +var
};

struct NoiseConfig {
  double pixel_sigma = 0.0;  // observation noise; points are re-triangulated
  double point_sigma = 0.0;  // isotropic 3D noise, world units
};

struct SceneConfig {
  int frame_count = 16;
  double true_scale_ratio = 2.5;
  PathShape object_path = PathShape::Line;
  GroundShape ground = GroundShape::Flat;
  double ground_angle_deg = 5.0;  // inclined / second piecewise plane
  CameraOrbit camera_orbit;
  NoiseConfig noise;
  int object_point_count = 200;
  int ground_point_count = 3000;
  int background_point_count = 300;
  bool include_contact_points = false;
  // Camera translates parallel to the ground plane the object moves on.
  bool degenerate_parallel = false;
  int image_width = 640;
  int image_height = 480;
  double focal_length = 600.0;
};

// Throws InvalidConfig.
void Validate(const SceneConfig& config);

SceneConfig ParseSceneConfig(std::string_view text,
                             std::string_view source = "<memory>");
std::string SerializeSceneConfig(const SceneConfig& config);

std::string PathShapeName(PathShape shape);
std::string GroundShapeName(GroundShape shape);
PathShape ParsePathShape(const std::string& name);
GroundShape ParseGroundShape(const std::string& name);

// Label ids written into the maps.
inline constexpr int kLabelSky = 0;  // not listed in the semantic config
inline constexpr int kLabelStreet = 1;
inline constexpr int kLabelGrass = 2;
inline constexpr int kLabelVehicle = 10;
inline constexpr int kLabelBuilding = 20;

// Canonical object dimensions. Wheel bottoms touch the ground at z = 0.
inline constexpr double kBodyLength = 4.0;
inline constexpr double kBodyWidth = 1.8;
inline constexpr double kClearance = 0.3;
inline constexpr double kObjectHeight = 1.6;

struct SyntheticScene {
  io::Reconstruction object;      // object-relative cameras and points
  io::Reconstruction background;  // world cameras and points
  std::map<int, io::LabelMap> labels;
  io::SemanticConfig semantic;
  io::GroundTruthScene gt;
  double true_r = 1.0;
  // Canonical (unscaled) object-frame positions of the object points.
  std::vector<geom::Vec3> canonical_points;
};

SyntheticScene GenerateScene(const SceneConfig& config, std::uint64_t seed);

// Writes object.json, background.json, labels/frame%05d.pgm, semantic.json,
// gt.json and object.obj. Returns the written paths.
std::vector<std::filesystem::path> WriteScene(const SyntheticScene& scene,
                                              const std::filesystem::path& directory);

// The vehicle proxy mesh (body plus four wheels) in canonical coordinates.
geom::TriangleMesh VehicleMesh();

}  // namespace motraj::synth
