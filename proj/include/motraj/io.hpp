#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "motraj/geometry.hpp"
#include "motraj/mesh.hpp"

// On-disk formats consumed and produced by the pipeline:
//
//   reconstruction  {"frame_size":[w,h],
//                    "cameras":[{"frame":i,"R":[9 row-major],"c":[3]}],
//                    "points":[{"id":j,"xyz":[3],"obs":[{"frame":i,"uv":[2]}]}]}
//   semantic.json   {"ground":[...],"object":[...],"background":[...]}
//   labels          frame%05d.pgm, P2 or P5, maxval <= 255
//   gt.json         {"mesh":"object.obj",
//                    "frames":[{"frame":i,"camera":{"R":[9],"c":[3]},
//                               "object":{"R":[9],"t":[3]}}]}
//   mesh            ASCII OBJ, v/f records, 1-based, polygons fan-triangulated
//
// Rotations are world-to-camera (see geom::Pose).
namespace motraj::io {

using geom::Pose;
using geom::Vec2;
using geom::Vec3;

// Pixel coordinates: u to the right, v down, origin at the top-left corner of
// the image. Pixel (col, row) covers [col, col+1) x [row, row+1).
struct Observation {
  int frame = 0;
  Vec2 pixel = Vec2::Zero();
};

struct ScenePoint {
  int id = 0;
  Vec3 position = Vec3::Zero();
  std::vector<Observation> observations;
};

struct Reconstruction {
  int width = 0;
  int height = 0;
  std::map<int, Pose> cameras;
  std::vector<ScenePoint> points;
};

// Throws ValidationError naming the offending camera or point.
void Validate(const Reconstruction& recon);

Reconstruction ParseReconstruction(std::string_view text,
                                   std::string_view source = "<memory>");
Reconstruction LoadReconstruction(const std::filesystem::path& path);
std::string SerializeReconstruction(const Reconstruction& recon);
void WriteReconstruction(const Reconstruction& recon,
                         const std::filesystem::path& path);

// Sorted frame ids registered in both reconstructions. Throws NoCommonFrames.
std::vector<int> PairCameras(const Reconstruction& a, const Reconstruction& b);

enum class SemanticClass { Ground, Object, Background };

struct SemanticConfig {
  std::set<int> ground;
  std::set<int> object;
  std::set<int> background;

  // Labels outside all three sets resolve to Background.
  SemanticClass Resolve(int label) const;
};

void Validate(const SemanticConfig& config);
SemanticConfig ParseSemanticConfig(std::string_view text,
                                   std::string_view source = "<memory>");
SemanticConfig LoadSemanticConfig(const std::filesystem::path& path);
std::string SerializeSemanticConfig(const SemanticConfig& config);

struct LabelMap {
  int frame = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // row-major

  int at(int col, int row) const { return labels[row * width + col]; }
  // Sub-pixel lookups use the pixel whose cell contains the position.
  bool Contains(const Vec2& pixel) const;
  int at(const Vec2& pixel) const;
};

LabelMap ParsePgm(std::string_view bytes, int frame,
                  std::string_view source = "<memory>");
// Binary P5 encoding.
std::string EncodePgm(const LabelMap& map);
std::string LabelMapFileName(int frame);

// Loads every frame%05d.pgm in `directory`. All maps must share one size.
// Label ids are kept raw; SemanticConfig::Resolve maps them to classes.
std::map<int, LabelMap> LoadLabelMaps(const std::filesystem::path& directory);

struct GroundTruthFrame {
  Pose camera;
  // Maps canonical mesh coordinates into the world: x_w = R * x + t.
  geom::Mat3 object_rotation = geom::Mat3::Identity();
  Vec3 object_translation = Vec3::Zero();
};

struct GroundTruthScene {
  std::string mesh_path;  // as written in gt.json, relative to its directory
  std::map<int, GroundTruthFrame> frames;
  geom::TriangleMesh mesh;

  geom::TriangleMesh PosedMesh(int frame) const;
};

geom::TriangleMesh ParseObj(std::string_view text,
                            std::string_view source = "<memory>");
std::string SerializeObj(const geom::TriangleMesh& mesh);

GroundTruthScene LoadGroundTruth(const std::filesystem::path& path);
// gt.json body only; the mesh is written separately with SerializeObj.
std::string SerializeGroundTruth(const GroundTruthScene& scene);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace motraj::io
