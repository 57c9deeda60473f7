#include "motraj/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "motraj/error.hpp"

namespace motraj::io {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void ParseFail(std::string_view source, const std::string& what) {
  throw Error(ErrorCode::ParseError, std::string(source) + ": " + what);
}

json ParseJson(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    ParseFail(source, e.what());
  }
}

const json& Field(const json& obj, const char* key, std::string_view source,
                  const std::string& context) {
  if (!obj.is_object()) ParseFail(source, context + " is not an object");
  const auto it = obj.find(key);
  if (it == obj.end()) {
    ParseFail(source, context + ": missing field \"" + key + "\"");
  }
  return *it;
}

int AsInt(const json& value, std::string_view source,
          const std::string& context) {
  if (!value.is_number_integer()) {
    ParseFail(source, context + ": expected an integer");
  }
  return value.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> AsVector(const json& value, std::string_view source,
                                     const std::string& context) {
  if (!value.is_array() || value.size() != static_cast<std::size_t>(N)) {
    ParseFail(source, context + ": expected an array of " + std::to_string(N) +
                          " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int k = 0; k < N; ++k) {
    if (!value[k].is_number()) {
      ParseFail(source, context + "[" + std::to_string(k) + "]: not a number");
    }
    out(k) = value[k].get<double>();
  }
  return out;
}

geom::Mat3 AsRotation(const json& value, std::string_view source,
                      const std::string& context) {
  const auto flat = AsVector<9>(value, source, context);
  geom::Mat3 rot;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot(r, c) = flat(3 * r + c);
  }
  return rot;
}

json ToJson(const geom::Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

template <typename Derived>
json ToJson(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

std::set<int> AsLabelSet(const json& value, std::string_view source,
                         const std::string& context) {
  if (!value.is_array()) ParseFail(source, context + ": expected an array");
  std::set<int> out;
  for (const json& v : value) out.insert(AsInt(v, source, context));
  return out;
}

}  // namespace

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void WriteFile(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

// -- Reconstruction ---------------------------------------------------------

void Validate(const Reconstruction& recon) {
  if (recon.width <= 0 || recon.height <= 0) {
    throw Error(ErrorCode::ValidationError, "frame_size must be positive");
  }
  for (const auto& [frame, pose] : recon.cameras) {
    if (frame < 0) {
      throw Error(ErrorCode::ValidationError,
                  "camera " + std::to_string(frame) + ": negative frame id");
    }
    if (!geom::IsValid(pose)) {
      throw Error(ErrorCode::ValidationError,
                  "camera " + std::to_string(frame) +
                      ": rotation is not orthonormal with det +1");
    }
  }
  std::set<int> ids;
  for (const ScenePoint& p : recon.points) {
    const std::string name = "point " + std::to_string(p.id);
    if (!ids.insert(p.id).second) {
      throw Error(ErrorCode::ValidationError, name + ": duplicate id");
    }
    if (!p.position.allFinite()) {
      throw Error(ErrorCode::ValidationError, name + ": non-finite position");
    }
    std::set<int> frames;
    for (const Observation& o : p.observations) {
      if (!recon.cameras.contains(o.frame)) {
        throw Error(ErrorCode::ValidationError,
                    name + ": observation references missing frame " +
                        std::to_string(o.frame));
      }
      if (!frames.insert(o.frame).second) {
        throw Error(ErrorCode::ValidationError,
                    name + ": observed twice in frame " +
                        std::to_string(o.frame));
      }
      if (!o.pixel.allFinite() || o.pixel.x() < 0.0 || o.pixel.y() < 0.0 ||
          o.pixel.x() >= recon.width || o.pixel.y() >= recon.height) {
        throw Error(ErrorCode::ValidationError,
                    name + ": observation in frame " + std::to_string(o.frame) +
                        " lies outside the image");
      }
    }
  }
}

Reconstruction ParseReconstruction(std::string_view text,
                                   std::string_view source) {
  const json doc = ParseJson(text, source);
  Reconstruction recon;

  const json& size = Field(doc, "frame_size", source, "document");
  if (!size.is_array() || size.size() != 2) {
    ParseFail(source, "frame_size: expected [width, height]");
  }
  recon.width = AsInt(size[0], source, "frame_size[0]");
  recon.height = AsInt(size[1], source, "frame_size[1]");

  const json& cams = Field(doc, "cameras", source, "document");
  if (!cams.is_array()) ParseFail(source, "cameras: expected an array");
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const std::string ctx = "cameras[" + std::to_string(k) + "]";
    const int frame = AsInt(Field(cams[k], "frame", source, ctx), source,
                            ctx + ".frame");
    Pose pose;
    pose.rotation = AsRotation(Field(cams[k], "R", source, ctx), source, ctx + ".R");
    pose.center = AsVector<3>(Field(cams[k], "c", source, ctx), source, ctx + ".c");
    if (!recon.cameras.emplace(frame, pose).second) {
      throw Error(ErrorCode::ValidationError,
                  std::string(source) + ": camera " + std::to_string(frame) +
                      " listed twice");
    }
  }

  const json& pts = Field(doc, "points", source, "document");
  if (!pts.is_array()) ParseFail(source, "points: expected an array");
  recon.points.reserve(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const std::string ctx = "points[" + std::to_string(k) + "]";
    ScenePoint p;
    p.id = AsInt(Field(pts[k], "id", source, ctx), source, ctx + ".id");
    p.position = AsVector<3>(Field(pts[k], "xyz", source, ctx), source, ctx + ".xyz");
    const json& obs = Field(pts[k], "obs", source, ctx);
    if (!obs.is_array()) ParseFail(source, ctx + ".obs: expected an array");
    p.observations.reserve(obs.size());
    for (std::size_t m = 0; m < obs.size(); ++m) {
      const std::string octx = ctx + ".obs[" + std::to_string(m) + "]";
      Observation o;
      o.frame = AsInt(Field(obs[m], "frame", source, octx), source, octx + ".frame");
      o.pixel = AsVector<2>(Field(obs[m], "uv", source, octx), source, octx + ".uv");
      p.observations.push_back(o);
    }
    recon.points.push_back(std::move(p));
  }

  try {
    Validate(recon);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.what());
  }
  return recon;
}

Reconstruction LoadReconstruction(const fs::path& path) {
  return ParseReconstruction(ReadFile(path), path.string());
}

std::string SerializeReconstruction(const Reconstruction& recon) {
  json doc;
  doc["frame_size"] = {recon.width, recon.height};
  json cams = json::array();
  for (const auto& [frame, pose] : recon.cameras) {
    cams.push_back({{"frame", frame}, {"R", ToJson(pose.rotation)}, {"c", ToJson(pose.center)}});
  }
  doc["cameras"] = std::move(cams);
  json pts = json::array();
  for (const ScenePoint& p : recon.points) {
    json obs = json::array();
    for (const Observation& o : p.observations) {
      obs.push_back({{"frame", o.frame}, {"uv", ToJson(o.pixel)}});
    }
    pts.push_back({{"id", p.id}, {"xyz", ToJson(p.position)}, {"obs", std::move(obs)}});
  }
  doc["points"] = std::move(pts);
  return doc.dump(1) + "\n";
}

void WriteReconstruction(const Reconstruction& recon, const fs::path& path) {
  WriteFile(path, SerializeReconstruction(recon));
}

std::vector<int> PairCameras(const Reconstruction& a, const Reconstruction& b) {
  std::vector<int> common;
  for (const auto& [frame, pose] : a.cameras) {
    if (b.cameras.contains(frame)) common.push_back(frame);
  }
  if (common.empty()) {
    throw Error(ErrorCode::NoCommonFrames,
                "object and background reconstructions share no frames");
  }
  return common;
}

// -- Semantics --------------------------------------------------------------

SemanticClass SemanticConfig::Resolve(int label) const {
  if (ground.contains(label)) return SemanticClass::Ground;
  if (object.contains(label)) return SemanticClass::Object;
  return SemanticClass::Background;
}

void Validate(const SemanticConfig& config) {
  if (config.ground.empty() && config.object.empty() &&
      config.background.empty()) {
    throw Error(ErrorCode::ValidationError, "semantic config is empty");
  }
  auto check = [](const std::set<int>& a, const std::set<int>& b,
                   const char* names) {
    for (int label : a) {
      if (b.contains(label)) {
        throw Error(ErrorCode::ValidationError,
                    std::string("label ") + std::to_string(label) +
                        " appears in both " + names);
      }
    }
  };
  check(config.ground, config.object, "ground and object");
  check(config.ground, config.background, "ground and background");
  check(config.object, config.background, "object and background");
}

SemanticConfig ParseSemanticConfig(std::string_view text,
                                   std::string_view source) {
  const json doc = ParseJson(text, source);
  SemanticConfig config;
  config.ground = AsLabelSet(Field(doc, "ground", source, "document"), source, "ground");
  config.object = AsLabelSet(Field(doc, "object", source, "document"), source, "object");
  config.background =
      AsLabelSet(Field(doc, "background", source, "document"), source, "background");
  try {
    Validate(config);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.what());
  }
  return config;
}

SemanticConfig LoadSemanticConfig(const fs::path& path) {
  return ParseSemanticConfig(ReadFile(path), path.string());
}

std::string SerializeSemanticConfig(const SemanticConfig& config) {
  json doc;
  doc["ground"] = config.ground;
  doc["object"] = config.object;
  doc["background"] = config.background;
  return doc.dump(1) + "\n";
}

// -- Label maps -------------------------------------------------------------

bool LabelMap::Contains(const Vec2& pixel) const {
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < width &&
         pixel.y() < height;
}

int LabelMap::at(const Vec2& pixel) const {
  return at(static_cast<int>(std::floor(pixel.x())),
            static_cast<int>(std::floor(pixel.y())));
}

namespace {

class PgmHeaderReader {
 public:
  PgmHeaderReader(std::string_view bytes, std::string_view source)
      : bytes_(bytes), source_(source) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int NextInt(const char* what) {
    SkipSpaceAndComments();
    int value = 0;
    const char* begin = bytes_.data() + pos_;
    const char* end = bytes_.data() + bytes_.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) {
      ParseFail(source_, std::string("PGM: expected ") + what);
    }
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

LabelMap ParsePgm(std::string_view bytes, int frame, std::string_view source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    ParseFail(source, "PGM: expected P2 or P5 magic");
  }
  const bool binary = bytes[1] == '5';
  PgmHeaderReader reader(bytes, source);
  reader.advance(2);
  LabelMap map;
  map.frame = frame;
  map.width = reader.NextInt("width");
  map.height = reader.NextInt("height");
  const int maxval = reader.NextInt("maxval");
  if (map.width <= 0 || map.height <= 0) ParseFail(source, "PGM: non-positive size");
  if (maxval <= 0 || maxval > 255) ParseFail(source, "PGM: maxval must be in 1..255");

  const std::size_t count = static_cast<std::size_t>(map.width) * map.height;
  map.labels.resize(count);
  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (reader.pos() >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
      ParseFail(source, "PGM: missing raster separator");
    }
    reader.advance(1);
    if (bytes.size() - reader.pos() < count) ParseFail(source, "PGM: truncated raster");
    for (std::size_t k = 0; k < count; ++k) {
      const auto v = static_cast<std::uint8_t>(bytes[reader.pos() + k]);
      if (v > maxval) ParseFail(source, "PGM: value exceeds maxval");
      map.labels[k] = v;
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      const int v = reader.NextInt("pixel value");
      if (v < 0 || v > maxval) ParseFail(source, "PGM: value exceeds maxval");
      map.labels[k] = static_cast<std::uint8_t>(v);
    }
  }
  return map;
}

std::string EncodePgm(const LabelMap& map) {
  std::string out = "P5\n" + std::to_string(map.width) + " " +
                    std::to_string(map.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(map.labels.data()), map.labels.size());
  return out;
}

std::string LabelMapFileName(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame%05d.pgm", frame);
  return buf;
}

std::map<int, LabelMap> LoadLabelMaps(const fs::path& directory) {
  if (!fs::is_directory(directory)) {
    throw Error(ErrorCode::IoError, "not a directory: " + directory.string());
  }
  static const std::regex kName(R"(frame(\d{5})\.pgm)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() &&
        std::regex_match(entry.path().filename().string(), kName)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::map<int, LabelMap> maps;
  for (const fs::path& file : files) {
    const int frame = std::stoi(file.filename().string().substr(5, 5));
    LabelMap map = ParsePgm(ReadFile(file), frame, file.string());
    if (!maps.empty() && (map.width != maps.begin()->second.width ||
                          map.height != maps.begin()->second.height)) {
      throw Error(ErrorCode::DimensionMismatch,
                  file.string() + ": label map size differs from " +
                      LabelMapFileName(maps.begin()->first));
    }
    maps.emplace(frame, std::move(map));
  }
  return maps;
}

// -- Ground truth -----------------------------------------------------------

geom::TriangleMesh GroundTruthScene::PosedMesh(int frame) const {
  const GroundTruthFrame& f = frames.at(frame);
  return geom::Transformed(mesh, f.object_rotation, f.object_translation);
}

geom::TriangleMesh ParseObj(std::string_view text, std::string_view source) {
  geom::TriangleMesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) ParseFail(source, where + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ls >> token) {
        // Accept v, v/vt, v//vn and v/vt/vn; only the position index matters.
        int idx = 0;
        const auto [ptr, ec] =
            std::from_chars(token.data(), token.data() + token.size(), idx);
        if (ec != std::errc() || ptr == token.data()) {
          ParseFail(source, where + ": bad face index '" + token + "'");
        }
        if (idx < 1) ParseFail(source, where + ": face indices are 1-based");
        face.push_back(idx - 1);
      }
      if (face.size() < 3) ParseFail(source, where + ": face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        mesh.triangles.push_back({face[0], face[k], face[k + 1]});
      }
    }
    // Other records (vn, vt, o, g, s, usemtl, ...) are ignored.
  }
  try {
    geom::Validate(mesh);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.what());
  }
  return mesh;
}

std::string SerializeObj(const geom::TriangleMesh& mesh) {
  std::string out;
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

GroundTruthScene LoadGroundTruth(const fs::path& path) {
  const std::string source = path.string();
  const json doc = ParseJson(ReadFile(path), source);
  GroundTruthScene scene;
  const json& mesh = Field(doc, "mesh", source, "document");
  if (!mesh.is_string()) ParseFail(source, "mesh: expected a path string");
  scene.mesh_path = mesh.get<std::string>();

  const json& frames = Field(doc, "frames", source, "document");
  if (!frames.is_array()) ParseFail(source, "frames: expected an array");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string ctx = "frames[" + std::to_string(k) + "]";
    const int id = AsInt(Field(frames[k], "frame", source, ctx), source, ctx + ".frame");
    const json& cam = Field(frames[k], "camera", source, ctx);
    const json& obj = Field(frames[k], "object", source, ctx);
    GroundTruthFrame f;
    f.camera.rotation = AsRotation(Field(cam, "R", source, ctx + ".camera"), source,
                                   ctx + ".camera.R");
    f.camera.center = AsVector<3>(Field(cam, "c", source, ctx + ".camera"), source,
                                  ctx + ".camera.c");
    f.object_rotation = AsRotation(Field(obj, "R", source, ctx + ".object"), source,
                                   ctx + ".object.R");
    f.object_translation = AsVector<3>(Field(obj, "t", source, ctx + ".object"),
                                       source, ctx + ".object.t");
    if (!geom::IsValid(f.camera) || !geom::IsRotation(f.object_rotation) ||
        !f.object_translation.allFinite()) {
      throw Error(ErrorCode::ValidationError,
                  source + ": frame " + std::to_string(id) + ": invalid pose");
    }
    if (!scene.frames.emplace(id, f).second) {
      throw Error(ErrorCode::ValidationError,
                  source + ": frame " + std::to_string(id) + " listed twice");
    }
  }

  const fs::path mesh_file = path.parent_path() / scene.mesh_path;
  if (!fs::is_regular_file(mesh_file)) {
    throw Error(ErrorCode::MissingMesh, source + ": mesh not found: " + mesh_file.string());
  }
  scene.mesh = ParseObj(ReadFile(mesh_file), mesh_file.string());
  return scene;
}

std::string SerializeGroundTruth(const GroundTruthScene& scene) {
  json doc;
  doc["mesh"] = scene.mesh_path;
  json frames = json::array();
  for (const auto& [id, f] : scene.frames) {
    frames.push_back(
        {{"frame", id},
         {"camera", {{"R", ToJson(f.camera.rotation)}, {"c", ToJson(f.camera.center)}}},
         {"object", {{"R", ToJson(f.object_rotation)}, {"t", ToJson(f.object_translation)}}}});
  }
  doc["frames"] = std::move(frames);
  return doc.dump(1) + "\n";
}

}  // namespace motraj::io
