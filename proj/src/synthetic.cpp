#include "motraj/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <json.hpp>

#include "motraj/error.hpp"
#include "motraj/mesh.hpp"

namespace motraj::synth {

using geom::Mat3;
using geom::Pose;
using geom::Vec2;
using geom::Vec3;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kCourtyardHalfSize = 40.0;
constexpr double kWallHeight = 6.0;
constexpr double kGroundMargin = 15.0;
// Fraction of object points on the roof, which every camera above the object
// sees. Keeps the majority of rays unoccluded for the reference scale.
constexpr double kRoofFraction = 0.6;
constexpr int kContactPointsPerWheel = 2;

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, what);
}

// mt19937_64 plus hand-rolled distributions: the std:: distributions are
// implementation-defined, which would break bit-identical scenes.
class Random {
 public:
  Random(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    engine_.seed(z ^ (z >> 31));
  }

  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  int Index(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

  double Normal() {
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec3 Normal3(double sigma) {
    if (sigma == 0.0) return Vec3::Zero();
    const double x = Normal();
    const double y = Normal();
    const double z = Normal();
    return sigma * Vec3(x, y, z);
  }
  Vec2 Normal2(double sigma) {
    if (sigma == 0.0) return Vec2::Zero();
    const double x = Normal();
    const double y = Normal();
    return sigma * Vec2(x, y);
  }

 private:
  std::mt19937_64 engine_;
};

// Piecewise planar height field z = g(x, y).
class Terrain {
 public:
  Terrain(GroundShape shape, double angle_deg)
      : shape_(shape), slope_(std::tan(angle_deg * kDeg)) {}

  struct Piece {
    geom::Plane plane;
    double x_min;
    double x_max;
    int label;
  };

  std::vector<Piece> Pieces() const {
    const double inf = std::numeric_limits<double>::infinity();
    const geom::Plane level{Vec3::UnitZ(), Vec3::Zero()};
    const geom::Plane tilted{Vec3(-slope_, 0.0, 1.0).normalized(), Vec3::Zero()};
    switch (shape_) {
      case GroundShape::Flat: return {{level, -inf, inf, kLabelStreet}};
      case GroundShape::Inclined: return {{tilted, -inf, inf, kLabelStreet}};
      case GroundShape::Piecewise:
        return {{level, -inf, 0.0, kLabelStreet}, {tilted, 0.0, inf, kLabelGrass}};
    }
    return {};
  }

  double Height(double x, double /*y*/) const {
    switch (shape_) {
      case GroundShape::Flat: return 0.0;
      case GroundShape::Inclined: return slope_ * x;
      case GroundShape::Piecewise: return x < 0.0 ? 0.0 : slope_ * x;
    }
    return 0.0;
  }

  Vec3 Normal(double x) const {
    const bool tilted = shape_ == GroundShape::Inclined ||
                        (shape_ == GroundShape::Piecewise && x >= 0.0);
    return tilted ? Vec3(-slope_, 0.0, 1.0).normalized() : Vec3::UnitZ();
  }

  Vec3 Lift(const Vec2& xy) const { return {xy.x(), xy.y(), Height(xy.x(), xy.y())}; }

 private:
  GroundShape shape_;
  double slope_;
};

struct PinholeCamera {
  Pose pose;
  double focal;
  double cx;
  double cy;

  std::optional<Vec2> Project(const Vec3& world) const {
    const Vec3 x = geom::WorldToCamera(pose, world);
    if (x.z() <= 1e-6) return std::nullopt;
    return Vec2(focal * x.x() / x.z() + cx, focal * x.y() / x.z() + cy);
  }

  // World direction whose camera-z component is 1, so ray parameters equal
  // depth.
  Vec3 PixelRay(const Vec2& pixel) const {
    const Vec3 local((pixel.x() - cx) / focal, (pixel.y() - cy) / focal, 1.0);
    return pose.rotation.transpose() * local;
  }
};

Mat3 LookAt(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

void AddBox(geom::TriangleMesh& mesh, const Vec3& lo, const Vec3& hi) {
  const int base = static_cast<int>(mesh.vertices.size());
  for (int k = 0; k < 8; ++k) {
    mesh.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                               (k & 4) ? hi.z() : lo.z());
  }
  // Two triangles per face, outward winding.
  static constexpr int kFaces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                       {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& f : kFaces) {
    mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
    mesh.triangles.push_back({base + f[0], base + f[2], base + f[3]});
  }
}

constexpr double kWheelLength = 0.6;
constexpr double kWheelWidth = 0.25;
constexpr double kWheelBase = 1.3;   // |x| of wheel centers
constexpr double kWheelTrack = 0.775;  // |y| of wheel centers

struct Path {
  std::vector<Vec2> positions;
  std::vector<Vec2> tangents;
};

Path MakePath(const SceneConfig& config, Random& rng) {
  const int n = config.frame_count;
  const double yaw = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  const Vec2 offset(rng.Uniform(-2.0, 2.0), rng.Uniform(-2.0, 2.0));
  const double length = rng.Uniform(12.0, 16.0);
  const double sweep = rng.Uniform(70.0, 110.0) * kDeg;
  const double amplitude = rng.Uniform(1.5, 3.0);
  const Vec2 dir(std::cos(yaw), std::sin(yaw));
  const Vec2 side(-dir.y(), dir.x());

  Path path;
  for (int k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) / (n - 1);
    Vec2 p;
    Vec2 t;
    switch (config.object_path) {
      case PathShape::Line:
        p = offset + (tau - 0.5) * length * dir;
        t = dir;
        break;
      case PathShape::Arc: {
        const double radius = length / sweep;
        const double h = yaw + (tau - 0.5) * sweep;
        const double h0 = yaw;
        p = offset + radius * Vec2(std::sin(h) - std::sin(h0), -std::cos(h) + std::cos(h0));
        t = Vec2(std::cos(h), std::sin(h));
        break;
      }
      case PathShape::SCurve: {
        const double w = 2.0 * std::numbers::pi;
        p = offset + (tau - 0.5) * length * dir + amplitude * std::sin(w * tau) * side;
        t = (length * dir + amplitude * w * std::cos(w * tau) * side).normalized();
        break;
      }
    }
    path.positions.push_back(p);
    path.tangents.push_back(t);
  }
  return path;
}

// x_w = R * x + t for the object resting on the terrain.
struct ObjectPose {
  Mat3 rotation;
  Vec3 translation;
};

ObjectPose PoseOnTerrain(const Terrain& terrain, const Vec2& xy, const Vec2& tangent) {
  const Vec3 up = terrain.Normal(xy.x());
  const Vec3 along(tangent.x(), tangent.y(), 0.0);
  const Vec3 forward = (along - up.dot(along) * up).normalized();
  const Vec3 left = up.cross(forward);
  ObjectPose pose;
  pose.rotation.col(0) = forward;
  pose.rotation.col(1) = left;
  pose.rotation.col(2) = up;
  pose.translation = terrain.Lift(xy);
  return pose;
}

std::vector<Vec3> SampleObjectPoints(const SceneConfig& config, Random& rng) {
  const int total = config.object_point_count;
  const int contact = config.include_contact_points
                          ? std::min(total - 1, 4 * kContactPointsPerWheel)
                          : 0;
  const int roof = std::max(1, static_cast<int>(std::lround(kRoofFraction * total)));
  const int sides = std::max(0, total - roof - contact);
  const double hx = 0.5 * kBodyLength;
  const double hy = 0.5 * kBodyWidth;

  std::vector<Vec3> pts;
  pts.reserve(total);
  for (int k = 0; k < roof && static_cast<int>(pts.size()) < total; ++k) {
    pts.emplace_back(rng.Uniform(-hx, hx), rng.Uniform(-hy, hy), kObjectHeight);
  }
  const double side_len = 2.0 * (kBodyLength + kBodyWidth);
  for (int k = 0; k < sides; ++k) {
    const double s = rng.Uniform(0.0, side_len);
    const double z = rng.Uniform(kClearance, kObjectHeight);
    if (s < kBodyLength) {
      pts.emplace_back(-hx + s, -hy, z);
    } else if (s < kBodyLength + kBodyWidth) {
      pts.emplace_back(hx, -hy + (s - kBodyLength), z);
    } else if (s < 2.0 * kBodyLength + kBodyWidth) {
      pts.emplace_back(hx - (s - kBodyLength - kBodyWidth), hy, z);
    } else {
      pts.emplace_back(-hx, hy - (s - 2.0 * kBodyLength - kBodyWidth), z);
    }
  }
  for (int k = 0; k < contact; ++k) {
    const int wheel = k / kContactPointsPerWheel;
    const double cx = (wheel & 1) ? kWheelBase : -kWheelBase;
    const double cy = (wheel & 2) ? kWheelTrack : -kWheelTrack;
    pts.emplace_back(cx + rng.Uniform(-0.4, 0.4) * kWheelLength,
                     cy + rng.Uniform(-0.4, 0.4) * kWheelWidth, 0.0);
  }
  return pts;
}

// Least-squares point closest to all rays (centers[k] + t * dirs[k]).
std::optional<Vec3> Triangulate(const std::vector<Vec3>& centers,
                                const std::vector<Vec3>& dirs) {
  if (centers.size() < 2) return std::nullopt;
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Vec3 d = dirs[k].normalized();
    const Mat3 proj = Mat3::Identity() - d * d.transpose();
    a += proj;
    b += proj * centers[k];
  }
  const Eigen::FullPivLU<Mat3> lu(a);
  if (lu.rank() < 3) return std::nullopt;
  return lu.solve(b);
}

bool InsideImage(const Vec2& px, const SceneConfig& config, double margin) {
  return px.x() >= margin && px.y() >= margin && px.x() < config.image_width - margin &&
         px.y() < config.image_height - margin;
}

struct ScreenBox {
  double u_min = std::numeric_limits<double>::infinity();
  double v_min = std::numeric_limits<double>::infinity();
  double u_max = -std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  bool Contains(const Vec2& p) const {
    return p.x() >= u_min && p.x() <= u_max && p.y() >= v_min && p.y() <= v_max;
  }
};

io::LabelMap RasterizeLabels(int frame, const SceneConfig& config,
                             const PinholeCamera& cam, const Terrain& terrain,
                             const geom::TriangleMesh& object_world) {
  const int w = config.image_width;
  const int h = config.image_height;
  io::LabelMap map;
  map.frame = frame;
  map.width = w;
  map.height = h;
  map.labels.assign(static_cast<std::size_t>(w) * h, kLabelSky);
  std::vector<double> depth(static_cast<std::size_t>(w) * h,
                            std::numeric_limits<double>::infinity());

  const auto pieces = terrain.Pieces();
  const Vec3 c = cam.pose.center;
  const Mat3 rt = cam.pose.rotation.transpose();
  const Vec3 du = rt.col(0) / cam.focal;
  const Vec3 dv = rt.col(1) / cam.focal;
  const double half = kCourtyardHalfSize;

  for (int row = 0; row < h; ++row) {
    Vec3 d = cam.PixelRay(Vec2(0.5, row + 0.5));
    for (int col = 0; col < w; ++col, d += du) {
      double best = std::numeric_limits<double>::infinity();
      int label = kLabelSky;
      for (const auto& piece : pieces) {
        const double nd = piece.plane.normal.dot(d);
        if (nd >= 0.0) continue;  // ground only faces upwards
        const double t = piece.plane.normal.dot(piece.plane.anchor - c) / nd;
        if (t <= 0.0 || t >= best) continue;
        const Vec3 x = c + t * d;
        if (x.x() < piece.x_min || x.x() >= piece.x_max) continue;
        if (std::abs(x.x()) > half || std::abs(x.y()) > half) continue;
        best = t;
        label = piece.label;
      }
      for (int axis = 0; axis < 2; ++axis) {
        if (d(axis) == 0.0) continue;
        const double wall = d(axis) > 0.0 ? half : -half;
        const double t = (wall - c(axis)) / d(axis);
        if (t <= 0.0 || t >= best) continue;
        const Vec3 x = c + t * d;
        if (std::abs(x(1 - axis)) > half) continue;
        const double ground = terrain.Height(x.x(), x.y());
        if (x.z() > ground + kWallHeight || x.z() < ground) continue;
        best = t;
        label = kLabelBuilding;
      }
      const std::size_t idx = static_cast<std::size_t>(row) * w + col;
      map.labels[idx] = static_cast<std::uint8_t>(label);
      depth[idx] = best;
    }
    (void)dv;
  }

  // Object triangles, depth-tested against the background.
  for (const auto& tri : object_world.triangles) {
    const Vec3& a = object_world.vertices[tri[0]];
    const Vec3& b = object_world.vertices[tri[1]];
    const Vec3& e = object_world.vertices[tri[2]];
    const auto pa = cam.Project(a);
    const auto pb = cam.Project(b);
    const auto pe = cam.Project(e);
    if (!pa || !pb || !pe) Invalid("object passes behind a camera");
    const Vec3 n = (b - a).cross(e - a);
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min({pa->x(), pb->x(), pe->x()}))));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({pa->x(), pb->x(), pe->x()}))));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min({pa->y(), pb->y(), pe->y()}))));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({pa->y(), pb->y(), pe->y()}))));
    const double area = (pb->x() - pa->x()) * (pe->y() - pa->y()) -
                        (pb->y() - pa->y()) * (pe->x() - pa->x());
    if (area == 0.0) continue;
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Vec2 p(col + 0.5, row + 0.5);
        auto edge = [&](const Vec2& s, const Vec2& t) {
          return ((t.x() - s.x()) * (p.y() - s.y()) - (t.y() - s.y()) * (p.x() - s.x())) / area;
        };
        if (edge(*pa, *pb) < 0.0 || edge(*pb, *pe) < 0.0 || edge(*pe, *pa) < 0.0) continue;
        const Vec3 d = cam.PixelRay(p);
        const double nd = n.dot(d);
        if (nd == 0.0) continue;
        const double t = n.dot(a - c) / nd;
        const std::size_t idx = static_cast<std::size_t>(row) * w + col;
        if (t > 0.0 && t < depth[idx]) {
          depth[idx] = t;
          map.labels[idx] = kLabelVehicle;
        }
      }
    }
  }
  return map;
}

}  // namespace

geom::TriangleMesh VehicleMesh() {
  geom::TriangleMesh mesh;
  const double hx = 0.5 * kBodyLength;
  const double hy = 0.5 * kBodyWidth;
  AddBox(mesh, Vec3(-hx, -hy, kClearance), Vec3(hx, hy, kObjectHeight));
  for (int wheel = 0; wheel < 4; ++wheel) {
    const double cx = (wheel & 1) ? kWheelBase : -kWheelBase;
    const double cy = (wheel & 2) ? kWheelTrack : -kWheelTrack;
    AddBox(mesh, Vec3(cx - 0.5 * kWheelLength, cy - 0.5 * kWheelWidth, 0.0),
           Vec3(cx + 0.5 * kWheelLength, cy + 0.5 * kWheelWidth, kClearance));
  }
  return mesh;
}

void Validate(const SceneConfig& c) {
  if (c.frame_count < 2) Invalid("frame_count must be at least 2");
  if (!(c.true_scale_ratio > 0.0) || !std::isfinite(c.true_scale_ratio)) {
    Invalid("true_scale_ratio must be positive");
  }
  if (c.object_point_count < 1 || c.ground_point_count < 1 ||
      c.background_point_count < 0) {
    Invalid("point counts must be at least 1");
  }
  if (!(c.noise.pixel_sigma >= 0.0) || !(c.noise.point_sigma >= 0.0)) {
    Invalid("noise sigmas must be non-negative");
  }
  if (c.image_width < 16 || c.image_height < 16 || !(c.focal_length > 0.0)) {
    Invalid("image size and focal length must be positive");
  }
  if (!(std::abs(c.ground_angle_deg) < 45.0)) Invalid("ground_angle_deg must be below 45");
  if (!(c.camera_orbit.radius > 0.0) ||
      !(c.camera_orbit.height - std::abs(c.camera_orbit.height_variation) >
        kObjectHeight + 1.0)) {
    Invalid("camera must stay above the object");
  }
  if (c.degenerate_parallel && c.ground == GroundShape::Piecewise) {
    Invalid("degenerate_parallel needs a single ground plane");
  }
}

SyntheticScene GenerateScene(const SceneConfig& config, std::uint64_t seed) {
  Validate(config);
  Random geometry_rng(seed, 1);
  Random noise_rng(seed, 2);

  const int n = config.frame_count;
  const double r_true = config.true_scale_ratio;
  const Terrain terrain(config.ground, config.ground_angle_deg);
  const geom::TriangleMesh mesh = VehicleMesh();

  const Path path = MakePath(config, geometry_rng);
  const double orbit_start = geometry_rng.Uniform(0.0, 2.0 * std::numbers::pi);
  const double ramp_sign = geometry_rng.Uniform() < 0.5 ? -1.0 : 1.0;

  SyntheticScene scene;
  scene.true_r = r_true;
  scene.semantic.ground = {kLabelStreet, kLabelGrass};
  scene.semantic.object = {kLabelVehicle};
  scene.semantic.background = {kLabelBuilding};
  scene.gt.mesh = mesh;
  scene.gt.mesh_path = "object.obj";

  std::vector<PinholeCamera> cameras;
  std::vector<ObjectPose> object_poses;
  std::vector<geom::TriangleMesh> posed_meshes;
  for (int k = 0; k < n; ++k) {
    const double tau = static_cast<double>(k) / (n - 1);
    const ObjectPose obj = PoseOnTerrain(terrain, path.positions[k], path.tangents[k]);
    const CameraOrbit& orbit = config.camera_orbit;
    Vec2 xy;
    double height = orbit.height;
    if (config.degenerate_parallel) {
      // Constant height, translation a scaled copy of the object's.
      xy = path.positions[0] +
           orbit.radius * Vec2(std::cos(orbit_start), std::sin(orbit_start)) +
           0.6 * (path.positions[k] - path.positions[0]);
    } else {
      const double theta = orbit_start + orbit.angular_speed_deg * kDeg * k;
      xy = path.positions[k] + orbit.radius * Vec2(std::cos(theta), std::sin(theta));
      height += ramp_sign * orbit.height_variation * (2.0 * tau - 1.0);
    }
    const Vec3 center(xy.x(), xy.y(), terrain.Height(xy.x(), xy.y()) + height);
    const Vec3 target = obj.translation + obj.rotation * Vec3(0.0, 0.0, 0.5 * kObjectHeight);
    PinholeCamera cam{{LookAt(center, target), center}, config.focal_length,
                      0.5 * config.image_width, 0.5 * config.image_height};
    cameras.push_back(cam);
    object_poses.push_back(obj);
    posed_meshes.push_back(geom::Transformed(mesh, obj.rotation, obj.translation));

    io::GroundTruthFrame gt_frame;
    gt_frame.camera = cam.pose;
    gt_frame.object_rotation = obj.rotation;
    gt_frame.object_translation = obj.translation;
    scene.gt.frames.emplace(k, gt_frame);
  }

  // Screen-space bounding boxes of the object, for cheap occlusion culling.
  std::vector<ScreenBox> object_boxes(n);
  for (int k = 0; k < n; ++k) {
    for (const Vec3& v : posed_meshes[k].vertices) {
      const auto px = cameras[k].Project(v);
      if (!px) Invalid("object passes behind a camera");
      object_boxes[k].u_min = std::min(object_boxes[k].u_min, px->x());
      object_boxes[k].u_max = std::max(object_boxes[k].u_max, px->x());
      object_boxes[k].v_min = std::min(object_boxes[k].v_min, px->y());
      object_boxes[k].v_max = std::max(object_boxes[k].v_max, px->y());
    }
  }

  // -- Object reconstruction ------------------------------------------------
  scene.canonical_points = SampleObjectPoints(config, geometry_rng);
  io::Reconstruction& obj_rec = scene.object;
  obj_rec.width = config.image_width;
  obj_rec.height = config.image_height;
  std::vector<Pose> object_cameras;  // unscaled, canonical object frame
  for (int k = 0; k < n; ++k) {
    Pose rel;
    rel.rotation = cameras[k].pose.rotation * object_poses[k].rotation;
    rel.center = object_poses[k].rotation.transpose() *
                 (cameras[k].pose.center - object_poses[k].translation);
    object_cameras.push_back(rel);
    obj_rec.cameras.emplace(k, Pose{rel.rotation, rel.center / r_true});
  }
  for (std::size_t j = 0; j < scene.canonical_points.size(); ++j) {
    const Vec3& x = scene.canonical_points[j];
    io::ScenePoint p;
    p.id = static_cast<int>(j);
    std::vector<Vec3> centers;
    std::vector<Vec3> dirs;
    for (int k = 0; k < n; ++k) {
      const Vec3 world = object_poses[k].rotation * x + object_poses[k].translation;
      const auto exact = cameras[k].Project(world);
      if (!exact) Invalid("object point behind camera");
      const Vec2 px = *exact + noise_rng.Normal2(config.noise.pixel_sigma);
      if (!InsideImage(px, config, 0.0)) Invalid("object leaves the image");
      p.observations.push_back({k, px});
      centers.push_back(object_cameras[k].center);
      dirs.push_back(object_cameras[k].rotation.transpose() *
                     Vec3((px.x() - cameras[k].cx) / cameras[k].focal,
                          (px.y() - cameras[k].cy) / cameras[k].focal, 1.0));
    }
    Vec3 estimate = x;
    if (config.noise.pixel_sigma > 0.0) {
      if (auto tri = Triangulate(centers, dirs)) estimate = *tri;
    }
    estimate += noise_rng.Normal3(config.noise.point_sigma);
    p.position = estimate / r_true;
    obj_rec.points.push_back(std::move(p));
  }

  // -- Background reconstruction -------------------------------------------
  io::Reconstruction& bg_rec = scene.background;
  bg_rec.width = config.image_width;
  bg_rec.height = config.image_height;
  for (int k = 0; k < n; ++k) bg_rec.cameras.emplace(k, cameras[k].pose);

  Eigen::AlignedBox2d region;
  for (const Vec2& p : path.positions) region.extend(p);
  region.min().array() -= kGroundMargin;
  region.max().array() += kGroundMargin;
  const double limit = kCourtyardHalfSize - 0.5;
  region.min() = region.min().cwiseMax(Vec2(-limit, -limit));
  region.max() = region.max().cwiseMin(Vec2(limit, limit));

  std::vector<Vec3> background_points;
  for (int k = 0; k < config.ground_point_count; ++k) {
    const Vec2 xy(geometry_rng.Uniform(region.min().x(), region.max().x()),
                  geometry_rng.Uniform(region.min().y(), region.max().y()));
    background_points.push_back(terrain.Lift(xy));
  }
  for (int k = 0; k < config.background_point_count; ++k) {
    const int wall = geometry_rng.Index(4);
    const double along = geometry_rng.Uniform(-limit, limit);
    const double side = (wall & 1) ? kCourtyardHalfSize : -kCourtyardHalfSize;
    const Vec2 xy = (wall & 2) ? Vec2(along, side) : Vec2(side, along);
    const double up = geometry_rng.Uniform(0.2, kWallHeight - 0.2);
    background_points.emplace_back(xy.x(), xy.y(), terrain.Height(xy.x(), xy.y()) + up);
  }

  int next_id = 0;
  for (const Vec3& x : background_points) {
    io::ScenePoint p;
    std::vector<Vec3> centers;
    std::vector<Vec3> dirs;
    for (int k = 0; k < n; ++k) {
      const auto exact = cameras[k].Project(x);
      if (!exact) continue;
      const Vec2 px = *exact + noise_rng.Normal2(config.noise.pixel_sigma);
      if (!InsideImage(px, config, 0.5)) continue;
      if (object_boxes[k].Contains(*exact)) {
        const Vec3 c = cameras[k].pose.center;
        const auto hit = geom::RayMeshHit(c, x - c, posed_meshes[k]);
        if (hit && hit->parameter < 1.0 - 1e-9) continue;
      }
      p.observations.push_back({k, px});
      centers.push_back(cameras[k].pose.center);
      dirs.push_back(cameras[k].PixelRay(px));
    }
    if (p.observations.size() < 2) continue;
    Vec3 estimate = x;
    if (config.noise.pixel_sigma > 0.0) {
      if (auto tri = Triangulate(centers, dirs)) estimate = *tri;
    }
    p.position = estimate + noise_rng.Normal3(config.noise.point_sigma);
    p.id = next_id++;
    bg_rec.points.push_back(std::move(p));
  }

  for (int k = 0; k < n; ++k) {
    scene.labels.emplace(k, RasterizeLabels(k, config, cameras[k], terrain, posed_meshes[k]));
  }

  io::Validate(scene.object);
  io::Validate(scene.background);
  return scene;
}

std::vector<std::filesystem::path> WriteScene(const SyntheticScene& scene,
                                              const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory / "labels", ec);
  if (ec) {
    throw Error(ErrorCode::IoError, "cannot create " + directory.string() + ": " + ec.message());
  }
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& path, const std::string& contents) {
    io::WriteFile(path, contents);
    written.push_back(path);
  };
  emit(directory / "object.json", io::SerializeReconstruction(scene.object));
  emit(directory / "background.json", io::SerializeReconstruction(scene.background));
  for (const auto& [frame, map] : scene.labels) {
    emit(directory / "labels" / io::LabelMapFileName(frame), io::EncodePgm(map));
  }
  emit(directory / "semantic.json", io::SerializeSemanticConfig(scene.semantic));
  emit(directory / "gt.json", io::SerializeGroundTruth(scene.gt));
  emit(directory / scene.gt.mesh_path, io::SerializeObj(scene.gt.mesh));
  return written;
}

// -- Config files -----------------------------------------------------------

std::string PathShapeName(PathShape shape) {
  switch (shape) {
    case PathShape::Line: return "line";
    case PathShape::Arc: return "arc";
    case PathShape::SCurve: return "s-curve";
  }
  return "line";
}

std::string GroundShapeName(GroundShape shape) {
  switch (shape) {
    case GroundShape::Flat: return "flat";
    case GroundShape::Inclined: return "inclined";
    case GroundShape::Piecewise: return "piecewise";
  }
  return "flat";
}

PathShape ParsePathShape(const std::string& name) {
  if (name == "line") return PathShape::Line;
  if (name == "arc") return PathShape::Arc;
  if (name == "s-curve") return PathShape::SCurve;
  Invalid("unknown object_path '" + name + "'");
}

GroundShape ParseGroundShape(const std::string& name) {
  if (name == "flat") return GroundShape::Flat;
  if (name == "inclined") return GroundShape::Inclined;
  if (name == "piecewise") return GroundShape::Piecewise;
  Invalid("unknown ground type '" + name + "'");
}

SceneConfig ParseSceneConfig(std::string_view text, std::string_view source) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(source) + ": " + e.what());
  }
  if (!doc.is_object()) Invalid(std::string(source) + ": scene config must be an object");

  static const std::set<std::string> kKeys = {
      "frame_count", "true_scale_ratio", "object_path", "ground", "camera_orbit",
      "noise", "object_point_count", "ground_point_count", "background_point_count",
      "include_contact_points", "degenerate_parallel", "image_size", "focal_length"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.contains(key)) Invalid(std::string(source) + ": unknown key '" + key + "'");
  }

  SceneConfig c;
  try {
    c.frame_count = doc.value("frame_count", c.frame_count);
    c.true_scale_ratio = doc.value("true_scale_ratio", c.true_scale_ratio);
    if (doc.contains("object_path")) {
      c.object_path = ParsePathShape(doc["object_path"].get<std::string>());
    }
    if (doc.contains("ground")) {
      const json& g = doc["ground"];
      if (g.is_string()) {
        c.ground = ParseGroundShape(g.get<std::string>());
      } else {
        c.ground = ParseGroundShape(g.value("type", std::string("flat")));
        c.ground_angle_deg = g.value("angle_deg", c.ground_angle_deg);
      }
    }
    if (doc.contains("camera_orbit")) {
      const json& o = doc["camera_orbit"];
      c.camera_orbit.radius = o.value("radius", c.camera_orbit.radius);
      c.camera_orbit.height = o.value("height", c.camera_orbit.height);
      c.camera_orbit.angular_speed_deg =
          o.value("angular_speed_deg", c.camera_orbit.angular_speed_deg);
      c.camera_orbit.height_variation =
          o.value("height_variation", c.camera_orbit.height_variation);
    }
    if (doc.contains("noise")) {
      const json& nz = doc["noise"];
      c.noise.pixel_sigma = nz.value("pixel_sigma", c.noise.pixel_sigma);
      c.noise.point_sigma = nz.value("point_sigma", c.noise.point_sigma);
    }
    c.object_point_count = doc.value("object_point_count", c.object_point_count);
    c.ground_point_count = doc.value("ground_point_count", c.ground_point_count);
    c.background_point_count = doc.value("background_point_count", c.background_point_count);
    c.include_contact_points = doc.value("include_contact_points", c.include_contact_points);
    c.degenerate_parallel = doc.value("degenerate_parallel", c.degenerate_parallel);
    if (doc.contains("image_size")) {
      c.image_width = doc["image_size"].at(0).get<int>();
      c.image_height = doc["image_size"].at(1).get<int>();
    }
    c.focal_length = doc.value("focal_length", c.focal_length);
  } catch (const json::exception& e) {
    Invalid(std::string(source) + ": " + e.what());
  }
  Validate(c);
  return c;
}

std::string SerializeSceneConfig(const SceneConfig& c) {
  using nlohmann::json;
  json doc;
  doc["frame_count"] = c.frame_count;
  doc["true_scale_ratio"] = c.true_scale_ratio;
  doc["object_path"] = PathShapeName(c.object_path);
  doc["ground"] = {{"type", GroundShapeName(c.ground)}, {"angle_deg", c.ground_angle_deg}};
  doc["camera_orbit"] = {{"radius", c.camera_orbit.radius},
                         {"height", c.camera_orbit.height},
                         {"angular_speed_deg", c.camera_orbit.angular_speed_deg},
                         {"height_variation", c.camera_orbit.height_variation}};
  doc["noise"] = {{"pixel_sigma", c.noise.pixel_sigma}, {"point_sigma", c.noise.point_sigma}};
  doc["object_point_count"] = c.object_point_count;
  doc["ground_point_count"] = c.ground_point_count;
  doc["background_point_count"] = c.background_point_count;
  doc["include_contact_points"] = c.include_contact_points;
  doc["degenerate_parallel"] = c.degenerate_parallel;
  doc["image_size"] = {c.image_width, c.image_height};
  doc["focal_length"] = c.focal_length;
  return doc.dump(1) + "\n";
}

}  // namespace motraj::synth
