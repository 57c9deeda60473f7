#include "motraj/mesh.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "motraj/error.hpp"

namespace motraj::geom {

void Validate(const TriangleMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    if (!v.allFinite()) {
      throw Error(ErrorCode::ValidationError, "mesh vertex is not finite");
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int idx : tri) {
      if (idx < 0 || idx >= n) {
        throw Error(ErrorCode::ValidationError,
                    "triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(idx) + " out of range");
      }
    }
    const Vec3& a = mesh.vertices[tri[0]];
    const double area =
        0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
    if (area <= 1e-12) {
      throw Error(ErrorCode::ValidationError,
                  "triangle " + std::to_string(t) + " is degenerate");
    }
  }
}

TriangleMesh Transformed(const TriangleMesh& mesh, const Mat3& rotation,
                         const Vec3& translation) {
  TriangleMesh out;
  out.triangles = mesh.triangles;
  out.vertices.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    out.vertices.push_back(rotation * v + translation);
  }
  return out;
}

// Region tests follow Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 ClosestPointOnTriangle(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    return a + (d1 / (d1 - d3)) * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    return a + (d2 / (d2 - d6)) * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double PointTriangleDistance(const Vec3& p, const Vec3& a, const Vec3& b,
                             const Vec3& c) {
  return (p - ClosestPointOnTriangle(p, a, b, c)).norm();
}

double PointMeshDistance(const Vec3& point, const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) {
    throw Error(ErrorCode::EmptyMesh, "mesh has no triangles");
  }
  double best_sq = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    const Vec3 q = ClosestPointOnTriangle(point, mesh.vertices[tri[0]],
                                          mesh.vertices[tri[1]],
                                          mesh.vertices[tri[2]]);
    best_sq = std::min(best_sq, (point - q).squaredNorm());
  }
  return std::sqrt(best_sq);
}

std::optional<double> RayTriangleParameter(const Vec3& origin,
                                           const Vec3& direction, const Vec3& a,
                                           const Vec3& b, const Vec3& c) {
  // Barycentric slack so that rays through shared edges hit both neighbours.
  constexpr double kEdgeSlack = 1e-12;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = direction.cross(e2);
  const double det = e1.dot(pvec);
  const double scale = e1.norm() * e2.norm() * direction.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv_det = 1.0 / det;

  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -kEdgeSlack || u > 1.0 + kEdgeSlack) return std::nullopt;

  const Vec3 qvec = tvec.cross(e1);
  const double v = direction.dot(qvec) * inv_det;
  if (v < -kEdgeSlack || u + v > 1.0 + kEdgeSlack) return std::nullopt;

  const double t = e2.dot(qvec) * inv_det;
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<RayHit> RayMeshHit(const Vec3& origin, const Vec3& direction,
                                 const TriangleMesh& mesh) {
  std::optional<RayHit> best;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto param =
        RayTriangleParameter(origin, direction, mesh.vertices[tri[0]],
                             mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    if (param && (!best || *param < best->parameter)) {
      best = RayHit{origin + *param * direction, *param, static_cast<int>(t)};
    }
  }
  return best;
}

std::optional<Vec3> RayMeshIntersection(const Vec3& origin,
                                        const Vec3& direction,
                                        const TriangleMesh& mesh) {
  const auto hit = RayMeshHit(origin, direction, mesh);
  if (!hit) return std::nullopt;
  return hit->point;
}

}  // namespace motraj::geom
