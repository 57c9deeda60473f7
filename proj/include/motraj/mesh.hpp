#pragma once

#include <array>
#include <optional>
#include <vector>

#include "motraj/geometry.hpp"

namespace motraj::geom {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Throws ValidationError on out-of-range indices or zero-area triangles
// (area <= 1e-12).
void Validate(const TriangleMesh& mesh);

// Applies a rigid or similarity map to every vertex.
TriangleMesh Transformed(const TriangleMesh& mesh, const Mat3& rotation,
                         const Vec3& translation);

// Closest point on triangle (a, b, c) to p by Voronoi region classification.
Vec3 ClosestPointOnTriangle(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c);

double PointTriangleDistance(const Vec3& p, const Vec3& a, const Vec3& b,
                             const Vec3& c);

// Exact Euclidean distance to the nearest triangle. Throws EmptyMesh.
double PointMeshDistance(const Vec3& point, const TriangleMesh& mesh);

// Moller-Trumbore. Returns the ray parameter t >= 0 of the hit, if any.
// Edges and vertices count as hits.
std::optional<double> RayTriangleParameter(const Vec3& origin,
                                           const Vec3& direction, const Vec3& a,
                                           const Vec3& b, const Vec3& c);

struct RayHit {
  Vec3 point;
  double parameter;
  int triangle;
};

// Hit with the smallest nonnegative parameter over all triangles.
std::optional<RayHit> RayMeshHit(const Vec3& origin, const Vec3& direction,
                                 const TriangleMesh& mesh);

std::optional<Vec3> RayMeshIntersection(const Vec3& origin,
                                        const Vec3& direction,
                                        const TriangleMesh& mesh);

}  // namespace motraj::geom
