#pragma once

#include <vector>

#include "motraj/geometry.hpp"

namespace motraj::ground {

// Static 2D kd-tree over pixel positions. Median splits, implicit layout.
class KdTree2 {
 public:
  explicit KdTree2(std::vector<geom::Vec2> points);

  // Indices of the k nearest points ordered by (distance, index). Returns all
  // points when k exceeds the tree size.
  std::vector<int> Nearest(const geom::Vec2& query, int k) const;

  std::size_t size() const { return points_.size(); }

 private:
  void Build(int lo, int hi, int axis);

  std::vector<geom::Vec2> points_;
  std::vector<int> order_;
};

}  // namespace motraj::ground
