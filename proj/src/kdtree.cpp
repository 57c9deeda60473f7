#include "motraj/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace motraj::ground {
namespace {

struct Candidate {
  double dist_sq;
  int index;
  bool operator<(const Candidate& other) const {
    return dist_sq < other.dist_sq ||
           (dist_sq == other.dist_sq && index < other.index);
  }
};

using MaxHeap = std::priority_queue<Candidate>;

}  // namespace

KdTree2::KdTree2(std::vector<geom::Vec2> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  Build(0, static_cast<int>(order_.size()), 0);
}

void KdTree2::Build(int lo, int hi, int axis) {
  if (hi - lo <= 1) return;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](int a, int b) {
                     const double va = points_[a](axis);
                     const double vb = points_[b](axis);
                     return va < vb || (va == vb && a < b);
                   });
  Build(lo, mid, 1 - axis);
  Build(mid + 1, hi, 1 - axis);
}

std::vector<int> KdTree2::Nearest(const geom::Vec2& query, int k) const {
  const int n = static_cast<int>(points_.size());
  k = std::min(k, n);
  if (k <= 0) return {};

  MaxHeap heap;
  auto visit = [&](auto&& self, int lo, int hi, int axis) -> void {
    if (lo >= hi) return;
    const int mid = lo + (hi - lo) / 2;
    const int idx = order_[mid];
    const Candidate cand{(points_[idx] - query).squaredNorm(), idx};
    if (static_cast<int>(heap.size()) < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
    const double diff = query(axis) - points_[idx](axis);
    const bool left_first = diff <= 0.0;
    self(self, left_first ? lo : mid + 1, left_first ? mid : hi, 1 - axis);
    // Equal distances must still be explored for the index tie-break.
    if (static_cast<int>(heap.size()) < k || diff * diff <= heap.top().dist_sq) {
      self(self, left_first ? mid + 1 : lo, left_first ? hi : mid, 1 - axis);
    }
  };
  visit(visit, 0, n, 0);

  std::vector<int> out(heap.size());
  for (int i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
    out[i] = heap.top().index;
    heap.pop();
  }
  return out;
}

}  // namespace motraj::ground
