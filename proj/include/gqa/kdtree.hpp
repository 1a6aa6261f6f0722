#ifndef GQA_KDTREE_HPP
#define GQA_KDTREE_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/point_cloud.hpp"

namespace gqa {

/// Exact kd-tree over 3D points.
///
/// All queries are exact (no approximation) and deterministic:
/// equal distances are resolved in favour of the lowest point index.
/// The tree copies its input and is immutable after construction, so
/// concurrent read queries are safe.
class KdTree {
 public:
  struct Hit {
    int index = -1;
    double dist2 = 0.0;  // squared Euclidean distance

    bool closer_than(const Hit& o) const {
      return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
    }
  };

  KdTree() = default;

  explicit KdTree(const std::vector<Vec3>& points) : pts_(points) {
    const int n = static_cast<int>(pts_.size());
    order_.resize(n);
    axis_.assign(n, 0);
    for (int i = 0; i < n; ++i) order_[i] = i;
    if (n > 0) build(0, n);
  }

  explicit KdTree(const PointCloud& pc) : KdTree(pc.points) {}

  bool empty() const { return pts_.empty(); }
  int size() const { return static_cast<int>(pts_.size()); }
  const Vec3& point(int index) const { return pts_[index]; }

  /// Exact nearest neighbour; `exclude` skips one point index (pass the
  /// query's own index for nearest-other-point queries).
  Hit nearest(const Vec3& q, int exclude = -1) const {
    if (empty() || (size() == 1 && exclude == 0)) {
      throw DataError("nearest-neighbour query on empty index");
    }
    Hit best;
    best.dist2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, static_cast<int>(pts_.size()), q, exclude, best);
    return best;
  }

  /// Exact k nearest neighbours, ascending by (distance, index).
  std::vector<Hit> knn(const Vec3& q, int k, int exclude = -1) const {
    if (k < 1) throw DataError("knn requires k >= 1");
    std::vector<Hit> heap;  // max-heap on (dist2, index)
    heap.reserve(static_cast<std::size_t>(k) + 1);
    knn_rec(0, static_cast<int>(pts_.size()), q, k, exclude, heap);
    std::sort_heap(heap.begin(), heap.end(), heap_less);
    return heap;
  }

  /// Exactly the set of indices with ||p - q|| <= r, ascending by index.
  std::vector<int> radius(const Vec3& q, double r) const {
    if (r < 0.0) throw DataError("radius query requires r >= 0");
    std::vector<int> out;
    radius_rec(0, static_cast<int>(pts_.size()), q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static bool heap_less(const Hit& a, const Hit& b) { return a.closer_than(b); }

  // Implicit balanced tree: node for range [lo, hi) sits at mid = (lo+hi)/2,
  // split axis stored in axis_[mid]. Split axis is the widest extent of the
  // range, ties to the lowest axis.
  void build(int lo, int hi) {
    if (hi - lo <= 1) return;
    Vec3 mn = pts_[order_[lo]], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(pts_[order_[i]]);
      mx = mx.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid,
                     order_.begin() + hi, [&](int a, int b) {
                       const double ca = pts_[a][axis], cb = pts_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    axis_[mid] = static_cast<signed char>(axis);
    build(lo, mid);
    build(mid + 1, hi);
  }

  void consider(int idx, const Vec3& q, int exclude, Hit& best) const {
    if (idx == exclude) return;
    const Hit cand{idx, (pts_[idx] - q).squaredNorm()};
    if (cand.closer_than(best)) best = cand;
  }

  void nearest_rec(int lo, int hi, const Vec3& q, int exclude, Hit& best) const {
    if (lo >= hi) return;
    const int mid = (lo + hi) / 2;
    const int idx = order_[mid];
    consider(idx, q, exclude, best);
    const int axis = axis_[mid];
    const double delta = q[axis] - pts_[idx][axis];
    const bool left_first = delta < 0.0;
    if (left_first) {
      nearest_rec(lo, mid, q, exclude, best);
      // <= keeps ties exact: an equal-distance, lower-index point may sit
      // exactly on the splitting plane's far side.
      if (delta * delta <= best.dist2) nearest_rec(mid + 1, hi, q, exclude, best);
    } else {
      nearest_rec(mid + 1, hi, q, exclude, best);
      if (delta * delta <= best.dist2) nearest_rec(lo, mid, q, exclude, best);
    }
  }

  void knn_push(std::vector<Hit>& heap, int k, const Hit& cand) const {
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), heap_less);
    } else if (cand.closer_than(heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), heap_less);
    }
  }

  void knn_rec(int lo, int hi, const Vec3& q, int k, int exclude,
               std::vector<Hit>& heap) const {
    if (lo >= hi) return;
    const int mid = (lo + hi) / 2;
    const int idx = order_[mid];
    if (idx != exclude) {
      knn_push(heap, k, Hit{idx, (pts_[idx] - q).squaredNorm()});
    }
    const int axis = axis_[mid];
    const double delta = q[axis] - pts_[idx][axis];
    const auto must_visit_far = [&] {
      return static_cast<int>(heap.size()) < k ||
             delta * delta <= heap.front().dist2;
    };
    if (delta < 0.0) {
      knn_rec(lo, mid, q, k, exclude, heap);
      if (must_visit_far()) knn_rec(mid + 1, hi, q, k, exclude, heap);
    } else {
      knn_rec(mid + 1, hi, q, k, exclude, heap);
      if (must_visit_far()) knn_rec(lo, mid, q, k, exclude, heap);
    }
  }

  void radius_rec(int lo, int hi, const Vec3& q, double r2,
                  std::vector<int>& out) const {
    if (lo >= hi) return;
    const int mid = (lo + hi) / 2;
    const int idx = order_[mid];
    if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    const int axis = axis_[mid];
    const double delta = q[axis] - pts_[idx][axis];
    if (delta < 0.0) {
      radius_rec(lo, mid, q, r2, out);
      if (delta * delta <= r2) radius_rec(mid + 1, hi, q, r2, out);
    } else {
      radius_rec(mid + 1, hi, q, r2, out);
      if (delta * delta <= r2) radius_rec(lo, mid, q, r2, out);
    }
  }

  std::vector<Vec3> pts_;
  std::vector<int> order_;
  std::vector<signed char> axis_;
};

}  // namespace gqa

#endif  // GQA_KDTREE_HPP
