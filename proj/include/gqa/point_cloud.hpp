#ifndef GQA_POINT_CLOUD_HPP
#define GQA_POINT_CLOUD_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gqa/common.hpp"

namespace gqa {

using Vec3 = Eigen::Vector3d;

/// Geometry-only point cloud: positions plus optional per-point unit normals.
/// Values are immutable by convention; operations return new clouds.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit vector per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  /// Throws DataError if the normals array is inconsistent with the points.
  void validate() const {
    if (normals.empty()) return;
    if (normals.size() != points.size()) {
      throw DataError("normal count (" + std::to_string(normals.size()) +
                      ") does not match point count (" +
                      std::to_string(points.size()) + ")");
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (std::abs(normals[i].norm() - 1.0) > 1e-6) {
        throw DataError("normal " + std::to_string(i) + " is not unit length");
      }
    }
  }
};

/// Axis-aligned bounding box.
struct Aabb {
  Vec3 min;
  Vec3 max;

  static Aabb of(const PointCloud& pc) {
    if (pc.empty()) throw DataError("bounding box of empty cloud");
    Aabb box{pc.points.front(), pc.points.front()};
    for (const Vec3& p : pc.points) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
    return box;
  }

  Vec3 extent() const { return max - min; }
  double longest_side() const { return extent().maxCoeff(); }
  double diagonal() const { return extent().norm(); }
};

}  // namespace gqa

#endif  // GQA_POINT_CLOUD_HPP
