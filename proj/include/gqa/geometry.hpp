#ifndef GQA_GEOMETRY_HPP
#define GQA_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/kdtree.hpp"
#include "gqa/point_cloud.hpp"

namespace gqa {

struct NormalizeResult {
  PointCloud cloud;
  double scale;  // multiplier applied to coordinates
  Vec3 offset;   // bounding-box minimum that was subtracted first
};

/// Rescales a cloud so its bounding box fits [0,1]^3 with the longest side
/// exactly 1: p' = (p - bbox.min) * scale. Uniform scale, translation only
/// otherwise; normals are unaffected. Throws DataError when all points
/// coincide (degenerate extent).
inline NormalizeResult normalize_unit_cube(const PointCloud& pc) {
  if (pc.size() < 2) throw DataError("normalize_unit_cube requires >= 2 points");
  const Aabb box = Aabb::of(pc);
  const double side = box.longest_side();
  if (!(side > 0.0)) throw DataError("degenerate extent: all points coincide");
  NormalizeResult out;
  out.scale = 1.0 / side;
  out.offset = box.min;
  out.cloud.points.reserve(pc.size());
  for (const Vec3& p : pc.points) {
    out.cloud.points.push_back((p - box.min) * out.scale);
  }
  out.cloud.normals = pc.normals;
  return out;
}

/// Mean nearest-neighbour edge length: for every point, the distance to its
/// closest other point, averaged over the cloud. This is the scale unit for
/// all level-parameterised distortions.
inline double ref_edge_length(const PointCloud& pc, const KdTree* index = nullptr) {
  if (pc.size() < 2) throw DataError("ref_edge_length requires >= 2 points");
  KdTree local;
  if (!index) {
    local = KdTree(pc);
    index = &local;
  }
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(pc.size()); ++i) {
    sum += std::sqrt(index->nearest(pc.points[i], i).dist2);
  }
  return sum / static_cast<double>(pc.size());
}

struct NormalEstimate {
  PointCloud cloud;                     // input points with normals filled in
  std::vector<int> degenerate;          // indices that got a fallback normal
};

namespace detail {

/// Deterministic sign: flip so the largest-magnitude component is positive.
inline Vec3 canonical_sign(const Vec3& n) {
  int c = 0;
  n.cwiseAbs().maxCoeff(&c);
  return n[c] < 0.0 ? Vec3(-n) : n;
}

/// Fallback for rank-deficient neighbourhoods: a unit vector orthogonal to
/// the dominant direction, chosen deterministically.
inline Vec3 fallback_normal(const Vec3& dominant) {
  int c = 0;
  dominant.cwiseAbs().minCoeff(&c);
  Vec3 axis = Vec3::Zero();
  axis[c] = 1.0;
  return canonical_sign(dominant.cross(axis).normalized());
}

}  // namespace detail

/// PCA plane-fit normals: for each point, the unit eigenvector of the
/// smallest eigenvalue of the covariance of its k nearest neighbours.
/// Orientation is arbitrary (normals are treated as unoriented downstream)
/// but deterministic. Collinear or coincident neighbourhoods get a flagged
/// deterministic fallback normal.
inline NormalEstimate estimate_normals(const PointCloud& pc, int k = 16,
                                       const KdTree* index = nullptr) {
  if (k < 3) throw DataError("estimate_normals requires k >= 3");
  if (pc.size() <= static_cast<std::size_t>(k)) {
    throw DataError("estimate_normals requires more than k points");
  }
  KdTree local;
  if (!index) {
    local = KdTree(pc);
    index = &local;
  }
  NormalEstimate out;
  out.cloud.points = pc.points;
  out.cloud.normals.resize(pc.size());
  for (int i = 0; i < static_cast<int>(pc.size()); ++i) {
    const auto nbrs = index->knn(pc.points[i], k, i);
    Vec3 mean = Vec3::Zero();
    for (const auto& h : nbrs) mean += index->point(h.index);
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& h : nbrs) {
      const Vec3 d = index->point(h.index) - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
    solver.computeDirect(cov);
    const Eigen::Vector3d evals = solver.eigenvalues();  // ascending
    // Rank-deficient if the two smallest eigenvalues both vanish (collinear
    // neighbourhood) or everything vanishes (coincident points).
    const double span = std::max(evals[2], 0.0);
    if (span <= 0.0 || evals[1] <= 1e-12 * span) {
      out.cloud.normals[i] =
          detail::fallback_normal(span <= 0.0 ? Vec3(1, 0, 0)
                                              : Vec3(solver.eigenvectors().col(2)));
      out.degenerate.push_back(i);
      continue;
    }
    out.cloud.normals[i] =
        detail::canonical_sign(solver.eigenvectors().col(0).normalized());
  }
  return out;
}

}  // namespace gqa

#endif  // GQA_GEOMETRY_HPP
