#ifndef GQA_METRICS_HPP
#define GQA_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/geometry.hpp"
#include "gqa/kdtree.hpp"
#include "gqa/point_cloud.hpp"

namespace gqa {

enum class MetricFamily { kPo2Po, kPo2Pl, kPl2Pl };
enum class Pooling { kMse, kHausdorff, kPsnr };

struct MetricKind {
  MetricFamily family;
  Pooling pooling;
};

inline const char* family_name(MetricFamily f) {
  switch (f) {
    case MetricFamily::kPo2Po: return "po2po";
    case MetricFamily::kPo2Pl: return "po2pl";
    case MetricFamily::kPl2Pl: return "pl2pl";
  }
  return "?";
}

inline const char* pooling_name(Pooling p) {
  switch (p) {
    case Pooling::kMse: return "mse";
    case Pooling::kHausdorff: return "hausdorff";
    case Pooling::kPsnr: return "psnr";
  }
  return "?";
}

inline std::string metric_name(MetricKind kind) {
  return std::string(family_name(kind.family)) + "_" + pooling_name(kind.pooling);
}

/// Parses names like "po2pl_hausdorff".
inline MetricKind metric_from_name(const std::string& name) {
  for (MetricFamily f : {MetricFamily::kPo2Po, MetricFamily::kPo2Pl,
                         MetricFamily::kPl2Pl}) {
    for (Pooling p : {Pooling::kMse, Pooling::kHausdorff, Pooling::kPsnr}) {
      if (name == metric_name({f, p})) return {f, p};
    }
  }
  throw DataError("unknown metric '" + name + "'");
}

inline std::vector<MetricKind> all_metric_kinds() {
  std::vector<MetricKind> out;
  for (MetricFamily f : {MetricFamily::kPo2Po, MetricFamily::kPo2Pl,
                         MetricFamily::kPl2Pl}) {
    for (Pooling p : {Pooling::kMse, Pooling::kHausdorff, Pooling::kPsnr}) {
      out.push_back({f, p});
    }
  }
  return out;
}

struct MetricResult {
  double value = 0.0;
  bool higher_better = false;
  bool perfect = false;  // set when MSE hit 0 under PSNR pooling (+inf value)

  /// True when `this` reports strictly better quality than `other`.
  bool better_than(const MetricResult& other) const {
    return higher_better ? value > other.value : value < other.value;
  }
};

/// Per-point values in both correspondence directions. Squared errors for
/// Po2Po/Po2Pl; similarities in [0,1] for Pl2Pl.
struct DirectionalValues {
  std::vector<double> deg_to_ref;
  std::vector<double> ref_to_deg;
};

namespace detail {

inline void check_nonempty(const PointCloud& ref, const PointCloud& deg) {
  if (ref.empty() || deg.empty()) throw DataError("metric on empty cloud");
}

/// Unoriented angle between unit vectors via chord length; exact 0 for
/// bitwise-equal (or opposite) normals, stable near parallel.
inline double unoriented_angle(const Vec3& a, const Vec3& b) {
  const double chord = std::min((a - b).norm(), (a + b).norm());
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
}

inline double angular_similarity(const Vec3& a, const Vec3& b) {
  constexpr double kPi = 3.14159265358979323846;
  const double theta = unoriented_angle(a, b);  // [0, pi/2]
  return std::clamp(1.0 - 2.0 * theta / kPi, 0.0, 1.0);
}

}  // namespace detail

/// Point-to-point squared distances to the nearest cross-cloud point, in
/// both directions.
inline DirectionalValues po2po_error(const PointCloud& ref, const PointCloud& deg,
                                     const KdTree* ref_tree = nullptr,
                                     const KdTree* deg_tree = nullptr) {
  detail::check_nonempty(ref, deg);
  KdTree local_ref, local_deg;
  if (!ref_tree) { local_ref = KdTree(ref); ref_tree = &local_ref; }
  if (!deg_tree) { local_deg = KdTree(deg); deg_tree = &local_deg; }
  DirectionalValues out;
  out.deg_to_ref.reserve(deg.size());
  for (const Vec3& p : deg.points) out.deg_to_ref.push_back(ref_tree->nearest(p).dist2);
  out.ref_to_deg.reserve(ref.size());
  for (const Vec3& p : ref.points) out.ref_to_deg.push_back(deg_tree->nearest(p).dist2);
  return out;
}

/// Point-to-plane squared errors: the correspondence vector projected onto
/// the reference point's unit normal. Both directions use the reference
/// normal of the correspondence. `ref` must carry normals.
inline DirectionalValues po2pl_error(const PointCloud& ref, const PointCloud& deg,
                                     const KdTree* ref_tree = nullptr,
                                     const KdTree* deg_tree = nullptr) {
  detail::check_nonempty(ref, deg);
  if (!ref.has_normals()) {
    throw DataError("po2pl requires reference normals (estimate them first)");
  }
  ref.validate();
  KdTree local_ref, local_deg;
  if (!ref_tree) { local_ref = KdTree(ref); ref_tree = &local_ref; }
  if (!deg_tree) { local_deg = KdTree(deg); deg_tree = &local_deg; }
  DirectionalValues out;
  out.deg_to_ref.reserve(deg.size());
  for (const Vec3& p : deg.points) {
    const auto hit = ref_tree->nearest(p);
    const double proj = (p - ref.points[hit.index]).dot(ref.normals[hit.index]);
    out.deg_to_ref.push_back(proj * proj);
  }
  out.ref_to_deg.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto hit = deg_tree->nearest(ref.points[i]);
    const double proj = (ref.points[i] - deg_tree->point(hit.index)).dot(ref.normals[i]);
    out.ref_to_deg.push_back(proj * proj);
  }
  return out;
}

/// Plane-to-plane angular similarity of corresponding tangent planes,
/// 1 - 2*theta/pi with theta the unoriented normal angle. Both clouds must
/// carry normals.
inline DirectionalValues pl2pl_similarity(const PointCloud& ref, const PointCloud& deg,
                                          const KdTree* ref_tree = nullptr,
                                          const KdTree* deg_tree = nullptr) {
  detail::check_nonempty(ref, deg);
  if (!ref.has_normals() || !deg.has_normals()) {
    throw DataError("pl2pl requires normals on both clouds");
  }
  ref.validate();
  deg.validate();
  KdTree local_ref, local_deg;
  if (!ref_tree) { local_ref = KdTree(ref); ref_tree = &local_ref; }
  if (!deg_tree) { local_deg = KdTree(deg); deg_tree = &local_deg; }
  DirectionalValues out;
  out.deg_to_ref.reserve(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) {
    const auto hit = ref_tree->nearest(deg.points[i]);
    out.deg_to_ref.push_back(
        detail::angular_similarity(deg.normals[i], ref.normals[hit.index]));
  }
  out.ref_to_deg.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto hit = deg_tree->nearest(ref.points[i]);
    out.ref_to_deg.push_back(
        detail::angular_similarity(ref.normals[i], deg.normals[hit.index]));
  }
  return out;
}

namespace detail {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw DataError("mean of empty list");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double max_of(const std::vector<double>& v) {
  if (v.empty()) throw DataError("max of empty list");
  return *std::max_element(v.begin(), v.end());
}

}  // namespace detail

/// Pools directional per-point values into one symmetric MetricResult.
///
/// Conventions: the symmetric value is the max over the two directions
/// (conservative); Pl2Pl similarities are pooled as dissimilarity 1-s;
/// Hausdorff reports raw (unsquared) worst-case distance; PSNR peak is the
/// reference bounding-box diagonal, with MSE == 0 reported as a flagged
/// +infinity.
inline MetricResult pool(const DirectionalValues& values, MetricKind kind,
                         const PointCloud& ref) {
  if (values.deg_to_ref.empty() || values.ref_to_deg.empty()) {
    throw DataError("pooling requires non-empty per-point lists");
  }
  const bool similarity = kind.family == MetricFamily::kPl2Pl;
  auto as_error = [&](const std::vector<double>& v) {
    if (!similarity) return v;
    std::vector<double> e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = 1.0 - v[i];
    return e;
  };
  const std::vector<double> d2r = as_error(values.deg_to_ref);
  const std::vector<double> r2d = as_error(values.ref_to_deg);
  const double sym_mse = std::max(detail::mean(d2r), detail::mean(r2d));

  MetricResult out;
  switch (kind.pooling) {
    case Pooling::kMse: {
      out.value = sym_mse;
      out.higher_better = false;
      break;
    }
    case Pooling::kHausdorff: {
      const double worst = std::max(detail::max_of(d2r), detail::max_of(r2d));
      // Po2Po/Po2Pl lists hold squared errors; report the raw distance.
      out.value = similarity ? worst : std::sqrt(worst);
      out.higher_better = false;
      break;
    }
    case Pooling::kPsnr: {
      const double peak = Aabb::of(ref).diagonal();
      if (sym_mse == 0.0) {
        out.value = std::numeric_limits<double>::infinity();
        out.perfect = true;
      } else {
        out.value = 10.0 * std::log10(peak * peak / sym_mse);
      }
      out.higher_better = true;
      break;
    }
  }
  return out;
}

/// Mean plane-to-plane angular similarity of the degraded cloud against its
/// reference, deg-to-ref direction only. This is the pseudo-MOS in [0,1].
inline double pseudo_mos(const PointCloud& ref, const PointCloud& deg,
                         int k_normals = 16) {
  detail::check_nonempty(ref, deg);
  const PointCloud ref_n =
      ref.has_normals() ? ref : estimate_normals(ref, k_normals).cloud;
  const PointCloud deg_n =
      deg.has_normals() ? deg : estimate_normals(deg, k_normals).cloud;
  const KdTree ref_tree(ref_n);
  double sum = 0.0;
  for (std::size_t i = 0; i < deg_n.size(); ++i) {
    const auto hit = ref_tree.nearest(deg_n.points[i]);
    sum += detail::angular_similarity(deg_n.normals[i], ref_n.normals[hit.index]);
  }
  return sum / static_cast<double>(deg_n.size());
}

/// One-call metric computation: estimates missing normals where the family
/// needs them (PCA plane fit over k_normals neighbours), then pools.
inline MetricResult compute_metric(MetricKind kind, const PointCloud& ref,
                                   const PointCloud& deg, int k_normals = 16) {
  detail::check_nonempty(ref, deg);
  DirectionalValues values;
  switch (kind.family) {
    case MetricFamily::kPo2Po:
      values = po2po_error(ref, deg);
      break;
    case MetricFamily::kPo2Pl: {
      const PointCloud ref_n =
          ref.has_normals() ? ref : estimate_normals(ref, k_normals).cloud;
      values = po2pl_error(ref_n, deg);
      break;
    }
    case MetricFamily::kPl2Pl: {
      const PointCloud ref_n =
          ref.has_normals() ? ref : estimate_normals(ref, k_normals).cloud;
      const PointCloud deg_n =
          deg.has_normals() ? deg : estimate_normals(deg, k_normals).cloud;
      values = pl2pl_similarity(ref_n, deg_n);
      break;
    }
  }
  return pool(values, kind, ref);
}

}  // namespace gqa

#endif  // GQA_METRICS_HPP
