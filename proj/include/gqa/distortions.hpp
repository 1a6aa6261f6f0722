#ifndef GQA_DISTORTIONS_HPP
#define GQA_DISTORTIONS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/point_cloud.hpp"
#include "gqa/rng.hpp"

namespace gqa {

/// The seven geometric distortion families, each with 5 severity levels.
enum class Distortion { kGN, kUN, kIN, kEN, kOC, kRS, kGS };

inline constexpr std::array<Distortion, 7> kAllDistortions = {
    Distortion::kGN, Distortion::kUN, Distortion::kIN, Distortion::kEN,
    Distortion::kOC, Distortion::kRS, Distortion::kGS};

inline constexpr int kDistortionLevels = 5;

inline const char* distortion_name(Distortion d) {
  switch (d) {
    case Distortion::kGN: return "GN";
    case Distortion::kUN: return "UN";
    case Distortion::kIN: return "IN";
    case Distortion::kEN: return "EN";
    case Distortion::kOC: return "OC";
    case Distortion::kRS: return "RS";
    case Distortion::kGS: return "GS";
  }
  return "?";
}

inline Distortion distortion_from_name(const std::string& name) {
  for (Distortion d : kAllDistortions) {
    if (name == distortion_name(d)) return d;
  }
  throw DataError("unknown distortion '" + name + "'");
}

// Severity parameter per level. Noise and grid parameters are multiples of
// the cloud's reference edge length l_r; octree resolutions are absolute in
// unit-cube coordinates; removal fractions are plain ratios.
inline constexpr std::array<double, 5> kGaussianSigma = {0.1, 0.2, 0.35, 0.5, 0.7};
inline constexpr std::array<double, 5> kUniformHalfWidth = {0.3, 0.6, 1.05, 1.5, 2.1};
inline constexpr std::array<double, 5> kExponentialMean = {0.1, 0.2, 0.35, 0.5, 0.7};
inline constexpr std::array<double, 5> kOctreeResolution = {0.01, 0.0116, 0.014,
                                                            0.019, 0.025};
inline constexpr std::array<double, 5> kRemovalFraction = {0.15, 0.25, 0.40,
                                                           0.55, 0.70};
inline constexpr std::array<double, 5> kGridResolution = {1.2, 1.4, 1.65, 2.0, 2.5};
inline constexpr double kImpulseThresholdScale = 0.1;  // of l_r

/// How the impulse-noise threshold is applied to the uniform candidate
/// offsets. The reference recipe is ambiguous; kZeroBelowThreshold is the
/// most literal reading and the default everywhere.
enum class ImpulseStrategy {
  kZeroBelowThreshold,  // offsets with |v| <= threshold become 0
  kClampToThreshold,    // offsets with |v| <= threshold become sign(v)*threshold
};

namespace detail {

inline void check_level(int level) {
  if (level < 1 || level > kDistortionLevels) {
    throw DataError("distortion level must be in [1,5], got " +
                    std::to_string(level));
  }
}

inline void check_lr(double l_r) {
  if (!(l_r > 0.0)) throw DataError("reference edge length must be positive");
}

/// Uniform per-axis offsets in [-w, w]. w = 0 degenerates to the identity.
inline PointCloud offset_uniform(const PointCloud& pc, double w, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(pc.size());
  for (const Vec3& p : pc.points) {
    out.points.push_back(p + Vec3(rng.uniform(-w, w), rng.uniform(-w, w),
                                  rng.uniform(-w, w)));
  }
  return out;
}

/// Impulse offsets: uniform candidates in [-w, w], applied per the strategy
/// against the threshold. w <= threshold degenerates to the identity under
/// kZeroBelowThreshold.
inline PointCloud offset_impulse(const PointCloud& pc, double w, double threshold,
                                 std::uint64_t seed, ImpulseStrategy strategy) {
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(pc.size());
  for (const Vec3& p : pc.points) {
    Vec3 q = p;
    for (int c = 0; c < 3; ++c) {
      const double v = rng.uniform(-w, w);
      if (std::abs(v) > threshold) {
        q[c] += v;
      } else if (strategy == ImpulseStrategy::kClampToThreshold) {
        q[c] += (v < 0.0 ? -threshold : threshold);
      }
    }
    out.points.push_back(q);
  }
  return out;
}

/// Snaps points to cubic cell centres and merges duplicates, keeping the
/// first-occurrence order of cells.
inline PointCloud octree_snap(const PointCloud& pc, double resolution) {
  PointCloud out;
  std::map<std::array<std::int64_t, 3>, bool> seen;
  for (const Vec3& p : pc.points) {
    std::array<std::int64_t, 3> cell;
    for (int c = 0; c < 3; ++c) {
      cell[c] = static_cast<std::int64_t>(std::floor(p[c] / resolution));
    }
    if (seen.emplace(cell, true).second) {
      out.points.push_back(Vec3((cell[0] + 0.5) * resolution,
                                (cell[1] + 0.5) * resolution,
                                (cell[2] + 0.5) * resolution));
    }
  }
  return out;
}

}  // namespace detail

/// GN: i.i.d. zero-mean Gaussian offset per point per axis,
/// sigma = {0.1, 0.2, 0.35, 0.5, 0.7} * l_r.
inline PointCloud apply_gaussian_noise(const PointCloud& pc, double l_r, int level,
                                       std::uint64_t seed) {
  detail::check_level(level);
  detail::check_lr(l_r);
  const double sigma = kGaussianSigma[level - 1] * l_r;
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(pc.size());
  for (const Vec3& p : pc.points) {
    out.points.push_back(
        p + sigma * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()));
  }
  return out;
}

/// UN: i.i.d. uniform offset in [-w, w] per axis,
/// w = {0.3, 0.6, 1.05, 1.5, 2.1} * l_r.
inline PointCloud apply_uniform_noise(const PointCloud& pc, double l_r, int level,
                                      std::uint64_t seed) {
  detail::check_level(level);
  detail::check_lr(l_r);
  return detail::offset_uniform(pc, kUniformHalfWidth[level - 1] * l_r, seed);
}

/// IN: uniform candidate offset in [-w, w] per axis (same w table as UN),
/// applied only where its magnitude exceeds the 0.1*l_r threshold.
inline PointCloud apply_impulse_noise(
    const PointCloud& pc, double l_r, int level, std::uint64_t seed,
    ImpulseStrategy strategy = ImpulseStrategy::kZeroBelowThreshold) {
  detail::check_level(level);
  detail::check_lr(l_r);
  return detail::offset_impulse(pc, kUniformHalfWidth[level - 1] * l_r,
                                kImpulseThresholdScale * l_r, seed, strategy);
}

/// EN: exponential magnitude with mean {0.1, 0.2, 0.35, 0.5, 0.7} * l_r per
/// axis and an independent random sign, keeping the noise zero-mean.
inline PointCloud apply_exponential_noise(const PointCloud& pc, double l_r,
                                          int level, std::uint64_t seed) {
  detail::check_level(level);
  detail::check_lr(l_r);
  const double mean = kExponentialMean[level - 1] * l_r;
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(pc.size());
  for (const Vec3& p : pc.points) {
    Vec3 q = p;
    for (int c = 0; c < 3; ++c) q[c] += rng.sign() * rng.exponential(mean);
    out.points.push_back(q);
  }
  return out;
}

/// OC: octree-style requantisation of a unit-cube cloud. Each point snaps to
/// the centre of its cubic cell (side = resolution); coincident snapped
/// points are merged. Output order follows first occurrence of each cell.
inline PointCloud apply_octree_compression(const PointCloud& pc, int level) {
  detail::check_level(level);
  if (pc.empty()) throw DataError("octree compression of empty cloud");
  const Aabb box = Aabb::of(pc);
  if (box.longest_side() > 1.0 + 1e-9 || box.min.minCoeff() < -1e-9 ||
      box.max.maxCoeff() > 1.0 + 1e-9) {
    throw DataError("octree compression requires a unit-cube-normalized cloud");
  }
  return detail::octree_snap(pc, kOctreeResolution[level - 1]);
}

/// RS: uniform random removal of {15, 25, 40, 55, 70}% of the points.
/// Survivors keep their original order (and normals, when present).
inline PointCloud apply_random_downsample(const PointCloud& pc, int level,
                                          std::uint64_t seed) {
  detail::check_level(level);
  const double keep_fraction = 1.0 - kRemovalFraction[level - 1];
  const std::size_t n = pc.size();
  const std::size_t keep =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * keep_fraction + 0.5));
  if (keep < 2) {
    throw DataError("random downsample would leave fewer than 2 points");
  }
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  out.points.reserve(keep);
  if (pc.has_normals()) out.normals.reserve(keep);
  for (std::uint32_t i : idx) {
    out.points.push_back(pc.points[i]);
    if (pc.has_normals()) out.normals.push_back(pc.normals[i]);
  }
  return out;
}

/// GS: cubic grid with cell side {1.2, 1.4, 1.65, 2.0, 2.5} * l_r; each
/// occupied cell emits the centroid of its points. Output order follows
/// first occurrence of each cell.
inline PointCloud apply_grid_downsample(const PointCloud& pc, double l_r, int level) {
  detail::check_level(level);
  detail::check_lr(l_r);
  if (pc.empty()) throw DataError("grid downsample of empty cloud");
  const double res = kGridResolution[level - 1] * l_r;
  std::map<std::array<std::int64_t, 3>, int> cell_of;  // cell -> output slot
  std::vector<Vec3> sums;
  std::vector<int> counts;
  for (const Vec3& p : pc.points) {
    std::array<std::int64_t, 3> cell;
    for (int c = 0; c < 3; ++c) {
      cell[c] = static_cast<std::int64_t>(std::floor(p[c] / res));
    }
    auto [it, inserted] = cell_of.emplace(cell, static_cast<int>(sums.size()));
    if (inserted) {
      sums.push_back(p);
      counts.push_back(1);
    } else {
      sums[it->second] += p;
      counts[it->second] += 1;
    }
  }
  PointCloud out;
  out.points.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out.points.push_back(sums[i] / static_cast<double>(counts[i]));
  }
  return out;
}

/// Dispatch by distortion kind. `l_r` is ignored by OC and RS; `seed` is
/// ignored by the deterministic OC and GS.
inline PointCloud apply_distortion(const PointCloud& pc, double l_r, Distortion kind,
                                   int level, std::uint64_t seed) {
  switch (kind) {
    case Distortion::kGN: return apply_gaussian_noise(pc, l_r, level, seed);
    case Distortion::kUN: return apply_uniform_noise(pc, l_r, level, seed);
    case Distortion::kIN: return apply_impulse_noise(pc, l_r, level, seed);
    case Distortion::kEN: return apply_exponential_noise(pc, l_r, level, seed);
    case Distortion::kOC: return apply_octree_compression(pc, level);
    case Distortion::kRS: return apply_random_downsample(pc, level, seed);
    case Distortion::kGS: return apply_grid_downsample(pc, l_r, level);
  }
  throw DataError("unreachable distortion kind");
}

}  // namespace gqa

#endif  // GQA_DISTORTIONS_HPP
