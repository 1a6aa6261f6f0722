#ifndef GQA_SYNTHETIC_HPP
#define GQA_SYNTHETIC_HPP

#include <cmath>
#include <string>

#include "gqa/common.hpp"
#include "gqa/point_cloud.hpp"
#include "gqa/rng.hpp"

namespace gqa {

/// Analytic test surfaces with seeded random sampling. Used by the test
/// suites and the `synth` CLI command to produce reference clouds without
/// external data.
enum class Shape { kSphere, kTorus, kWave, kBlob };

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::kSphere: return "sphere";
    case Shape::kTorus: return "torus";
    case Shape::kWave: return "wave";
    case Shape::kBlob: return "blob";
  }
  return "?";
}

inline Shape shape_from_name(const std::string& name) {
  for (Shape s : {Shape::kSphere, Shape::kTorus, Shape::kWave, Shape::kBlob}) {
    if (name == shape_name(s)) return s;
  }
  throw DataError("unknown shape '" + name + "'");
}

/// Samples `n` points from a smooth closed-form surface. Clouds land inside
/// the unit cube but are not normalized; run them through
/// normalize_unit_cube before distortion generation.
inline PointCloud sample_shape(Shape shape, int n, std::uint64_t seed) {
  if (n < 1) throw DataError("sample_shape requires n >= 1");
  constexpr double kPi = 3.14159265358979323846;
  Rng rng(seed);
  PointCloud pc;
  pc.points.reserve(n);
  const Vec3 center(0.5, 0.5, 0.5);
  switch (shape) {
    case Shape::kSphere: {
      const double radius = 0.45;
      while (static_cast<int>(pc.size()) < n) {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        pc.points.push_back(center +
                            radius * Vec3(s * std::cos(phi), s * std::sin(phi), z));
      }
      break;
    }
    case Shape::kTorus: {
      const double major = 0.32, minor = 0.13;
      while (static_cast<int>(pc.size()) < n) {
        const double u = rng.uniform(0.0, 2.0 * kPi);
        const double v = rng.uniform(0.0, 2.0 * kPi);
        // Rejection keeps the sampling uniform in surface area.
        if (rng.uniform01() * (major + minor) > major + minor * std::cos(v)) continue;
        const double ring = major + minor * std::cos(v);
        pc.points.push_back(center + Vec3(ring * std::cos(u), ring * std::sin(u),
                                          minor * std::sin(v)));
      }
      break;
    }
    case Shape::kWave: {
      while (static_cast<int>(pc.size()) < n) {
        const double x = rng.uniform01();
        const double y = rng.uniform01();
        const double z =
            0.5 + 0.15 * std::sin(2.0 * kPi * x) * std::cos(2.0 * kPi * y);
        pc.points.push_back(Vec3(x, y, z));
      }
      break;
    }
    case Shape::kBlob: {
      while (static_cast<int>(pc.size()) < n) {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Vec3 dir(s * std::cos(phi), s * std::sin(phi), z);
        const double theta = std::acos(z);
        const double radius =
            0.35 * (1.0 + 0.25 * std::sin(3.0 * theta) * std::sin(2.0 * phi));
        pc.points.push_back(center + radius * dir);
      }
      break;
    }
  }
  return pc;
}

/// Cycles through the shape catalogue; handy for building K distinct sources.
inline PointCloud sample_shape_cycle(int index, int n, std::uint64_t seed) {
  const Shape shapes[] = {Shape::kSphere, Shape::kTorus, Shape::kWave, Shape::kBlob};
  return sample_shape(shapes[index % 4], n, derive_seed(seed, index));
}

}  // namespace gqa

#endif  // GQA_SYNTHETIC_HPP
