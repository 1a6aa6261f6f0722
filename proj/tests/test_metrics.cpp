#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Geometry>
#include <cmath>

#include "gqa/distortions.hpp"
#include "gqa/geometry.hpp"
#include "gqa/metrics.hpp"
#include "gqa/rng.hpp"
#include "gqa/synthetic.hpp"

using namespace gqa;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud pc;
  for (int i = 0; i < n; ++i) {
    pc.points.emplace_back(rng.uniform01(), rng.uniform01(), rng.uniform01());
  }
  return pc;
}

PointCloud plane_cloud(int n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud pc;
  for (int i = 0; i < n; ++i) {
    pc.points.emplace_back(rng.uniform01(), rng.uniform01(), 0.0);
    pc.normals.emplace_back(0, 0, 1);
  }
  return pc;
}

}  // namespace

TEST_CASE("po2po basics and brute-force agreement", "[metrics]") {
  PointCloud ref, deg;
  ref.points = {{0, 0, 0}};
  deg.points = {{1, 0, 0}};
  const auto single = po2po_error(ref, deg);
  REQUIRE(single.deg_to_ref == std::vector<double>{1.0});

  const PointCloud a = random_cloud(200, 1);
  const PointCloud b = random_cloud(200, 2);
  const auto values = po2po_error(a, b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : a.points) {
      best = std::min(best, (p - b.points[i]).squaredNorm());
    }
    REQUIRE(values.deg_to_ref[i] == best);
  }
  const auto self = po2po_error(a, a);
  for (double v : self.deg_to_ref) CHECK(v == 0.0);
}

TEST_CASE("po2pl closed forms", "[metrics]") {
  PointCloud ref;
  ref.points = {{0, 0, 0}};
  ref.normals = {{0, 0, 1}};
  PointCloud tangent;
  tangent.points = {{0.3, -0.2, 0}};  // displacement orthogonal to the normal
  CHECK(po2pl_error(ref, tangent).deg_to_ref[0] == 0.0);
  PointCloud along;
  along.points = {{0, 0, 0.5}};  // p - q = 0.5 * n
  CHECK(po2pl_error(ref, along).deg_to_ref[0] == 0.25);
}

TEST_CASE("po2pl vs po2po on plane clouds with directional noise", "[metrics]") {
  const PointCloud ref = plane_cloud(4000, 3);
  const double sigma = 0.01;
  Rng rng(4);
  PointCloud normal_noise, tangent_noise;
  normal_noise.points.reserve(ref.size());
  tangent_noise.points.reserve(ref.size());
  for (const Vec3& p : ref.points) {
    normal_noise.points.push_back(p + Vec3(0, 0, sigma * rng.gaussian()));
    tangent_noise.points.push_back(p + Vec3(sigma * rng.gaussian(),
                                            sigma * rng.gaussian(), 0));
  }
  const double po2pl_normal = detail::mean(po2pl_error(ref, normal_noise).deg_to_ref);
  const double po2po_normal = detail::mean(po2po_error(ref, normal_noise).deg_to_ref);
  CHECK(po2pl_normal == Catch::Approx(sigma * sigma).epsilon(0.1));
  // Pure normal-direction noise: both metrics see roughly sigma^2 (po2po can
  // be slightly smaller when a neighbour is closer than the true source).
  CHECK(po2po_normal == Catch::Approx(sigma * sigma).epsilon(0.2));

  const double po2pl_tangent =
      detail::mean(po2pl_error(ref, tangent_noise).deg_to_ref);
  const double po2po_tangent =
      detail::mean(po2po_error(ref, tangent_noise).deg_to_ref);
  CHECK(po2pl_tangent == 0.0);  // projection kills tangential error
  CHECK(po2po_tangent > 0.0);
}

TEST_CASE("po2pl error never exceeds po2po error per correspondence", "[metrics]") {
  const PointCloud base = random_cloud(500, 5);
  const auto ref = estimate_normals(base, 8).cloud;
  const PointCloud deg = random_cloud(300, 6);
  const auto plane = po2pl_error(ref, deg);
  const auto point = po2po_error(ref, deg);
  for (std::size_t i = 0; i < plane.deg_to_ref.size(); ++i) {
    CHECK(plane.deg_to_ref[i] <= point.deg_to_ref[i] + 1e-15);
  }
}

TEST_CASE("pl2pl similarity closed forms", "[metrics]") {
  PointCloud ref;
  ref.points = {{0, 0, 0}};
  ref.normals = {{0, 0, 1}};
  PointCloud deg = ref;
  CHECK(pl2pl_similarity(ref, deg).deg_to_ref[0] == 1.0);   // identical
  deg.normals = {{0, 0, -1}};
  CHECK(pl2pl_similarity(ref, deg).deg_to_ref[0] == 1.0);   // antiparallel
  deg.normals = {{1, 0, 0}};
  CHECK(pl2pl_similarity(ref, deg).deg_to_ref[0] ==
        Catch::Approx(0.0).margin(1e-12));                  // orthogonal
}

TEST_CASE("pl2pl similarity is sign-invariant and in [0,1]", "[metrics]") {
  const auto ref = estimate_normals(random_cloud(300, 7), 8).cloud;
  auto deg = estimate_normals(random_cloud(300, 8), 8).cloud;
  const auto before = pl2pl_similarity(ref, deg);
  Rng rng(9);
  for (Vec3& n : deg.normals) {
    if (rng.next_u64() & 1u) n = -n;
  }
  const auto after = pl2pl_similarity(ref, deg);
  for (std::size_t i = 0; i < before.deg_to_ref.size(); ++i) {
    CHECK(after.deg_to_ref[i] == before.deg_to_ref[i]);
    CHECK(before.deg_to_ref[i] >= 0.0);
    CHECK(before.deg_to_ref[i] <= 1.0);
  }
}

TEST_CASE("pooling closed forms", "[metrics]") {
  PointCloud ref;
  ref.points = {{0, 0, 0}, {1, 0, 0}};  // diagonal 1

  DirectionalValues values;
  values.deg_to_ref = {1.0};
  values.ref_to_deg = {1.0};
  const auto psnr = pool(values, {MetricFamily::kPo2Po, Pooling::kPsnr}, ref);
  CHECK(psnr.value == Catch::Approx(0.0).margin(1e-12));  // 10 log10(1/1)
  CHECK(psnr.higher_better);

  values.deg_to_ref = {0.0, 4.0};
  values.ref_to_deg = {1.0};
  const auto mse = pool(values, {MetricFamily::kPo2Po, Pooling::kMse}, ref);
  CHECK(mse.value == 2.0);  // max(mean{0,4}, mean{1})
  const auto hausdorff = pool(values, {MetricFamily::kPo2Po, Pooling::kHausdorff}, ref);
  CHECK(hausdorff.value == 2.0);  // sqrt(max squared error 4)
}

TEST_CASE("identical clouds pool to the perfect values", "[metrics]") {
  const PointCloud pc = sample_shape(Shape::kSphere, 600, 10);
  for (const auto kind : all_metric_kinds()) {
    const MetricResult r = compute_metric(kind, pc, pc, 12);
    if (kind.pooling == Pooling::kPsnr) {
      CHECK(r.perfect);
      CHECK(std::isinf(r.value));
    } else {
      CHECK(r.value == 0.0);
    }
  }
}

TEST_CASE("po2po and po2pl are invariant under joint rigid motion", "[metrics]") {
  const PointCloud a0 = random_cloud(400, 11);
  const PointCloud b0 = random_cloud(350, 12);
  const auto ref0 = estimate_normals(a0, 8).cloud;
  const double angle = 0.83;
  Eigen::Matrix3d rot;
  rot = Eigen::AngleAxisd(angle, Vec3(1, 2, 3).normalized());
  const Vec3 shift(4, -1, 2);
  auto moved = [&](const PointCloud& pc) {
    PointCloud out;
    for (const Vec3& p : pc.points) out.points.push_back(rot * p + shift);
    for (const Vec3& n : pc.normals) out.normals.push_back(rot * n);
    return out;
  };
  const auto e0 = po2po_error(a0, b0);
  const auto e1 = po2po_error(moved(a0), moved(b0));
  for (std::size_t i = 0; i < e0.deg_to_ref.size(); ++i) {
    CHECK(e1.deg_to_ref[i] == Catch::Approx(e0.deg_to_ref[i]).margin(1e-9));
  }
  const auto p0 = po2pl_error(ref0, b0);
  const auto p1 = po2pl_error(moved(ref0), moved(b0));
  for (std::size_t i = 0; i < p0.deg_to_ref.size(); ++i) {
    CHECK(p1.deg_to_ref[i] == Catch::Approx(p0.deg_to_ref[i]).margin(1e-9));
  }
}

TEST_CASE("psnr ranking is the reverse of mse ranking", "[metrics]") {
  const PointCloud base = normalize_unit_cube(sample_shape(Shape::kSphere, 2000, 13)).cloud;
  const double l_r = ref_edge_length(base);
  std::vector<double> mse_values, psnr_values;
  for (int level = 1; level <= 5; ++level) {
    const PointCloud deg = apply_gaussian_noise(base, l_r, level, 14);
    mse_values.push_back(
        compute_metric({MetricFamily::kPo2Po, Pooling::kMse}, base, deg).value);
    psnr_values.push_back(
        compute_metric({MetricFamily::kPo2Po, Pooling::kPsnr}, base, deg).value);
  }
  // argsort(mse) ascending == argsort(psnr) descending.
  for (int i = 0; i < 4; ++i) {
    CHECK(mse_values[i] < mse_values[i + 1]);
    CHECK(psnr_values[i] > psnr_values[i + 1]);
  }
}

TEST_CASE("pseudo-MOS of a cloud against itself is exactly 1", "[metrics]") {
  const PointCloud pc = sample_shape(Shape::kTorus, 1200, 15);
  CHECK(pseudo_mos(pc, pc, 12) == 1.0);
}

TEST_CASE("pseudo-MOS of orthogonal synthetic normals is 0", "[metrics]") {
  PointCloud ref, deg;
  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(rng.uniform01(), rng.uniform01(), rng.uniform01());
    ref.points.push_back(p);
    ref.normals.emplace_back(0, 0, 1);
    deg.points.push_back(p);
    deg.normals.emplace_back(1, 0, 0);
  }
  CHECK(pseudo_mos(ref, deg) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pseudo-MOS decreases monotonically over noise levels", "[metrics]") {
  const PointCloud base =
      normalize_unit_cube(sample_shape(Shape::kSphere, 10000, 17)).cloud;
  const double l_r = ref_edge_length(base);
  double prev = 1.1;
  for (int level = 1; level <= 5; ++level) {
    const PointCloud deg = apply_gaussian_noise(base, l_r, level, 18);
    const double score = pseudo_mos(base, deg);
    CHECK(score < prev);
    prev = score;
  }
}

TEST_CASE("metric names round trip", "[metrics]") {
  for (const auto kind : all_metric_kinds()) {
    const auto back = metric_from_name(metric_name(kind));
    CHECK(back.family == kind.family);
    CHECK(back.pooling == kind.pooling);
  }
  CHECK_THROWS_AS(metric_from_name("po2po_median"), DataError);
}
