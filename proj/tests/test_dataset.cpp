#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "gqa/dataset.hpp"
#include "gqa/synthetic.hpp"

using namespace gqa;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gqa_dataset_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<SourceCloud> tiny_sources(int count, int points) {
  std::vector<SourceCloud> sources;
  for (int i = 0; i < count; ++i) {
    sources.push_back({"src" + std::to_string(i), sample_shape_cycle(i, points, 50 + i)});
  }
  return sources;
}

}  // namespace

TEST_CASE("dataset combinatorics constants", "[dataset]") {
  CHECK(pairs_per_kind() == 15);        // C(6,2) over {pristine, L1..L5}
  CHECK(pairs_per_source() == 105);     // 15 * 7
  CHECK(distorted_per_source() == 35);  // 5 * 7
  CHECK(150 * pairs_per_source() == 15750);
  CHECK(150 * distorted_per_source() == 5250);
}

TEST_CASE("build_prld writes 35 distorted clouds and 105 pairs per source",
          "[dataset]") {
  const auto out_dir = temp_dir("prld");
  const auto sources = tiny_sources(2, 400);
  const BuildResult built = build_prld(sources, out_dir, 7);

  CHECK(built.manifest.rows.size() == 2 * 36);  // pristine + 35 each
  CHECK(built.pairs.size() == 2 * 105);
  int pristine = 0, distorted = 0;
  std::set<std::string> paths;
  for (const auto& row : built.manifest.rows) {
    REQUIRE(fs::exists(built.manifest.resolve(row)));
    REQUIRE(paths.insert(row.path).second);  // unique paths
    row.kind == kPristineKind ? ++pristine : ++distorted;
  }
  CHECK(pristine == 2);
  CHECK(distorted == 70);
}

TEST_CASE("pairs are ordered by severity within one kind", "[dataset]") {
  const auto pairs = make_level_pairs({"s"}, {Distortion::kGN});
  REQUIRE(pairs.size() == 15);
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    CHECK(p.target == 1.0);
    REQUIRE(seen.insert(p.a + "|" + p.b).second);
    // First member is strictly less distorted.
    const int la = std::stoi(p.a.substr(p.a.rfind('/') + 1));
    const int lb = std::stoi(p.b.substr(p.b.rfind('/') + 1));
    CHECK(la < lb);
    // Members share the source and (up to pristine) the kind.
    CHECK(p.a.substr(0, p.a.find('/')) == p.b.substr(0, p.b.find('/')));
    const std::string kind_b = p.b.substr(p.b.find('/') + 1,
                                          p.b.rfind('/') - p.b.find('/') - 1);
    CHECK(kind_b == "GN");
  }
  // L2 vs L4 exists with the L2 member first.
  bool found = false;
  for (const auto& p : pairs) {
    if (p.a == "s/GN/2" && p.b == "s/GN/4") found = true;
  }
  CHECK(found);
}

TEST_CASE("build_prld is deterministic", "[dataset]") {
  const auto dir_a = temp_dir("det_a");
  const auto dir_b = temp_dir("det_b");
  const auto sources = tiny_sources(1, 300);
  const BuildResult a = build_prld(sources, dir_a, 99);
  const BuildResult b = build_prld(sources, dir_b, 99);
  REQUIRE(a.manifest.rows.size() == b.manifest.rows.size());
  for (std::size_t i = 0; i < a.manifest.rows.size(); ++i) {
    const auto pa = a.manifest.resolve(a.manifest.rows[i]);
    const auto pb = b.manifest.resolve(b.manifest.rows[i]);
    std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    REQUIRE(!sa.empty());
    REQUIRE(sa == sb);
  }
}

TEST_CASE("manifest round trip", "[dataset]") {
  const auto out_dir = temp_dir("manifest_rt");
  Manifest m;
  m.base_dir = out_dir;
  m.rows.push_back({"a", "pristine", 0, "a.ply", std::nullopt, 1});
  m.rows.push_back({"a", "GN", 3, "a_gn3.ply", 0.731, 42});
  write_manifest(out_dir / "m.tsv", m);
  const Manifest back = read_manifest(out_dir / "m.tsv");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].kind == "pristine");
  CHECK_FALSE(back.rows[0].pseudo_mos.has_value());
  CHECK(back.rows[1].level == 3);
  CHECK(back.rows[1].pseudo_mos.value() == 0.731);
  CHECK(back.rows[1].seed == 42);
  CHECK(back.at("a/GN/3").path == "a_gn3.ply");
}

TEST_CASE("pair list round trip", "[dataset]") {
  const auto out_dir = temp_dir("pairs_rt");
  const std::vector<PairSample> pairs = {{"a/pristine/0", "a/GN/1", 1.0},
                                         {"a/GN/1", "a/GN/1", 0.5}};
  write_pairs(out_dir / "p.tsv", pairs);
  const auto back = read_pairs(out_dir / "p.tsv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].a == "a/pristine/0");
  CHECK(back[0].target == 1.0);
  CHECK(back[1].target == 0.5);
}

TEST_CASE("split by source is disjoint and sized by rounding", "[dataset]") {
  std::vector<std::string> ids;
  for (int i = 0; i < 150; ++i) ids.push_back("s" + std::to_string(i));
  const SourceSplit sp = split_sources(ids, 0.8, 3);
  CHECK(sp.train_ids.size() == 120);
  CHECK(sp.test_ids.size() == 30);
  CHECK(120 * pairs_per_source() == 12600);
  CHECK(30 * pairs_per_source() == 3150);
  for (const auto& id : sp.train_ids) {
    CHECK(std::find(sp.test_ids.begin(), sp.test_ids.end(), id) ==
          sp.test_ids.end());
  }

  std::vector<std::string> ten(ids.begin(), ids.begin() + 10);
  const SourceSplit sp10 = split_sources(ten, 0.8, 3);
  CHECK(sp10.train_ids.size() == 8);
  CHECK(sp10.test_ids.size() == 2);
  CHECK(8 * pairs_per_source() == 840);
  CHECK(2 * pairs_per_source() == 210);
}

TEST_CASE("pseudo-MOS scoring fills distorted rows only", "[dataset]") {
  const auto out_dir = temp_dir("pmos");
  const auto sources = tiny_sources(1, 1500);
  BuildResult built = build_prld(sources, out_dir, 5,
                                 {Distortion::kGN, Distortion::kRS});
  const auto report = build_pcgd_pmos(built.manifest, 12);
  CHECK(report.empty());
  for (const auto& row : built.manifest.rows) {
    if (row.kind == kPristineKind) {
      CHECK_FALSE(row.pseudo_mos.has_value());
    } else {
      REQUIRE(row.pseudo_mos.has_value());
      CHECK(*row.pseudo_mos >= 0.0);
      CHECK(*row.pseudo_mos <= 1.0);
    }
  }
}
