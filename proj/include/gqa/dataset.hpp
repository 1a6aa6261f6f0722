#ifndef GQA_DATASET_HPP
#define GQA_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/distortions.hpp"
#include "gqa/geometry.hpp"
#include "gqa/io.hpp"
#include "gqa/metrics.hpp"
#include "gqa/point_cloud.hpp"
#include "gqa/rng.hpp"

namespace gqa {

inline constexpr const char* kPristineKind = "pristine";

/// Dataset combinatorics: levels {pristine=0, 1..5} give C(6,2) = 15
/// ordered-by-severity pairs per distortion kind.
inline constexpr int pairs_per_kind() { return 15; }
inline constexpr int pairs_per_source(int kinds = 7) { return pairs_per_kind() * kinds; }
inline constexpr int distorted_per_source(int kinds = 7) { return kDistortionLevels * kinds; }

/// One generated cloud: the pristine source or a distorted variant.
struct ManifestRow {
  std::string source_id;
  std::string kind = kPristineKind;  // distortion name or "pristine"
  int level = 0;                     // 0 for pristine
  std::string path;                  // relative to the manifest directory
  std::optional<double> pseudo_mos;
  std::uint64_t seed = 0;

  std::string key() const {
    return source_id + "/" + kind + "/" + std::to_string(level);
  }
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRow> rows;

  const ManifestRow& at(const std::string& key) const {
    for (const auto& r : rows) {
      if (r.key() == key) return r;
    }
    throw DataError("manifest has no row '" + key + "'");
  }

  std::filesystem::path resolve(const ManifestRow& row) const {
    return base_dir / row.path;
  }

  std::vector<std::string> source_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : rows) {
      if (std::find(ids.begin(), ids.end(), r.source_id) == ids.end()) {
        ids.push_back(r.source_id);
      }
    }
    return ids;
  }
};

/// A pairwise training sample: two variants of one source under one
/// distortion kind, and the target probability that `a` is the better one.
struct PairSample {
  std::string a;
  std::string b;
  double target = 1.0;  // 1 iff a is less distorted; 0.5 for equal severity
};

// ---------------------------------------------------------------------------
// Manifest and pair-list files: UTF-8, one record per line, tab-separated,
// '#' header line. Missing pseudo-MOS is written as '-'.
// ---------------------------------------------------------------------------

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << "# source_id\tkind\tlevel\tpath\tpseudo_mos\tseed\n";
  char buf[64];
  for (const auto& r : m.rows) {
    f << r.source_id << '\t' << r.kind << '\t' << r.level << '\t' << r.path << '\t';
    if (r.pseudo_mos) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.pseudo_mos);
      f << buf;
    } else {
      f << '-';
    }
    f << '\t' << r.seed << '\n';
  }
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path.string() + "'");
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 6) {
      throw detail::parse_error(path, lineno, "expected 6 tab-separated fields");
    }
    ManifestRow r;
    r.source_id = fields[0];
    r.kind = fields[1];
    try {
      r.level = std::stoi(fields[2]);
      r.path = fields[3];
      if (fields[4] != "-") r.pseudo_mos = std::stod(fields[4]);
      r.seed = std::stoull(fields[5]);
    } catch (const std::exception&) {
      throw detail::parse_error(path, lineno, "malformed numeric field");
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

inline void write_pairs(const std::filesystem::path& path,
                        const std::vector<PairSample>& pairs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << "# cloud_a\tcloud_b\ttarget\n";
  char buf[32];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, "%g", p.target);
    f << p.a << '\t' << p.b << '\t' << buf << '\n';
  }
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

inline std::vector<PairSample> read_pairs(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path.string() + "'");
  std::vector<PairSample> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    PairSample p;
    if (!(ss >> p.a >> p.b >> p.target)) {
      throw detail::parse_error(path, lineno, "expected 'a b target'");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Dataset builders
// ---------------------------------------------------------------------------

struct SourceCloud {
  std::string id;
  PointCloud cloud;
};

struct BuildResult {
  Manifest manifest;
  std::vector<PairSample> pairs;
};

/// All C(6,2) severity-ordered pairs over {pristine, L1..L5} for each kind,
/// per source: 15 per kind, 105 per source over the full kind set. The
/// first member is always the less distorted one, so target = 1.
inline std::vector<PairSample> make_level_pairs(
    const std::vector<std::string>& source_ids,
    const std::vector<Distortion>& kinds) {
  std::vector<PairSample> pairs;
  for (const auto& sid : source_ids) {
    for (Distortion kind : kinds) {
      for (int la = 0; la <= kDistortionLevels; ++la) {
        for (int lb = la + 1; lb <= kDistortionLevels; ++lb) {
          PairSample p;
          p.a = sid + "/" + (la == 0 ? kPristineKind : distortion_name(kind)) +
                "/" + std::to_string(la);
          p.b = sid + "/" + distortion_name(kind) + "/" + std::to_string(lb);
          p.target = 1.0;
          pairs.push_back(std::move(p));
        }
      }
    }
  }
  return pairs;
}

/// Builds the rank dataset: per source, the unit-cube-normalized pristine
/// cloud plus 5 levels of each requested distortion kind, written as ascii
/// PLY under `out_dir`, with severity-ordered pairs. Every generated file
/// records its seed in the manifest; the build is a pure function of
/// (sources, kinds, master_seed).
inline BuildResult build_prld(const std::vector<SourceCloud>& sources,
                              const std::filesystem::path& out_dir,
                              std::uint64_t master_seed,
                              const std::vector<Distortion>& kinds = {
                                  kAllDistortions.begin(), kAllDistortions.end()}) {
  if (sources.empty()) throw DataError("build_prld requires at least one source");
  std::filesystem::create_directories(out_dir);
  BuildResult out;
  out.manifest.base_dir = out_dir;
  std::vector<std::string> ids;
  for (std::size_t si = 0; si < sources.size(); ++si) {
    const auto& src = sources[si];
    if (src.cloud.size() < 2) {
      throw DataError("source '" + src.id + "' has fewer than 2 points");
    }
    ids.push_back(src.id);
    PointCloud base = normalize_unit_cube(src.cloud).cloud;
    base.normals.clear();  // geometry-only pipeline
    const double l_r = ref_edge_length(base);
    const std::uint64_t source_seed = derive_seed(master_seed, fnv1a(src.id));

    ManifestRow pristine;
    pristine.source_id = src.id;
    pristine.path = src.id + "_pristine.ply";
    pristine.seed = source_seed;
    save_cloud(out_dir / pristine.path, base, CloudFormat::kPlyAscii,
               {"seed " + std::to_string(source_seed)});
    out.manifest.rows.push_back(pristine);

    for (Distortion kind : kinds) {
      for (int level = 1; level <= kDistortionLevels; ++level) {
        const std::uint64_t seed = derive_seed(
            source_seed, fnv1a(distortion_name(kind)), static_cast<std::uint64_t>(level));
        PointCloud degraded;
        try {
          degraded = apply_distortion(base, l_r, kind, level, seed);
        } catch (const Error& e) {
          throw DataError("source '" + src.id + "', " +
                          distortion_name(kind) + " level " +
                          std::to_string(level) + ": " + e.what());
        }
        ManifestRow row;
        row.source_id = src.id;
        row.kind = distortion_name(kind);
        row.level = level;
        row.path = src.id + "_" + row.kind + "_" + std::to_string(level) + ".ply";
        row.seed = seed;
        save_cloud(out_dir / row.path, degraded, CloudFormat::kPlyAscii,
                   {"seed " + std::to_string(seed)});
        out.manifest.rows.push_back(std::move(row));
      }
    }
  }
  out.pairs = make_level_pairs(ids, kinds);
  return out;
}

/// Splits source ids into train/test groups by reference cloud (no source
/// appears in both). `train_fraction` of the sources, rounded, train.
struct SourceSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

inline SourceSplit split_sources(std::vector<std::string> ids, double train_fraction,
                                 std::uint64_t seed) {
  if (ids.empty()) throw DataError("split of zero sources");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw DataError("train fraction must be in [0,1]");
  }
  Rng rng(seed);
  rng.shuffle(ids);
  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(ids.size()) + 0.5));
  SourceSplit split;
  split.train_ids.assign(ids.begin(), ids.begin() + n_train);
  split.test_ids.assign(ids.begin() + n_train, ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

inline std::vector<PairSample> pairs_for_sources(
    const std::vector<PairSample>& pairs, const std::vector<std::string>& ids) {
  std::vector<PairSample> out;
  for (const auto& p : pairs) {
    const std::string sid = p.a.substr(0, p.a.find('/'));
    if (std::find(ids.begin(), ids.end(), sid) != ids.end()) out.push_back(p);
  }
  return out;
}

/// Per-row failure report from pseudo-MOS scoring.
struct RowError {
  std::string key;
  std::string message;
};

/// Scores every distorted row against its pristine source with the mean
/// angular-similarity pseudo-MOS in [0,1]. Rows that fail (missing file,
/// degenerate normals) are collected into the report, not fatal.
inline std::vector<RowError> build_pcgd_pmos(Manifest& manifest, int k_normals = 16) {
  std::vector<RowError> report;
  std::map<std::string, PointCloud> pristine_cache;
  for (auto& row : manifest.rows) {
    if (row.kind == kPristineKind) continue;
    try {
      auto it = pristine_cache.find(row.source_id);
      if (it == pristine_cache.end()) {
        const ManifestRow& p = manifest.at(row.source_id + "/" +
                                           kPristineKind + "/0");
        it = pristine_cache
                 .emplace(row.source_id, load_cloud(manifest.resolve(p)))
                 .first;
      }
      const PointCloud degraded = load_cloud(manifest.resolve(row));
      row.pseudo_mos = pseudo_mos(it->second, degraded, k_normals);
    } catch (const Error& e) {
      report.push_back({row.key(), e.what()});
    }
  }
  return report;
}

}  // namespace gqa

#endif  // GQA_DATASET_HPP
