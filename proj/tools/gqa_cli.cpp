// Command-line front end for the geometry quality assessment toolkit:
// dataset synthesis, full-reference metrics, rank training, scoring, and
// evaluation reports.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gqa/gqa.hpp"

namespace fs = std::filesystem;
using namespace gqa;

namespace {

std::vector<Distortion> parse_kinds(const std::string& csv) {
  if (csv == "all") return {kAllDistortions.begin(), kAllDistortions.end()};
  std::vector<Distortion> kinds;
  std::size_t at = 0;
  while (at <= csv.size()) {
    const std::size_t comma = csv.find(',', at);
    const std::string tok = csv.substr(at, comma - at);
    if (!tok.empty()) kinds.push_back(distortion_from_name(tok));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  if (kinds.empty()) throw DataError("no distortion kinds given");
  return kinds;
}

std::vector<SourceCloud> load_sources(const std::vector<std::string>& files,
                                      const std::string& dir) {
  std::vector<std::string> paths = files;
  if (!dir.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = entry.path().extension().string();
      if (ext == ".ply" || ext == ".xyz" || ext == ".txt") {
        paths.push_back(entry.path().string());
      }
    }
  }
  std::sort(paths.begin(), paths.end());  // directory order is not stable
  if (paths.empty()) throw DataError("no source clouds given");
  std::vector<SourceCloud> sources;
  for (const auto& p : paths) {
    SourceCloud sc;
    sc.id = fs::path(p).stem().string();
    sc.cloud = load_cloud(p);
    sources.push_back(std::move(sc));
  }
  return sources;
}

struct TrainCliOptions {
  TrainConfig config;
  std::string block_subset = "1234";

  void attach(CLI::App* cmd) {
    cmd->add_option("--batch", config.batch_size, "Mini-batch size");
    cmd->add_option("--epochs", config.epochs, "Training epochs");
    cmd->add_option("--lr", config.learning_rate, "Initial learning rate");
    cmd->add_option("--lr-halve-every", config.lr_halve_every,
                    "Epochs between halvings of the learning rate");
    cmd->add_option("--patches", config.train_patches, "Patches per cloud (training)");
    cmd->add_option("--test-patches", config.test_patches, "Patches per cloud (testing)");
    cmd->add_option("--points", config.patch_points, "Points per patch");
    cmd->add_option("--radius-scale", config.radius_scale,
                    "Patch radius in units of l_r (0 = automatic)");
    cmd->add_option("--seed", config.seed, "Run seed");
    cmd->add_flag("--freeze-patches", [this](std::int64_t) {
      config.refresh_patches = false;
    }, "Sample patches once instead of once per epoch");
    cmd->add_flag("--no-patch", config.no_patch,
                  "Ablation: whole cloud as one FPS-sampled patch");
    cmd->add_flag("--equal-weights", config.equal_weights,
                  "Ablation: constant patch weights");
    cmd->add_option("--blocks", block_subset,
                    "Ablation: blocks in the feature, e.g. 34 for blocks 3+4");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config;
    cfg.block_subset = {false, false, false, false};
    for (char c : block_subset) {
      if (c < '1' || c > '4') throw DataError("--blocks must use digits 1-4");
      cfg.block_subset[c - '1'] = true;
    }
    return cfg;
  }
};

std::vector<std::string> kind_columns(const std::vector<std::string>& present) {
  // Fixed presentation order, restricted to what the data contains.
  const std::vector<std::string> order = {"OC", "GS", "RS", "GN", "UN", "IN", "EN"};
  std::vector<std::string> out;
  for (const auto& k : order) {
    if (std::find(present.begin(), present.end(), k) != present.end()) {
      out.push_back(k);
    }
  }
  return out;
}

/// Cached per-row full-reference metric values for one metric family.
class FamilyScores {
 public:
  FamilyScores(MetricFamily family, const Manifest& manifest, int k_normals)
      : family_(family), manifest_(manifest), k_normals_(k_normals) {}

  /// Pooled value of the row's cloud against its pristine source.
  MetricResult value(const ManifestRow& row, Pooling pooling) {
    const std::string cache_key = row.key() + "#" + pooling_name(pooling);
    auto it = cache_.find(cache_key);
    if (it != cache_.end()) return it->second;
    const PointCloud& ref = pristine(row.source_id);
    const PointCloud deg = load_cloud(manifest_.resolve(row));
    const MetricResult r = compute_metric({family_, pooling}, ref, deg, k_normals_);
    cache_.emplace(cache_key, r);
    return r;
  }

 private:
  const PointCloud& pristine(const std::string& source_id) {
    auto it = pristine_.find(source_id);
    if (it == pristine_.end()) {
      const ManifestRow& row = manifest_.at(source_id + "/pristine/0");
      it = pristine_.emplace(source_id, load_cloud(manifest_.resolve(row))).first;
    }
    return it->second;
  }

  MetricFamily family_;
  const Manifest& manifest_;
  int k_normals_;
  std::map<std::string, PointCloud> pristine_;
  std::map<std::string, MetricResult> cache_;
};

int run_gen(const std::vector<std::string>& files, const std::string& dir,
            const std::string& out_dir, std::uint64_t seed, const std::string& kinds_csv,
            bool with_pmos, int k_normals) {
  const auto sources = load_sources(files, dir);
  const auto kinds = parse_kinds(kinds_csv);
  BuildResult built = build_prld(sources, out_dir, seed, kinds);
  std::vector<RowError> report;
  if (with_pmos) report = build_pcgd_pmos(built.manifest, k_normals);
  write_manifest(fs::path(out_dir) / "manifest.tsv", built.manifest);
  write_pairs(fs::path(out_dir) / "all_pairs.tsv", built.pairs);
  std::printf("sources=%zu distorted=%zu pairs=%zu seed=%llu\n", sources.size(),
              built.manifest.rows.size() - sources.size(), built.pairs.size(),
              static_cast<unsigned long long>(seed));
  for (const auto& e : report) {
    std::fprintf(stderr, "pseudo-mos failed for %s: %s\n", e.key.c_str(),
                 e.message.c_str());
  }
  return report.empty() ? 0 : 2;
}

int run_pairs(const std::string& manifest_path, const std::string& out_dir,
              double split, std::uint64_t seed) {
  const Manifest manifest = read_manifest(manifest_path);
  const auto ids = manifest.source_ids();
  // Kinds actually present (complete 5-level sets).
  std::vector<Distortion> kinds;
  for (Distortion d : kAllDistortions) {
    bool complete = true;
    for (const auto& id : ids) {
      for (int level = 1; level <= kDistortionLevels; ++level) {
        const std::string key =
            id + "/" + distortion_name(d) + "/" + std::to_string(level);
        bool found = false;
        for (const auto& r : manifest.rows) {
          if (r.key() == key) { found = true; break; }
        }
        if (!found) { complete = false; break; }
      }
      if (!complete) break;
    }
    if (complete) kinds.push_back(d);
  }
  if (kinds.empty()) throw DataError("manifest holds no complete distortion sets");
  const SourceSplit sp = split_sources(ids, split, seed);
  const auto train = make_level_pairs(sp.train_ids, kinds);
  const auto test = make_level_pairs(sp.test_ids, kinds);
  fs::create_directories(out_dir);
  write_pairs(fs::path(out_dir) / "train_pairs.tsv", train);
  write_pairs(fs::path(out_dir) / "test_pairs.tsv", test);
  std::printf("train_sources=%zu test_sources=%zu train_pairs=%zu test_pairs=%zu seed=%llu\n",
              sp.train_ids.size(), sp.test_ids.size(), train.size(), test.size(),
              static_cast<unsigned long long>(seed));
  return 0;
}

int run_train(const std::string& manifest_path, const std::string& pairs_path,
              const std::string& out_dir, const TrainCliOptions& opts) {
  const Manifest manifest = read_manifest(manifest_path);
  const auto pairs = read_pairs(pairs_path);
  const TrainConfig cfg = opts.resolve();
  CloudStore store(manifest);
  char run_name[32];
  std::snprintf(run_name, sizeof run_name, "run_%016llx",
                static_cast<unsigned long long>(cfg.digest()));
  const fs::path run_dir = fs::path(out_dir) / run_name;
  TrainResult result = train_rank(store, pairs, cfg, run_dir);
  save_model(run_dir / "final.gqan", result.params);
  std::ofstream(run_dir / "config.txt") << cfg.to_text();
  const auto& last = result.log.back();
  std::printf("run_dir=%s final_loss=%.6f train_accuracy=%.4f\n",
              run_dir.string().c_str(), last.mean_loss, last.pair_accuracy);
  return 0;
}

int run_finetune(const std::string& manifest_path, const std::string& weights,
                 const std::string& out_dir, double split,
                 const TrainCliOptions& opts) {
  const Manifest manifest = read_manifest(manifest_path);
  const TrainConfig cfg = opts.resolve();
  std::vector<ScoredCloud> scored;
  std::vector<std::string> usable_ids;
  for (const auto& row : manifest.rows) {
    if (row.kind == kPristineKind || !row.pseudo_mos) continue;
    scored.push_back({row.key(), *row.pseudo_mos});
  }
  if (scored.empty()) {
    throw DataError("manifest has no scored rows (run the pmos command first)");
  }
  if (split < 1.0) {
    const SourceSplit sp = split_sources(manifest.source_ids(), split, cfg.seed);
    std::vector<ScoredCloud> train;
    for (const auto& s : scored) {
      const std::string sid = s.key.substr(0, s.key.find('/'));
      if (std::find(sp.train_ids.begin(), sp.train_ids.end(), sid) !=
          sp.train_ids.end()) {
        train.push_back(s);
      }
    }
    scored = std::move(train);
  }
  CloudStore store(manifest);
  ModelParams pretrained = load_model(weights);
  char run_name[32];
  std::snprintf(run_name, sizeof run_name, "ft_%016llx",
                static_cast<unsigned long long>(cfg.digest()));
  const fs::path run_dir = fs::path(out_dir) / run_name;
  std::vector<RowError> rejected;
  TrainResult result =
      finetune_scores(store, scored, pretrained, cfg, run_dir, &rejected);
  save_model(run_dir / "final.gqan", result.params);
  std::ofstream(run_dir / "config.txt") << cfg.to_text();
  for (const auto& e : rejected) {
    std::fprintf(stderr, "rejected %s: %s\n", e.key.c_str(), e.message.c_str());
  }
  std::printf("run_dir=%s rows=%zu final_mse=%.8f\n", run_dir.string().c_str(),
              scored.size(), result.log.back().mean_loss);
  return 0;
}

int run_rank(const std::string& weights, const std::string& file_a,
             const std::string& file_b, const TrainCliOptions& opts) {
  const TrainConfig cfg = opts.resolve();
  const ModelParams params = load_model(weights);
  const PointCloud a = load_cloud(file_a);
  const PointCloud b = load_cloud(file_b);
  // Shared centres from cloud A keep the comparison region-aligned.
  const double l_r = cfg.no_patch ? 1.0 : ref_edge_length(a);
  double s_a, s_b;
  if (cfg.no_patch) {
    s_a = predict(params, a, cfg, derive_seed(cfg.seed, 1));
    s_b = predict(params, b, cfg, derive_seed(cfg.seed, 2));
  } else {
    auto [pa, pb] = paired_patches(a, b, cfg.test_patches, cfg.patch_radius(l_r),
                                   cfg.patch_points, cfg.seed);
    s_a = forward_cloud(params, pa, cfg.eval_options());
    s_b = forward_cloud(params, pb, cfg.eval_options());
  }
  const double p_ab = rank_probability(s_a, s_b);
  const char* verdict = p_ab > 0.5 ? "A" : (p_ab < 0.5 ? "B" : "tie");
  std::printf("%s %.6f\n", verdict, p_ab);
  std::printf("S_A=%.6f S_B=%.6f seed=%llu\n", s_a, s_b,
              static_cast<unsigned long long>(cfg.seed));
  return 0;
}

int run_score(const std::string& weights, const std::string& input,
              const TrainCliOptions& opts) {
  const TrainConfig cfg = opts.resolve();
  const ModelParams params = load_model(weights);
  const PointCloud pc = load_cloud(input);
  const double s = predict(params, pc, cfg, cfg.seed);
  std::printf("%.6f\n", s);
  std::printf("seed=%llu patches=%d points=%d\n",
              static_cast<unsigned long long>(cfg.seed), cfg.test_patches,
              cfg.patch_points);
  return 0;
}

int run_frmetric(const std::string& metric, const std::string& ref_path,
                 const std::string& deg_path, int k_normals) {
  const MetricKind kind = metric_from_name(metric);
  const PointCloud ref = load_cloud(ref_path);
  const PointCloud deg = load_cloud(deg_path);
  const MetricResult r = compute_metric(kind, ref, deg, k_normals);
  std::printf("%s %.9g %s%s\n", metric.c_str(), r.value,
              r.higher_better ? "higher_better" : "lower_better",
              r.perfect ? " perfect" : "");
  return 0;
}

int run_eval(const std::string& manifest_path, const std::string& pairs_path,
             const std::string& mode, const std::string& metrics_csv,
             const std::string& weights, int k_normals, const TrainCliOptions& opts) {
  const Manifest manifest = read_manifest(manifest_path);
  const TrainConfig cfg = opts.resolve();

  std::vector<MetricKind> metrics;
  if (metrics_csv == "all") {
    metrics = all_metric_kinds();
  } else {
    std::size_t at = 0;
    while (at <= metrics_csv.size()) {
      const std::size_t comma = metrics_csv.find(',', at);
      const std::string tok = metrics_csv.substr(at, comma - at);
      if (!tok.empty()) metrics.push_back(metric_from_name(tok));
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
  }

  std::map<MetricFamily, std::unique_ptr<FamilyScores>> families;
  for (const auto& m : metrics) {
    if (!families.count(m.family)) {
      families.emplace(m.family,
                       std::make_unique<FamilyScores>(m.family, manifest, k_normals));
    }
  }

  std::optional<ModelParams> model;
  std::map<std::string, double> model_scores;  // row key -> predicted S
  if (!weights.empty()) model = load_model(weights);
  CloudStore store(manifest);
  auto model_score = [&](const ManifestRow& row) {
    auto it = model_scores.find(row.key());
    if (it != model_scores.end()) return it->second;
    const double s = predict(*model, store.cloud(row.key()), cfg,
                             derive_seed(cfg.seed, fnv1a(row.key())));
    model_scores.emplace(row.key(), s);
    return s;
  };

  std::vector<std::string> present;
  for (const auto& r : manifest.rows) {
    if (r.kind == kPristineKind) continue;
    if (std::find(present.begin(), present.end(), r.kind) == present.end()) {
      present.push_back(r.kind);
    }
  }
  const auto columns = kind_columns(present);
  if (columns.empty()) throw DataError("manifest has no distorted rows");

  std::printf("# mode=%s\n", mode.c_str());
  std::printf("metric");
  for (const auto& k : columns) std::printf("\t%s", k.c_str());
  std::printf("\tmean\n");

  auto print_row = [&](const std::string& name, const std::map<std::string, double>& per_kind) {
    std::printf("%s", name.c_str());
    double sum = 0.0;
    for (const auto& k : columns) {
      const double v = per_kind.at(k);
      std::printf("\t%.3f", v);
      sum += v;
    }
    std::printf("\t%.3f\n", sum / static_cast<double>(columns.size()));
  };

  if (mode == "acc") {
    if (pairs_path.empty()) throw DataError("acc mode requires --pairs");
    const auto pairs = read_pairs(pairs_path);
    auto eval_scorer = [&](auto&& better_a) {
      std::map<std::string, ConfusionCounts> counts;
      for (const auto& p : pairs) {
        if (p.target == 0.5) continue;
        const ManifestRow& ra = manifest.at(p.a);
        const ManifestRow& rb = manifest.at(p.b);
        const std::string kind = rb.kind;  // the non-pristine member
        counts[kind].add(better_a(ra, rb), p.target > 0.5);
      }
      std::map<std::string, double> acc;
      for (const auto& k : columns) {
        if (!counts.count(k)) throw DataError("no pairs for kind " + k);
        acc[k] = 100.0 * counts[k].accuracy();
      }
      return acc;
    };
    for (const auto& m : metrics) {
      auto& fam = *families.at(m.family);
      print_row(metric_name(m), eval_scorer([&](const ManifestRow& ra,
                                                const ManifestRow& rb) {
        return fam.value(ra, m.pooling).better_than(fam.value(rb, m.pooling));
      }));
    }
    if (model) {
      print_row("model", eval_scorer([&](const ManifestRow& ra, const ManifestRow& rb) {
        return model_score(ra) > model_score(rb);
      }));
    }
  } else if (mode == "ltest") {
    auto eval_cells = [&](auto&& score_of, ScoreOrientation orientation) {
      std::map<std::string, double> per_kind;
      for (const auto& k : columns) {
        std::map<std::string, LTestCell> cells;  // by source id
        for (const auto& r : manifest.rows) {
          if (r.kind != k) continue;
          cells[r.source_id].levels.push_back(static_cast<double>(r.level));
          cells[r.source_id].scores.push_back(score_of(r));
        }
        std::vector<LTestCell> list;
        for (auto& [sid, cell] : cells) list.push_back(std::move(cell));
        per_kind[k] = l_test(list, orientation);
      }
      return per_kind;
    };
    for (const auto& m : metrics) {
      auto& fam = *families.at(m.family);
      const auto r0 = [&](const ManifestRow& row) {
        return fam.value(row, m.pooling).value;
      };
      // PSNR of identical clouds is +inf; SRCC over ranks handles it fine.
      const ScoreOrientation orientation = (m.pooling == Pooling::kPsnr)
                                               ? ScoreOrientation::kHigherBetter
                                               : ScoreOrientation::kLowerBetter;
      print_row(metric_name(m), eval_cells(r0, orientation));
    }
    if (model) {
      print_row("model", eval_cells([&](const ManifestRow& row) {
        return model_score(row);
      }, ScoreOrientation::kHigherBetter));
    }
  } else {
    throw DataError("unknown eval mode '" + mode + "' (use acc or ltest)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud geometry quality assessment toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic test cloud");
  std::string synth_shape = "sphere", synth_out = "cloud.ply";
  int synth_points = 10000;
  std::uint64_t synth_seed = 0;
  synth->add_option("--shape", synth_shape, "sphere|torus|wave|blob");
  synth->add_option("--points", synth_points, "Point count");
  synth->add_option("--seed", synth_seed, "Sampling seed");
  synth->add_option("--out", synth_out, "Output file (.ply or .xyz)");

  // gen
  auto* gen = app.add_subcommand("gen", "Build the distortion dataset");
  std::vector<std::string> gen_sources;
  std::string gen_source_dir, gen_out = "dataset", gen_kinds = "all";
  std::uint64_t gen_seed = 0;
  bool gen_pmos = false;
  int gen_k = 16;
  gen->add_option("--source", gen_sources, "Source cloud file (repeatable)");
  gen->add_option("--source-dir", gen_source_dir, "Directory of source clouds");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--kinds", gen_kinds, "Comma list of distortion kinds, or 'all'");
  gen->add_flag("--pmos", gen_pmos, "Also score rows with the pseudo-MOS");
  gen->add_option("--normals-k", gen_k, "PCA neighbourhood for normals");

  // pmos
  auto* pmos = app.add_subcommand("pmos", "Score a manifest with the pseudo-MOS");
  std::string pmos_manifest;
  int pmos_k = 16;
  pmos->add_option("--manifest", pmos_manifest, "Manifest to score (updated in place)")
      ->required();
  pmos->add_option("--normals-k", pmos_k, "PCA neighbourhood for normals");

  // pairs
  auto* pairs = app.add_subcommand("pairs", "Split a manifest into train/test pairs");
  std::string pairs_manifest, pairs_out = ".";
  double pairs_split = 0.8;
  std::uint64_t pairs_seed = 0;
  pairs->add_option("--manifest", pairs_manifest, "Manifest path")->required();
  pairs->add_option("--out", pairs_out, "Output directory");
  pairs->add_option("--split", pairs_split, "Train fraction of sources");
  pairs->add_option("--seed", pairs_seed, "Split seed");

  // train
  auto* train = app.add_subcommand("train", "Pairwise rank training");
  std::string train_manifest, train_pairs, train_out = "runs";
  TrainCliOptions train_opts;
  train->add_option("--manifest", train_manifest, "Manifest path")->required();
  train->add_option("--pairs", train_pairs, "Training pair list")->required();
  train->add_option("--out", train_out, "Run directory root");
  train_opts.attach(train);
  train->set_config("--config", "", "Config file (key=value lines)");

  // finetune
  auto* finetune = app.add_subcommand("finetune", "Fine-tune on scored rows");
  std::string ft_manifest, ft_weights, ft_out = "runs";
  double ft_split = 1.0;
  TrainCliOptions ft_opts;
  finetune->add_option("--manifest", ft_manifest, "Scored manifest path")->required();
  finetune->add_option("--weights", ft_weights, "Pre-trained weights")->required();
  finetune->add_option("--out", ft_out, "Run directory root");
  finetune->add_option("--split", ft_split, "Train fraction of sources");
  ft_opts.attach(finetune);
  finetune->set_config("--config", "", "Config file (key=value lines)");

  // rank
  auto* rank = app.add_subcommand("rank", "Rank two clouds with a trained model");
  std::string rank_weights, rank_a, rank_b;
  TrainCliOptions rank_opts;
  rank->add_option("--weights", rank_weights, "Model weights")->required();
  rank->add_option("--a", rank_a, "Cloud A")->required();
  rank->add_option("--b", rank_b, "Cloud B")->required();
  rank_opts.attach(rank);

  // score
  auto* score = app.add_subcommand("score", "Absolute quality score of one cloud");
  std::string score_weights, score_input;
  TrainCliOptions score_opts;
  score->add_option("--weights", score_weights, "Model weights")->required();
  score->add_option("--input", score_input, "Cloud to score")->required();
  score_opts.attach(score);

  // frmetric
  auto* fr = app.add_subcommand("frmetric", "Full-reference metric of two clouds");
  std::string fr_metric, fr_ref, fr_deg;
  int fr_k = 16;
  fr->add_option("--metric", fr_metric, "e.g. po2po_mse, pl2pl_hausdorff")->required();
  fr->add_option("--ref", fr_ref, "Reference cloud")->required();
  fr->add_option("--deg", fr_deg, "Degraded cloud")->required();
  fr->add_option("--normals-k", fr_k, "PCA neighbourhood for normals");

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy / consistency report");
  std::string eval_manifest, eval_pairs, eval_mode = "acc", eval_metrics = "all",
              eval_weights;
  int eval_k = 16;
  TrainCliOptions eval_opts;
  eval->add_option("--manifest", eval_manifest, "Manifest path")->required();
  eval->add_option("--pairs", eval_pairs, "Pair list (acc mode)");
  eval->add_option("--mode", eval_mode, "acc|ltest");
  eval->add_option("--metrics", eval_metrics, "Comma list of metrics, or 'all'");
  eval->add_option("--weights", eval_weights, "Optionally add a model row");
  eval->add_option("--normals-k", eval_k, "PCA neighbourhood for normals");
  eval_opts.attach(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      const PointCloud pc =
          sample_shape(shape_from_name(synth_shape), synth_points, synth_seed);
      save_cloud(synth_out, pc, {"seed " + std::to_string(synth_seed),
                                 "shape " + synth_shape});
      std::printf("wrote %s points=%d seed=%llu\n", synth_out.c_str(), synth_points,
                  static_cast<unsigned long long>(synth_seed));
      return 0;
    }
    if (*gen) {
      return run_gen(gen_sources, gen_source_dir, gen_out, gen_seed, gen_kinds,
                     gen_pmos, gen_k);
    }
    if (*pmos) {
      Manifest manifest = read_manifest(pmos_manifest);
      const auto report = build_pcgd_pmos(manifest, pmos_k);
      write_manifest(pmos_manifest, manifest);
      for (const auto& e : report) {
        std::fprintf(stderr, "pseudo-mos failed for %s: %s\n", e.key.c_str(),
                     e.message.c_str());
      }
      std::printf("scored=%zu failed=%zu\n",
                  manifest.rows.size() - report.size(), report.size());
      return report.empty() ? 0 : 2;
    }
    if (*pairs) return run_pairs(pairs_manifest, pairs_out, pairs_split, pairs_seed);
    if (*train) return run_train(train_manifest, train_pairs, train_out, train_opts);
    if (*finetune) {
      return run_finetune(ft_manifest, ft_weights, ft_out, ft_split, ft_opts);
    }
    if (*rank) return run_rank(rank_weights, rank_a, rank_b, rank_opts);
    if (*score) return run_score(score_weights, score_input, score_opts);
    if (*fr) return run_frmetric(fr_metric, fr_ref, fr_deg, fr_k);
    if (*eval) {
      return run_eval(eval_manifest, eval_pairs, eval_mode, eval_metrics,
                      eval_weights, eval_k, eval_opts);
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
