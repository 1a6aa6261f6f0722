#ifndef GQA_TRAIN_HPP
#define GQA_TRAIN_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/dataset.hpp"
#include "gqa/geometry.hpp"
#include "gqa/io.hpp"
#include "gqa/model.hpp"
#include "gqa/net.hpp"
#include "gqa/rank.hpp"

namespace gqa {

/// Everything a training run depends on. Defaults follow the reference
/// protocol (batch 4, 20 epochs, lr 1e-5 halved every 2 epochs, 64 patches
/// of 512 points while training, 112 patches at test time).
struct TrainConfig {
  int batch_size = 4;
  int epochs = 20;
  double learning_rate = 1e-5;
  int lr_halve_every = 2;          // epochs between lr *= 0.5
  int train_patches = 64;          // N while training
  int test_patches = 112;          // N at test time
  int patch_points = 512;          // n
  double radius_scale = 0.0;       // patch radius = scale * l_r; 0 = auto
  std::uint64_t seed = 0;
  bool refresh_patches = true;     // re-sample patches every epoch
  // Ablation switches.
  bool no_patch = false;           // whole cloud as a single FPS patch
  bool equal_weights = false;      // weight head replaced by constant 1
  std::array<bool, 4> block_subset = {true, true, true, true};

  void validate() const {
    if (batch_size < 1) throw DataError("batch size must be >= 1");
    if (epochs < 1) throw DataError("epochs must be >= 1");
    if (train_patches < 1 || test_patches < 1 || patch_points < 1) {
      throw DataError("patch counts and points per patch must be >= 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw DataError("learning rate must be finite and non-negative");
    }
    if (lr_halve_every < 0) throw DataError("lr halving period must be >= 0");
  }

  double lr_at_epoch(int epoch) const {
    const int halvings = lr_halve_every > 0 ? epoch / lr_halve_every : 0;
    return learning_rate * std::pow(0.5, halvings);
  }

  double patch_radius(double l_r) const {
    return radius_scale > 0.0 ? radius_scale * l_r
                              : default_patch_radius(l_r, patch_points);
  }

  ArchConfig arch() const {
    ArchConfig a;
    a.blocks_in_feature = block_subset;
    return a;
  }

  EvalOptions eval_options() const {
    EvalOptions o;
    o.equal_weights = equal_weights;
    return o;
  }

  std::string to_text() const {
    std::ostringstream ss;
    ss << "batch_size=" << batch_size << "\nepochs=" << epochs
       << "\nlearning_rate=" << learning_rate
       << "\nlr_halve_every=" << lr_halve_every
       << "\ntrain_patches=" << train_patches << "\ntest_patches=" << test_patches
       << "\npatch_points=" << patch_points << "\nradius_scale=" << radius_scale
       << "\nseed=" << seed << "\nrefresh_patches=" << refresh_patches
       << "\nno_patch=" << no_patch << "\nequal_weights=" << equal_weights
       << "\nblock_subset=" << block_subset[0] << block_subset[1]
       << block_subset[2] << block_subset[3] << "\n";
    return ss.str();
  }

  std::uint64_t digest() const { return fnv1a(to_text()); }
};

/// Loads manifest clouds on demand and caches them together with their
/// reference edge length.
class CloudStore {
 public:
  explicit CloudStore(const Manifest& manifest) : manifest_(manifest) {}

  const PointCloud& cloud(const std::string& key) {
    auto it = clouds_.find(key);
    if (it == clouds_.end()) {
      const ManifestRow& row = manifest_.at(key);
      it = clouds_.emplace(key, load_cloud(manifest_.resolve(row))).first;
    }
    return it->second;
  }

  double edge_length(const std::string& key) {
    auto it = lr_.find(key);
    if (it == lr_.end()) {
      it = lr_.emplace(key, ref_edge_length(cloud(key))).first;
    }
    return it->second;
  }

  const Manifest& manifest() const { return manifest_; }

 private:
  const Manifest& manifest_;
  std::map<std::string, PointCloud> clouds_;
  std::map<std::string, double> lr_;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double pair_accuracy = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

namespace detail {

/// Patch generation for one cloud outside the pair path (prediction,
/// fine-tuning). With no_patch, the cloud itself becomes a single patch of
/// n FPS-sampled points, centred on their centroid.
inline std::vector<Patch> patches_for_cloud(const PointCloud& pc, double l_r,
                                            const TrainConfig& cfg, int patch_count,
                                            std::uint64_t seed) {
  if (cfg.no_patch) {
    const int n = std::min<int>(cfg.patch_points, static_cast<int>(pc.size()));
    const auto idx = farthest_point_sample(pc, n, derive_seed(seed, 0));
    Patch patch;
    patch.center = Vec3::Zero();
    for (int i : idx) patch.center += pc.points[i];
    patch.center /= static_cast<double>(idx.size());
    patch.rel = Matrix::Zero(cfg.patch_points, 3);
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
      patch.rel.row(i) = (pc.points[idx[i]] - patch.center).transpose();
    }
    if (static_cast<int>(idx.size()) < cfg.patch_points) {
      Rng rng(derive_seed(seed, 1));
      for (int i = static_cast<int>(idx.size()); i < cfg.patch_points; ++i) {
        const int pick = idx[rng.below(idx.size())];
        patch.rel.row(i) = (pc.points[pick] - patch.center).transpose();
      }
    }
    return {std::move(patch)};
  }
  const auto centers =
      gather_points(pc, farthest_point_sample(pc, patch_count, derive_seed(seed, 0)));
  return make_patches(pc, centers, cfg.patch_radius(l_r), cfg.patch_points,
                      derive_seed(seed, 1));
}

/// Patch generation for a pair. The member ids are ordered canonically
/// (lexicographically) before sampling, so a pair and its swap produce the
/// same patches and, with the mirrored target, identical gradients.
struct PairPatches {
  std::vector<Patch> a;
  std::vector<Patch> b;
};

inline PairPatches patches_for_pair(CloudStore& store, const PairSample& pair,
                                    const TrainConfig& cfg, int patch_count,
                                    std::uint64_t epoch_seed) {
  const bool swap = pair.b < pair.a;
  const std::string& first = swap ? pair.b : pair.a;
  const std::string& second = swap ? pair.a : pair.b;
  const std::uint64_t pair_seed =
      derive_seed(epoch_seed, fnv1a(first), fnv1a(second));
  const PointCloud& pc_first = store.cloud(first);
  const PointCloud& pc_second = store.cloud(second);

  PairPatches out;
  if (cfg.no_patch) {
    out.a = patches_for_cloud(pc_first, 0.0, cfg, 1, derive_seed(pair_seed, 10));
    out.b = patches_for_cloud(pc_second, 0.0, cfg, 1, derive_seed(pair_seed, 11));
  } else {
    const double radius = cfg.patch_radius(store.edge_length(first));
    auto [pa, pb] = paired_patches(pc_first, pc_second, patch_count, radius,
                                   cfg.patch_points, pair_seed);
    out.a = std::move(pa);
    out.b = std::move(pb);
  }
  if (swap) std::swap(out.a, out.b);
  return out;
}

inline void write_checkpoint(const std::filesystem::path& run_dir,
                             const ModelParams& params, const TrainConfig& cfg,
                             int epoch, double lr, const char* stem) {
  std::filesystem::create_directories(run_dir);
  char name[64];
  std::snprintf(name, sizeof name, "%s_%03d", stem, epoch);
  save_model(run_dir / (std::string(name) + ".gqan"), params);
  std::ofstream meta(run_dir / (std::string(name) + ".meta"));
  meta << "epoch=" << epoch << "\nlr=" << lr << "\nseed=" << cfg.seed
       << "\nconfig_digest=" << cfg.digest() << "\n";
}

inline void write_log(const std::filesystem::path& run_dir,
                      const std::vector<EpochLog>& log, const TrainConfig& cfg) {
  std::ofstream f(run_dir / "log.tsv", std::ios::binary);
  f << "# config_digest=" << cfg.digest() << " seed=" << cfg.seed << "\n";
  f << "# epoch\tmean_loss\tpair_accuracy\tlr\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d\t%.9g\t%.6f\t%.9g\n", e.epoch, e.mean_loss,
                  e.pair_accuracy, e.learning_rate);
    f << buf;
  }
}

}  // namespace detail

/// Siamese pairwise rank training: one shared parameter set, two forward
/// passes per pair, cross-entropy on the preference probability, Adam with
/// the configured epoch-level lr schedule. Writes per-epoch checkpoints and
/// a log when `run_dir` is given. Deterministic for a fixed config.
inline TrainResult train_rank(CloudStore& store, const std::vector<PairSample>& pairs,
                              const TrainConfig& cfg,
                              const std::optional<std::filesystem::path>& run_dir = {},
                              std::optional<ModelParams> initial = {}) {
  cfg.validate();
  if (pairs.empty()) throw DataError("train_rank requires at least one pair");
  for (const auto& p : pairs) {
    if (!(p.target >= 0.0 && p.target <= 1.0)) {
      throw DataError("pair (" + p.a + ", " + p.b + ") has target outside [0,1]");
    }
  }
  TrainResult result;
  result.params = initial ? std::move(*initial) : init_model(cfg.seed, cfg.arch());
  AdamState adam = AdamState::for_model(result.params);

  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) order[i] = static_cast<int>(i);
  Rng shuffle_rng(derive_seed(cfg.seed, fnv1a("shuffle")));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at_epoch(epoch);
    const std::uint64_t patch_epoch_seed =
        derive_seed(cfg.seed, fnv1a("patches"),
                    cfg.refresh_patches ? static_cast<std::uint64_t>(epoch) : 0u);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long long correct = 0, decided = 0;
    std::size_t at = 0;
    int step = 0;
    while (at < order.size()) {
      const std::size_t batch_end =
          std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - at);
      ModelParams grads = zeros_like(result.params);
      for (std::size_t bi = at; bi < batch_end; ++bi) {
        const PairSample& pair = pairs[order[bi]];
        const auto patches = detail::patches_for_pair(store, pair, cfg,
                                                      cfg.train_patches,
                                                      patch_epoch_seed);
        ForwardCache cache_a, cache_b;
        const double s_a = forward_cloud(result.params, patches.a,
                                         cfg.eval_options(), &cache_a);
        const double s_b = forward_cloud(result.params, patches.b,
                                         cfg.eval_options(), &cache_b);
        const double diff = s_a - s_b;
        const double p_ab = sigmoid(diff);
        const double loss = rank_loss_from_diff(diff, pair.target);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss for pair (" + pair.a + ", " +
                             pair.b + ") at epoch " + std::to_string(epoch) +
                             " step " + std::to_string(step));
        }
        loss_sum += loss;
        if (pair.target != 0.5) {
          decided += 1;
          if ((diff > 0.0) == (pair.target > 0.5)) correct += 1;
        }
        const double ddiff = rank_loss_grad_diff(p_ab, pair.target) * inv_batch;
        backward_cloud(result.params, cache_a, ddiff, grads);
        backward_cloud(result.params, cache_b, -ddiff, grads);
      }
      adam_step(result.params, grads, adam, lr);
      at = batch_end;
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(pairs.size());
    log.pair_accuracy =
        decided > 0 ? static_cast<double>(correct) / static_cast<double>(decided)
                    : 0.0;
    log.learning_rate = lr;
    result.log.push_back(log);
    if (run_dir) {
      detail::write_checkpoint(*run_dir, result.params, cfg, epoch, lr, "epoch");
      detail::write_log(*run_dir, result.log, cfg);
    }
  }
  return result;
}

/// A manifest row with a score, ready for fine-tuning.
struct ScoredCloud {
  std::string key;
  double score = 0.0;  // in [0,1]
};

/// Fine-tunes a pre-trained model on absolute scores with a squared-error
/// loss, reusing the rank-training optimizer machinery. Rows with scores
/// outside [0,1] are rejected into the report.
inline TrainResult finetune_scores(CloudStore& store,
                                   const std::vector<ScoredCloud>& scored,
                                   const ModelParams& pretrained,
                                   const TrainConfig& cfg,
                                   const std::optional<std::filesystem::path>& run_dir = {},
                                   std::vector<RowError>* rejected = nullptr) {
  cfg.validate();
  std::vector<ScoredCloud> rows;
  for (const auto& r : scored) {
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
      if (rejected) {
        rejected->push_back({r.key, "score outside [0,1]: " + std::to_string(r.score)});
      }
      continue;
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("finetune_scores: no usable rows");

  TrainResult result;
  result.params = pretrained;
  AdamState adam = AdamState::for_model(result.params);
  std::vector<int> order(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) order[i] = static_cast<int>(i);
  Rng shuffle_rng(derive_seed(cfg.seed, fnv1a("finetune-shuffle")));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at_epoch(epoch);
    const std::uint64_t patch_epoch_seed =
        derive_seed(cfg.seed, fnv1a("finetune-patches"),
                    cfg.refresh_patches ? static_cast<std::uint64_t>(epoch) : 0u);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t at = 0;
    int step = 0;
    while (at < order.size()) {
      const std::size_t batch_end =
          std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - at);
      ModelParams grads = zeros_like(result.params);
      for (std::size_t bi = at; bi < batch_end; ++bi) {
        const ScoredCloud& row = rows[order[bi]];
        const PointCloud& pc = store.cloud(row.key);
        const auto patches = detail::patches_for_cloud(
            pc, cfg.no_patch ? 0.0 : store.edge_length(row.key), cfg,
            cfg.train_patches, derive_seed(patch_epoch_seed, fnv1a(row.key)));
        ForwardCache cache;
        const double predicted =
            forward_cloud(result.params, patches, cfg.eval_options(), &cache);
        const double err = predicted - row.score;
        const double loss = err * err;
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss for '" + row.key + "' at epoch " +
                             std::to_string(epoch) + " step " + std::to_string(step));
        }
        loss_sum += loss;
        backward_cloud(result.params, cache, 2.0 * err * inv_batch, grads);
      }
      adam_step(result.params, grads, adam, lr);
      at = batch_end;
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(rows.size());
    log.pair_accuracy = 0.0;  // not applicable; kept for a uniform log format
    log.learning_rate = lr;
    result.log.push_back(log);
    if (run_dir) {
      detail::write_checkpoint(*run_dir, result.params, cfg, epoch, lr, "finetune");
      detail::write_log(*run_dir, result.log, cfg);
    }
  }
  return result;
}

/// Single-cloud quality prediction with self-sampled FPS centres.
/// Deterministic for a fixed seed.
inline double predict(const ModelParams& params, const PointCloud& pc,
                      const TrainConfig& cfg, std::uint64_t seed) {
  const double l_r = cfg.no_patch ? 0.0 : ref_edge_length(pc);
  const auto patches =
      detail::patches_for_cloud(pc, l_r, cfg, cfg.test_patches, seed);
  EvalOptions options = cfg.eval_options();
  return forward_cloud(params, patches, options);
}

struct PairEvaluation {
  double accuracy = 0.0;
  long long correct = 0;
  long long total = 0;
};

/// Ranking accuracy of a trained model over a pair list (test-time patch
/// count). A pair is predicted correctly when sign(S_a - S_b) matches the
/// target; exact score ties count as wrong for targets in {0,1}.
inline PairEvaluation evaluate_pairs(CloudStore& store,
                                     const std::vector<PairSample>& pairs,
                                     const ModelParams& params,
                                     const TrainConfig& cfg, std::uint64_t seed) {
  if (pairs.empty()) throw DataError("evaluate_pairs on zero pairs");
  PairEvaluation eval;
  TrainConfig eval_cfg = cfg;
  for (const auto& pair : pairs) {
    if (pair.target == 0.5) continue;
    const auto patches = detail::patches_for_pair(store, pair, eval_cfg,
                                                  cfg.test_patches,
                                                  derive_seed(seed, fnv1a("eval")));
    const double s_a = forward_cloud(params, patches.a, cfg.eval_options());
    const double s_b = forward_cloud(params, patches.b, cfg.eval_options());
    eval.total += 1;
    const bool predicted_a = s_a > s_b;
    if (predicted_a == (pair.target > 0.5)) eval.correct += 1;
  }
  if (eval.total == 0) throw DataError("evaluate_pairs: only 0.5-target pairs");
  eval.accuracy = static_cast<double>(eval.correct) / static_cast<double>(eval.total);
  return eval;
}

}  // namespace gqa

#endif  // GQA_TRAIN_HPP
