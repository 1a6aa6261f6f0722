#ifndef GQA_NET_HPP
#define GQA_NET_HPP

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/kdtree.hpp"
#include "gqa/model.hpp"
#include "gqa/nn.hpp"
#include "gqa/point_cloud.hpp"
#include "gqa/rng.hpp"

namespace gqa {

/// A fixed-size neighbourhood in centre-relative coordinates.
struct Patch {
  Vec3 center = Vec3::Zero();
  Matrix rel;              // n x 3, points minus center
  bool degenerate = false; // true when the radius query came back empty
};

/// Greedy farthest point sampling. Starts from a seeded random point, then
/// repeatedly adds the point with maximal distance to the selected set
/// (ties to the lowest index). Returns indices into the cloud.
inline std::vector<int> farthest_point_sample(const PointCloud& pc, int count,
                                              std::uint64_t seed) {
  const int n = static_cast<int>(pc.size());
  if (count < 1) throw DataError("farthest_point_sample requires count >= 1");
  if (count > n) {
    throw DataError("farthest_point_sample: requested " + std::to_string(count) +
                    " of " + std::to_string(n) + " points");
  }
  std::vector<int> picked;
  picked.reserve(count);
  Rng rng(seed);
  int current = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  picked.push_back(current);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  for (int round = 1; round < count; ++round) {
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d2 = (pc.points[i] - pc.points[current]).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
    picked.push_back(current);
  }
  return picked;
}

inline std::vector<Vec3> gather_points(const PointCloud& pc,
                                       const std::vector<int>& indices) {
  std::vector<Vec3> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(pc.points[i]);
  return out;
}

/// Default patch radius: targets about n points per patch for a surface of
/// density ~ 1/l_r^2 (disc of area n*l_r^2).
inline double default_patch_radius(double l_r, int points_per_patch) {
  constexpr double kPi = 3.14159265358979323846;
  return l_r * std::sqrt(static_cast<double>(points_per_patch) / kPi);
}

/// Builds one patch per centre from the points within radius r.
/// Overfull neighbourhoods keep the n nearest; short ones are padded by
/// seeded resampling of their own members; empty ones become flagged
/// all-zero patches (legitimate for severely downsampled paired clouds).
inline std::vector<Patch> make_patches(const PointCloud& pc,
                                       const std::vector<Vec3>& centers, double r,
                                       int points_per_patch, std::uint64_t seed) {
  if (!(r > 0.0)) throw DataError("make_patches requires r > 0");
  if (points_per_patch < 1) throw DataError("make_patches requires n >= 1");
  if (pc.empty()) throw DataError("make_patches on empty cloud");
  const KdTree tree(pc);
  const int n = points_per_patch;
  std::vector<Patch> patches;
  patches.reserve(centers.size());
  for (std::size_t ci = 0; ci < centers.size(); ++ci) {
    const Vec3& c = centers[ci];
    std::vector<int> inside = tree.radius(c, r);
    Patch patch;
    patch.center = c;
    patch.rel = Matrix::Zero(n, 3);
    if (inside.empty()) {
      patch.degenerate = true;
      patches.push_back(std::move(patch));
      continue;
    }
    if (static_cast<int>(inside.size()) > n) {
      // Keep the n nearest within the sphere, ties to the lowest index.
      std::sort(inside.begin(), inside.end(), [&](int a, int b) {
        const double da = (pc.points[a] - c).squaredNorm();
        const double db = (pc.points[b] - c).squaredNorm();
        return da < db || (da == db && a < b);
      });
      inside.resize(n);
    }
    const int got = static_cast<int>(inside.size());
    for (int i = 0; i < got; ++i) {
      patch.rel.row(i) = (pc.points[inside[i]] - c).transpose();
    }
    if (got < n) {
      Rng rng(derive_seed(seed, ci));
      for (int i = got; i < n; ++i) {
        const int pick = inside[rng.below(static_cast<std::uint64_t>(got))];
        patch.rel.row(i) = (pc.points[pick] - c).transpose();
      }
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

/// Region-corresponding patches for a pair of clouds: FPS centres are
/// sampled from `pc_a` only and reused verbatim on `pc_b`, so both sides
/// cover the same regions even when point counts differ.
inline std::pair<std::vector<Patch>, std::vector<Patch>> paired_patches(
    const PointCloud& pc_a, const PointCloud& pc_b, int patch_count, double r,
    int points_per_patch, std::uint64_t seed) {
  if (pc_a.empty() || pc_b.empty()) throw DataError("paired_patches on empty cloud");
  const auto center_idx = farthest_point_sample(pc_a, patch_count, derive_seed(seed, 0));
  const auto centers = gather_points(pc_a, center_idx);
  // One padding seed for both sides: identical clouds get identical patches.
  auto a = make_patches(pc_a, centers, r, points_per_patch, derive_seed(seed, 1));
  auto b = make_patches(pc_b, centers, r, points_per_patch, derive_seed(seed, 1));
  return {std::move(a), std::move(b)};
}

/// Evaluation options decoupled from the parameters: ablation switches.
struct EvalOptions {
  bool equal_weights = false;  // weight head replaced by constant 1
};

/// Per-patch outputs of a forward pass.
struct PatchScore {
  double s = 0.0;  // quality index, in (0,1)
  double w = 0.0;  // aggregation weight, in (0,1) (exactly 1 when ablated)
};

/// Everything the backward pass needs from one cloud's forward pass.
struct ForwardCache {
  int patch_count = 0;
  int points_per_patch = 0;
  Matrix inputs;                          // (N*n) x 3 stacked relative coords
  std::array<Matrix, 4> block_act;        // post-ReLU activations per block
  std::array<std::vector<Eigen::Index>, 4> argmax;  // per patch-major column
  Matrix features;                        // N x feature_dim
  std::array<std::vector<Matrix>, 2> head_act;  // [head][hidden layer] N x d
  Vector logit_s, logit_w;
  Vector s, w;
  double sum_w = 0.0;
  double score = 0.0;
  bool equal_weights = false;
};

namespace detail {

/// Head forward: hidden ReLU layers then a linear scalar layer (sigmoid is
/// applied by the caller). Activations are cached when `acts` is given.
inline Vector head_forward(const std::vector<DenseLayer>& head, const Matrix& input,
                           std::vector<Matrix>* acts) {
  Matrix h = input;
  for (std::size_t i = 0; i + 1 < head.size(); ++i) {
    h = relu(dense_forward(head[i], h));
    if (acts) acts->push_back(h);
  }
  return dense_forward(head.back(), h).col(0);
}

/// Backward through a head given d(logit); accumulates parameter gradients
/// and returns the gradient w.r.t. the head input.
inline Matrix head_backward(const std::vector<DenseLayer>& head,
                            const Matrix& input, const std::vector<Matrix>& acts,
                            const Vector& dlogit, std::vector<DenseLayer>& grad) {
  const std::size_t last = head.size() - 1;
  Matrix d = dlogit;  // N x 1
  // Output layer.
  const Matrix& in_last = last == 0 ? input : acts[last - 1];
  grad[last].weight.noalias() += d.transpose() * in_last;
  grad[last].bias.noalias() += d.colwise().sum().transpose();
  Matrix dh = d * head[last].weight;  // N x hidden
  for (std::size_t i = last; i-- > 0;) {
    const Matrix& act = acts[i];
    Matrix dz = dh.cwiseProduct((act.array() > 0.0).cast<double>().matrix());
    const Matrix& in = i == 0 ? input : acts[i - 1];
    grad[i].weight.noalias() += dz.transpose() * in;
    grad[i].bias.noalias() += dz.colwise().sum().transpose();
    dh.noalias() = dz * head[i].weight;
  }
  return dh;
}

}  // namespace detail

/// Multi-scale feature of one patch: each block's post-ReLU activations are
/// max-pooled over the patch's points and the selected pools concatenated.
///
/// Points are evaluated one row at a time, so each point's activations do
/// not depend on its position and the pooled feature is bitwise invariant
/// under point reordering. (The batched forward_cloud path trades that for
/// large GEMMs; it guarantees 1e-12-level stability instead.)
inline Vector extract_features(const ModelParams& params, const Patch& patch) {
  const Eigen::Index n = patch.rel.rows();
  if (n < 1) throw DataError("extract_features on an empty patch");
  std::array<Vector, 4> pooled;
  for (Eigen::Index r = 0; r < n; ++r) {
    Vector act = patch.rel.row(r).transpose();
    for (int b = 0; b < 4; ++b) {
      act = (params.blocks[b].weight * act + params.blocks[b].bias).cwiseMax(0.0);
      if (r == 0) {
        pooled[b] = act;
      } else {
        pooled[b] = pooled[b].cwiseMax(act);
      }
    }
  }
  Vector out(params.arch.feature_dim());
  Eigen::Index at = 0;
  for (int b = 0; b < 4; ++b) {
    if (!params.arch.blocks_in_feature[b]) continue;
    out.segment(at, pooled[b].size()) = pooled[b];
    at += pooled[b].size();
  }
  return out;
}

/// Full forward pass over one cloud's patches. All patches are stacked into
/// one matrix so the shared layers run as a handful of large GEMMs.
/// Returns the weighted quality index S = sum(w_i s_i) / sum(w_i) in (0,1).
/// Pass a cache to enable backward_cloud; leave it null for inference.
inline double forward_cloud(const ModelParams& params,
                            const std::vector<Patch>& patches,
                            const EvalOptions& options = {},
                            ForwardCache* cache = nullptr,
                            std::vector<PatchScore>* scores = nullptr) {
  const int patch_count = static_cast<int>(patches.size());
  if (patch_count == 0) throw DataError("forward_cloud requires >= 1 patch");
  const int n = static_cast<int>(patches[0].rel.rows());
  for (const Patch& p : patches) {
    if (p.rel.rows() != n || p.rel.cols() != 3) {
      throw DataError("forward_cloud: inconsistent patch shapes");
    }
  }
  Matrix stacked(static_cast<Eigen::Index>(patch_count) * n, 3);
  for (int i = 0; i < patch_count; ++i) {
    stacked.middleRows(static_cast<Eigen::Index>(i) * n, n) = patches[i].rel;
  }

  const int feat_dim = params.arch.feature_dim();
  Matrix features(patch_count, feat_dim);
  Matrix act = std::move(stacked);
  if (cache) {
    cache->patch_count = patch_count;
    cache->points_per_patch = n;
    cache->inputs = act;
    cache->equal_weights = options.equal_weights;
  }
  Eigen::Index feat_at = 0;
  for (int b = 0; b < 4; ++b) {
    act = relu(dense_forward(params.blocks[b], act));
    if (cache) cache->block_act[b] = act;
    if (params.arch.blocks_in_feature[b]) {
      const Eigen::Index dim = act.cols();
      if (cache) {
        cache->argmax[b].assign(static_cast<std::size_t>(patch_count) * dim, 0);
      }
      for (int i = 0; i < patch_count; ++i) {
        const auto rows = act.middleRows(static_cast<Eigen::Index>(i) * n, n);
        for (Eigen::Index c = 0; c < dim; ++c) {
          Eigen::Index arg = 0;
          double best = rows(0, c);
          for (Eigen::Index rr = 1; rr < n; ++rr) {
            if (rows(rr, c) > best) {
              best = rows(rr, c);
              arg = rr;
            }
          }
          features(i, feat_at + c) = best;
          if (cache) {
            cache->argmax[b][static_cast<std::size_t>(i) * dim + c] =
                static_cast<Eigen::Index>(i) * n + arg;
          }
        }
      }
      feat_at += dim;
    }
  }
  if (cache) cache->features = features;

  const Vector logit_s = detail::head_forward(params.head_s, features,
                                              cache ? &cache->head_act[0] : nullptr);
  const Vector s = sigmoid(logit_s);
  Vector w;
  Vector logit_w;
  if (options.equal_weights) {
    w = Vector::Ones(patch_count);
  } else {
    logit_w = detail::head_forward(params.head_w, features,
                                   cache ? &cache->head_act[1] : nullptr);
    w = sigmoid(logit_w);
  }
  double sum_ws = 0.0, sum_w = 0.0;
  for (int i = 0; i < patch_count; ++i) {
    sum_ws += w[i] * s[i];
    sum_w += w[i];
  }
  const double score = sum_ws / sum_w;  // sum_w > 0: sigmoids are positive
  if (cache) {
    cache->logit_s = logit_s;
    cache->logit_w = logit_w;
    cache->s = s;
    cache->w = w;
    cache->sum_w = sum_w;
    cache->score = score;
  }
  if (scores) {
    scores->resize(patch_count);
    for (int i = 0; i < patch_count; ++i) (*scores)[i] = {s[i], w[i]};
  }
  return score;
}

/// Weighted quality index plus the per-patch scores, without caching.
inline std::pair<double, std::vector<PatchScore>> quality_index(
    const ModelParams& params, const std::vector<Patch>& patches,
    const EvalOptions& options = {}) {
  std::vector<PatchScore> scores;
  const double s = forward_cloud(params, patches, options, nullptr, &scores);
  return {s, std::move(scores)};
}

/// Exact reverse pass of forward_cloud. `dscore` is dLoss/dS for this cloud;
/// parameter gradients are accumulated into `grads` (shape of the model).
inline void backward_cloud(const ModelParams& params, const ForwardCache& cache,
                           double dscore, ModelParams& grads) {
  if (cache.patch_count == 0) throw DataError("backward_cloud without forward cache");
  const int patch_count = cache.patch_count;
  const int n = cache.points_per_patch;

  // d(weighted mean) w.r.t. s_i and w_i.
  Vector ds(patch_count), dw(patch_count);
  for (int i = 0; i < patch_count; ++i) {
    ds[i] = dscore * cache.w[i] / cache.sum_w;
    dw[i] = dscore * (cache.s[i] - cache.score) / cache.sum_w;
  }

  // Sigmoid backward into the head logits, then through the heads.
  Vector dlogit_s(patch_count);
  for (int i = 0; i < patch_count; ++i) {
    dlogit_s[i] = ds[i] * cache.s[i] * (1.0 - cache.s[i]);
  }
  Matrix dfeat = detail::head_backward(params.head_s, cache.features,
                                       cache.head_act[0], dlogit_s, grads.head_s);
  if (!cache.equal_weights) {
    Vector dlogit_w(patch_count);
    for (int i = 0; i < patch_count; ++i) {
      dlogit_w[i] = dw[i] * cache.w[i] * (1.0 - cache.w[i]);
    }
    dfeat += detail::head_backward(params.head_w, cache.features,
                                   cache.head_act[1], dlogit_w, grads.head_w);
  }

  // Split the feature gradient into per-block pooled chunks and route each
  // through its argmax row; cascade the rest backwards through the blocks.
  const Eigen::Index total_rows = static_cast<Eigen::Index>(patch_count) * n;
  Matrix dact;  // gradient w.r.t. block b's post-ReLU activations
  Eigen::Index feat_end = dfeat.cols();
  for (int b = 3; b >= 0; --b) {
    const Eigen::Index dim = ArchConfig::kBlockDims[b];
    Matrix routed = Matrix::Zero(total_rows, dim);
    if (params.arch.blocks_in_feature[b]) {
      feat_end -= dim;
      for (int i = 0; i < patch_count; ++i) {
        for (Eigen::Index c = 0; c < dim; ++c) {
          routed(cache.argmax[b][static_cast<std::size_t>(i) * dim + c], c) +=
              dfeat(i, feat_end + c);
        }
      }
    }
    if (b < 3) routed += dact;
    // ReLU mask, then the dense layer.
    Matrix dz = routed.cwiseProduct(
        (cache.block_act[b].array() > 0.0).cast<double>().matrix());
    const Matrix& input = b == 0 ? cache.inputs : cache.block_act[b - 1];
    grads.blocks[b].weight.noalias() += dz.transpose() * input;
    grads.blocks[b].bias.noalias() += dz.colwise().sum().transpose();
    if (b > 0) dact.noalias() = dz * params.blocks[b].weight;
  }
}

}  // namespace gqa

#endif  // GQA_NET_HPP
