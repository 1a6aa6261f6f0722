#ifndef GQA_RANK_HPP
#define GQA_RANK_HPP

#include <cmath>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/nn.hpp"

namespace gqa {

/// Preference probability that cloud A beats cloud B given their quality
/// indexes: the logistic of the score difference.
inline double rank_probability(double score_a, double score_b) {
  if (!std::isfinite(score_a) || !std::isfinite(score_b)) {
    throw NumericError("rank_probability on non-finite scores");
  }
  return sigmoid(score_a - score_b);
}

/// Binary cross entropy between the predicted preference probability and
/// the target probability.
inline double rank_loss(double p_ab, double target) {
  if (!(p_ab > 0.0 && p_ab < 1.0)) {
    throw DataError("rank_loss requires p in (0,1)");
  }
  if (!(target >= 0.0 && target <= 1.0)) {
    throw DataError("rank_loss requires target in [0,1]");
  }
  return -target * std::log(p_ab) - (1.0 - target) * std::log(1.0 - p_ab);
}

/// Fused sigmoid + cross entropy straight from the score difference:
/// L = t*softplus(-d) + (1-t)*softplus(d). Stable for any |d|.
inline double rank_loss_from_diff(double diff, double target) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw DataError("rank_loss requires target in [0,1]");
  }
  return target * softplus(-diff) + (1.0 - target) * softplus(diff);
}

/// dL/d(score_a - score_b) of the rank loss: simply p - target.
inline double rank_loss_grad_diff(double p_ab, double target) {
  return p_ab - target;
}

/// Mean squared error over a mini-batch of absolute scores; the fine-tuning
/// loss that replaces the ranking loss.
inline double score_loss(const std::vector<double>& truth,
                         const std::vector<double>& predicted) {
  if (truth.empty() || truth.size() != predicted.size()) {
    throw DataError("score_loss requires equal-length non-empty batches");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predicted[i];
    sum += d * d;
  }
  return sum / static_cast<double>(truth.size());
}

}  // namespace gqa

#endif  // GQA_RANK_HPP
