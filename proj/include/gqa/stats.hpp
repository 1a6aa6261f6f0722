#ifndef GQA_STATS_HPP
#define GQA_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gqa/common.hpp"

namespace gqa {

namespace detail {

inline void check_score_pair(const std::vector<double>& y,
                             const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) throw DataError("score vectors differ in length");
  if (y.size() < 2) throw DataError("need at least 2 scores");
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("non-finite ground-truth score");
  }
  for (double v : yhat) {
    if (!std::isfinite(v)) throw DataError("non-finite predicted score");
  }
}

/// Ranks 1..N with average ranks on ties (sort-based).
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average of i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace detail

/// Pearson linear correlation coefficient.
inline double plcc(const std::vector<double>& y, const std::vector<double>& yhat) {
  detail::check_score_pair(y, yhat);
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mh = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
  double num = 0.0, dy = 0.0, dh = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - my) * (yhat[i] - mh);
    dy += (y[i] - my) * (y[i] - my);
    dh += (yhat[i] - mh) * (yhat[i] - mh);
  }
  if (dy == 0.0 || dh == 0.0) {
    throw DataError("correlation undefined: a score vector has zero variance");
  }
  return num / (std::sqrt(dy) * std::sqrt(dh));
}

/// Kendall rank correlation, tau-a form: 2(Nc - Nd) / (N(N-1)).
/// Tied pairs (in either vector) count as neither concordant nor discordant.
inline double krcc(const std::vector<double>& y, const std::vector<double>& yhat) {
  detail::check_score_pair(y, yhat);
  const std::size_t n = y.size();
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = y[i] - y[j];
      const double b = yhat[i] - yhat[j];
      const double prod = a * b;
      if (prod > 0.0) ++concordant;
      else if (prod < 0.0) ++discordant;
    }
  }
  return 2.0 * static_cast<double>(concordant - discordant) /
         (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Spearman rank correlation: 1 - 6*sum(d^2) / (N(N^2-1)), with average
/// ranks assigned to ties.
inline double srcc(const std::vector<double>& y, const std::vector<double>& yhat) {
  detail::check_score_pair(y, yhat);
  const auto ry = detail::average_ranks(y);
  const auto rh = detail::average_ranks(yhat);
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = ry[i] - rh[i];
    sum_d2 += d * d;
  }
  const double n = static_cast<double>(y.size());
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

struct ConfusionCounts {
  long long tp = 0, tn = 0, fp = 0, fn = 0;

  /// Positive class: "the first member is better". `predicted`/`truth` say
  /// whether each side calls the first member better.
  void add(bool predicted_first_better, bool true_first_better) {
    if (true_first_better) {
      predicted_first_better ? ++tp : ++fn;
    } else {
      predicted_first_better ? ++fp : ++tn;
    }
  }

  long long total() const { return tp + tn + fp + fn; }

  double accuracy() const {
    if (total() == 0) throw DataError("accuracy of zero decisions");
    return static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

/// Fraction of pairs whose predicted better-member matches ground truth.
inline double ranking_accuracy(
    const std::vector<std::pair<bool, bool>>& decisions) {
  if (decisions.empty()) throw DataError("ranking accuracy of zero decisions");
  ConfusionCounts counts;
  for (const auto& [predicted, truth] : decisions) counts.add(predicted, truth);
  return counts.accuracy();
}

/// One (content, distortion) cell of a list-wise consistency test: the
/// distortion levels and the matching quality scores.
struct LTestCell {
  std::vector<double> levels;
  std::vector<double> scores;
};

enum class ScoreOrientation { kHigherBetter, kLowerBetter };

/// List-wise ranking consistency: the mean over cells of SRCC between
/// distortion level and distortion magnitude. Scores are oriented so that a
/// metric that degrades monotonically with level scores exactly 1.
inline double l_test(const std::vector<LTestCell>& cells,
                     ScoreOrientation orientation) {
  if (cells.empty()) throw DataError("l_test over zero cells");
  double sum = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    if (cell.levels.size() != cell.scores.size() || cell.levels.size() < 2) {
      throw DataError("l_test cell " + std::to_string(c) +
                      " is missing levels or scores");
    }
    std::vector<double> magnitude = cell.scores;
    if (orientation == ScoreOrientation::kHigherBetter) {
      for (double& v : magnitude) v = -v;
    }
    sum += srcc(cell.levels, magnitude);
  }
  return sum / static_cast<double>(cells.size());
}

}  // namespace gqa

#endif  // GQA_STATS_HPP
