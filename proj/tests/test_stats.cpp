#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gqa/rng.hpp"
#include "gqa/stats.hpp"

using namespace gqa;

namespace {

// O(N^2) counting-based rank oracle (fractional ranks on ties), independent
// of the sort-based ranks used by the library.
std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++less;
      if (v[j] == v[i]) ++equal;
    }
    out[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1) + 1.0;
  }
  return out;
}

double srcc_oracle(const std::vector<double>& y, const std::vector<double>& yhat) {
  const auto ry = counting_ranks(y);
  const auto rh = counting_ranks(yhat);
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = ry[i] - rh[i];
    sum_d2 += d * d;
  }
  const double n = static_cast<double>(y.size());
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

double krcc_oracle(const std::vector<double>& y, const std::vector<double>& yhat) {
  long long nc = 0, nd = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const bool y_up = y[j] < y[i], y_down = y[j] > y[i];
      const bool h_up = yhat[j] < yhat[i], h_down = yhat[j] > yhat[i];
      if ((y_up && h_up) || (y_down && h_down)) ++nc;
      if ((y_up && h_down) || (y_down && h_up)) ++nd;
    }
  }
  const double n = static_cast<double>(y.size());
  return 2.0 * static_cast<double>(nc - nd) / (n * (n - 1.0));
}

std::vector<double> random_vector(int n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-10, 10);
  return v;
}

}  // namespace

TEST_CASE("plcc closed forms", "[stats]") {
  const std::vector<double> y = {1, 2, 3};
  std::vector<double> affine(3), reversed(3);
  for (int i = 0; i < 3; ++i) {
    affine[i] = 2 * y[i] + 1;
    reversed[i] = -y[i];
  }
  CHECK(plcc(y, affine) == Catch::Approx(1.0).margin(1e-12));
  CHECK(plcc(y, reversed) == Catch::Approx(-1.0).margin(1e-12));
  CHECK(plcc(y, {1, 3, 2}) == Catch::Approx(0.5));
  CHECK_THROWS_AS(plcc({1, 1, 1}, {1, 2, 3}), DataError);
}

TEST_CASE("krcc closed forms", "[stats]") {
  CHECK(krcc({1, 2, 3}, {10, 20, 30}) == 1.0);
  CHECK(krcc({1, 2, 3}, {3, 2, 1}) == -1.0);
  CHECK(krcc({1, 2, 3}, {1, 3, 2}) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("srcc closed forms", "[stats]") {
  const std::vector<double> y = {1, 2, 3, 4};
  std::vector<double> cubed(4);
  for (int i = 0; i < 4; ++i) cubed[i] = y[i] * y[i] * y[i];
  CHECK(srcc(y, cubed) == 1.0);
  CHECK(srcc(y, {4, 3, 2, 1}) == -1.0);
  CHECK(srcc(y, {1, 2, 4, 3}) == Catch::Approx(0.8));
}

TEST_CASE("srcc and krcc match O(N^2) enumeration oracles exactly", "[stats]") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(49));
    const auto y = random_vector(n, rng);
    const auto yhat = random_vector(n, rng);
    REQUIRE(srcc(y, yhat) == srcc_oracle(y, yhat));
    REQUIRE(krcc(y, yhat) == krcc_oracle(y, yhat));
  }
}

TEST_CASE("ties: average ranks for srcc, excluded pairs for krcc", "[stats]") {
  const std::vector<double> y = {1, 1, 2, 3};
  const std::vector<double> yhat = {5, 5, 7, 9};
  CHECK(srcc(y, yhat) == srcc_oracle(y, yhat));
  CHECK(krcc(y, yhat) == krcc_oracle(y, yhat));
  // 5 untied pairs, all concordant; 1 tied pair dropped: 2*5/(4*3).
  CHECK(krcc(y, yhat) == Catch::Approx(10.0 / 12.0));
}

TEST_CASE("correlations are invariant under monotone maps", "[stats]") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(30));
    const auto y = random_vector(n, rng);
    const auto yhat = random_vector(n, rng);
    // Positive affine map leaves PLCC unchanged.
    std::vector<double> affine(n);
    const double a = rng.uniform(0.1, 5.0), b = rng.uniform(-3, 3);
    for (int i = 0; i < n; ++i) affine[i] = a * yhat[i] + b;
    CHECK(plcc(y, affine) == Catch::Approx(plcc(y, yhat)).margin(1e-12));
    // Strictly increasing map leaves SRCC and KRCC unchanged.
    std::vector<double> mono(n);
    for (int i = 0; i < n; ++i) mono[i] = std::exp(0.3 * yhat[i]) + yhat[i];
    CHECK(srcc(y, mono) == srcc(y, yhat));
    CHECK(krcc(y, mono) == krcc(y, yhat));
  }
}

TEST_CASE("ranking accuracy arithmetic", "[stats]") {
  std::vector<std::pair<bool, bool>> all_correct = {
      {true, true}, {false, false}, {true, true}};
  CHECK(ranking_accuracy(all_correct) == 1.0);

  ConfusionCounts counts{3, 2, 1, 0};
  CHECK(counts.accuracy() == Catch::Approx(5.0 / 6.0));
}

TEST_CASE("random predictor sits near one half", "[stats]") {
  Rng rng(3);
  std::vector<std::pair<bool, bool>> decisions;
  for (int i = 0; i < 10000; ++i) {
    decisions.emplace_back(rng.next_u64() & 1u, rng.next_u64() & 1u);
  }
  CHECK(ranking_accuracy(decisions) == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("l_test perfect and reversed cells", "[stats]") {
  // Higher-better scores strictly decreasing in level: perfect consistency.
  std::vector<LTestCell> cells;
  for (int c = 0; c < 4; ++c) {
    cells.push_back({{1, 2, 3, 4, 5}, {0.9, 0.7, 0.5, 0.3, 0.1}});
  }
  CHECK(l_test(cells, ScoreOrientation::kHigherBetter) == 1.0);

  // One reversed cell among four: (3*1 + (-1)) / 4.
  cells[3].scores = {0.1, 0.3, 0.5, 0.7, 0.9};
  CHECK(l_test(cells, ScoreOrientation::kHigherBetter) == Catch::Approx(0.5));

  // All reversed: -1.
  for (auto& cell : cells) cell.scores = {1, 2, 3, 4, 5};
  CHECK(l_test(cells, ScoreOrientation::kHigherBetter) == -1.0);
  // The same data read as lower-better (errors growing with level): +1.
  CHECK(l_test(cells, ScoreOrientation::kLowerBetter) == 1.0);
}

TEST_CASE("l_test rejects ragged cells", "[stats]") {
  std::vector<LTestCell> cells = {{{1, 2, 3}, {0.1, 0.2}}};
  CHECK_THROWS_AS(l_test(cells, ScoreOrientation::kLowerBetter), DataError);
}
