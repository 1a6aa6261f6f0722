#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gqa/model.hpp"
#include "gqa/nn.hpp"
#include "gqa/rng.hpp"
#include "gqa/train.hpp"

#include <filesystem>

using namespace gqa;

TEST_CASE("dense forward closed forms", "[nn]") {
  DenseLayer identity;
  identity.weight = Matrix::Identity(3, 3);
  identity.bias = Vector::Zero(3);
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(dense_forward(identity, x) == x);

  DenseLayer bias_only;
  bias_only.weight = Matrix::Zero(2, 3);
  bias_only.bias = Vector(2);
  bias_only.bias << 7, 8;
  const Matrix out = dense_forward(bias_only, x);
  for (int r = 0; r < 2; ++r) {
    CHECK(out(r, 0) == 7.0);
    CHECK(out(r, 1) == 8.0);
  }
  CHECK_THROWS_AS(dense_forward(identity, Matrix::Zero(2, 4)), DataError);
}

TEST_CASE("dense forward matches a naive triple loop", "[nn]") {
  Rng rng(1);
  DenseLayer layer = make_dense(3, 4, rng);
  Matrix x(5, 4);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 4; ++c) x(r, c) = rng.uniform(-2, 2);
  }
  const Matrix got = dense_forward(layer, x);
  for (int r = 0; r < 5; ++r) {
    for (int o = 0; o < 3; ++o) {
      double acc = layer.bias[o];
      for (int c = 0; c < 4; ++c) acc += x(r, c) * layer.weight(o, c);
      REQUIRE(got(r, o) == Catch::Approx(acc).margin(1e-15));
    }
  }
}

TEST_CASE("activation closed forms", "[nn]") {
  Matrix x(1, 2);
  x << -1, 2;
  const Matrix r = relu(x);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 2.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == Catch::Approx(0.75).margin(1e-12));
  CHECK(sigmoid(-30.0) > 0.0);   // stable in the tails
  CHECK(sigmoid(30.0) < 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  CHECK(std::isfinite(sigmoid(800.0)));
}

TEST_CASE("maxpool rows and tie rule", "[nn]") {
  Matrix single(1, 3);
  single << 4, 5, 6;
  const auto one = maxpool_points(single);
  CHECK(one.values == Vector(single.row(0).transpose()));
  CHECK(one.argmax == std::vector<Eigen::Index>{0, 0, 0});

  Matrix two(2, 2);
  two << 1, 5, 3, 2;
  const auto pooled = maxpool_points(two);
  CHECK(pooled.values[0] == 3.0);
  CHECK(pooled.values[1] == 5.0);
  CHECK(pooled.argmax == std::vector<Eigen::Index>{1, 0});

  Matrix dup(3, 1);
  dup << 7, 7, 7;
  CHECK(maxpool_points(dup).argmax == std::vector<Eigen::Index>{0});

  CHECK_THROWS_AS(maxpool_points(Matrix(0, 3)), DataError);
}

TEST_CASE("adam against a hand-stepped scalar oracle", "[nn]") {
  const AdamConfig cfg;
  const double lr = 0.01, g = 0.3;
  Matrix p(1, 1), grad(1, 1), m(1, 1), v(1, 1);
  p << 1.0;
  grad << g;
  m.setZero();
  v.setZero();

  double op = 1.0, om = 0.0, ov = 0.0;  // oracle state
  for (int t = 1; t <= 25; ++t) {
    adam_update(p, grad, m, v, cfg, lr, t);
    om = cfg.beta1 * om + (1 - cfg.beta1) * g;
    ov = cfg.beta2 * ov + (1 - cfg.beta2) * g * g;
    const double mh = om / (1 - std::pow(cfg.beta1, t));
    const double vh = ov / (1 - std::pow(cfg.beta2, t));
    op -= lr * mh / (std::sqrt(vh) + cfg.epsilon);
    REQUIRE(p(0, 0) == Catch::Approx(op).margin(1e-15));
  }
}

TEST_CASE("adam with zero gradients leaves parameters unchanged", "[nn]") {
  ModelParams params = init_model(3);
  const ModelParams before = params;
  ModelParams grads = zeros_like(params);
  AdamState state = AdamState::for_model(params);
  adam_step(params, grads, state, 1e-3);
  for_each_layer(before, [&](const std::string& name, const DenseLayer&) {});
  bool equal = true;
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    equal = equal && params.blocks[i].weight == before.blocks[i].weight;
  }
  CHECK(equal);
}

TEST_CASE("adam rejects non-finite gradients with a named block", "[nn]") {
  ModelParams params = init_model(4);
  ModelParams grads = zeros_like(params);
  grads.head_s[1].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state = AdamState::for_model(params);
  try {
    adam_step(params, grads, state, 1e-3);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("head_s[1]") != std::string::npos);
  }
}

TEST_CASE("lr schedule: halve every 2 epochs", "[nn]") {
  // epochs 0-1 at 1e-5, epochs 2-3 at 5e-6.
  TrainConfig cfg;
  CHECK(cfg.learning_rate == 1e-5);
  CHECK(cfg.lr_at_epoch(0) == 1e-5);
  CHECK(cfg.lr_at_epoch(1) == 1e-5);
  CHECK(cfg.lr_at_epoch(2) == 5e-6);
  CHECK(cfg.lr_at_epoch(3) == 5e-6);
  CHECK(cfg.lr_at_epoch(4) == 2.5e-6);
}

TEST_CASE("model init dims and reproducibility", "[nn]") {
  const ModelParams p = init_model(7);
  REQUIRE(p.blocks.size() == 4);
  CHECK(p.blocks[0].weight.rows() == 64);
  CHECK(p.blocks[0].weight.cols() == 3);
  CHECK(p.blocks[3].weight.rows() == 512);
  CHECK(p.blocks[3].weight.cols() == 256);
  CHECK(p.head_s[0].weight.cols() == 960);
  CHECK(p.head_s[0].weight.rows() == 512);
  CHECK(p.head_s[3].weight.rows() == 1);
  CHECK(p.arch.feature_dim() == 960);

  const ModelParams q = init_model(7);
  CHECK(p.blocks[2].weight == q.blocks[2].weight);
  const ModelParams r = init_model(8);
  CHECK(p.blocks[2].weight != r.blocks[2].weight);
}

TEST_CASE("model serialization round trip is bitwise lossless", "[nn]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gqa_nn_tests";
  fs::create_directories(dir);
  const fs::path path = dir / "model.gqan";

  const ModelParams p = init_model(11);
  save_model(path, p);
  const ModelParams q = load_model(path);
  for_each_layer(p, [&](const std::string&, const DenseLayer&) {});
  REQUIRE(q.blocks.size() == 4);
  bool equal = true;
  auto cmp = [&](const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      equal = equal && a[i].weight == b[i].weight && a[i].bias == b[i].bias;
    }
  };
  cmp(p.blocks, q.blocks);
  cmp(p.head_s, q.head_s);
  cmp(p.head_w, q.head_w);
  CHECK(equal);
  CHECK(q.arch.blocks_in_feature == p.arch.blocks_in_feature);
}

TEST_CASE("ablated architectures serialize and restore their block subset", "[nn]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gqa_nn_tests";
  fs::create_directories(dir);

  ArchConfig arch;
  arch.blocks_in_feature = {false, false, true, true};  // 256 + 512
  const ModelParams p = init_model(12, arch);
  CHECK(p.head_s[0].weight.cols() == 768);
  const fs::path path = dir / "subset.gqan";
  save_model(path, p);
  const ModelParams q = load_model(path);
  CHECK(q.arch.blocks_in_feature == arch.blocks_in_feature);
}

TEST_CASE("corrupt weights files are rejected", "[nn]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gqa_nn_tests";
  fs::create_directories(dir);
  const fs::path path = dir / "bad.gqan";
  std::ofstream(path, std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(load_model(path), ParseError);
}
