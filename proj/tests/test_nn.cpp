#include "flowbench/nn.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace flowbench;
using namespace flowbench::nn;

namespace {

Matrix random_targets(Index n, std::mt19937_64& rng) {
  Matrix t(n, 1);
  for (Index i = 0; i < n; ++i) t(i, 0) = static_cast<double>(rng() & 1U);
  return t;
}

Vector random_weights(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = u(rng);
  return w;
}

void zero_all(NetParams& p) {
  for (auto& layer : p.layers) {
    for (auto& t : layer) t.setZero();
  }
}

}  // namespace

TEST_SUITE("shapes") {
  TEST_CASE("valid convolution and pooling arithmetic") {
    NetSpec s{{20, 1},
              {LayerSpec::conv1d(20, 3, Activation::relu), LayerSpec::avgpool1d(2),
               LayerSpec::conv1d(20, 2, Activation::relu), LayerSpec::avgpool1d(2),
               LayerSpec::conv1d(20, 1, Activation::relu), LayerSpec::flatten(), LayerSpec::dense(1, Activation::sigmoid)}};
    const auto shapes = propagate_shapes(s);
    CHECK(shapes[0].steps == 18);
    CHECK(shapes[1].steps == 9);
    CHECK(shapes[2].steps == 8);
    CHECK(shapes[3].steps == 4);
    CHECK(shapes[4].steps == 4);
    CHECK(shapes[5] == Shape{1, 80});
    CHECK(output_shape(s) == Shape{1, 1});
  }

  TEST_CASE("invalid stacks are rejected") {
    CHECK_THROWS_AS(propagate_shapes({{3, 1}, {LayerSpec::conv1d(2, 4, Activation::relu)}}), Error);
    CHECK_THROWS_AS(propagate_shapes({{3, 2}, {LayerSpec::dense(1, Activation::sigmoid)}}), Error);
    CHECK_THROWS_AS(propagate_shapes({{1, 2}, {LayerSpec::dropout(1.0)}}), Error);
    CHECK_THROWS_AS(propagate_shapes({{1, 2}, {LayerSpec::dense(0, Activation::relu)}}), Error);
    CHECK_THROWS_AS(propagate_shapes({{1, 2}, {LayerSpec::avgpool1d(2)}}), Error);
  }

  TEST_CASE("LSTM parameter count") {
    const auto p = init_params({{1, 3}, {LayerSpec::lstm(3)}}, 0);
    CHECK(p.parameter_count() == 84);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("zero parameters give probability one half") {
    auto p = init_params({{1, 4}, {LayerSpec::dense(5, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}}, 3);
    zero_all(p);
    std::mt19937_64 rng(1);
    const Matrix x = testutil::random_matrix(7, 4, rng);
    const Vector prob = predict_proba(p, x);
    CHECK((prob.array() == 0.5).all());
  }

  TEST_CASE("hand-set dense layer matches sigmoid(Wx + b)") {
    auto p = init_params({{1, 2}, {LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    p.layers[0][0] << 0.5, -1.25;
    p.layers[0][1] << 0.1;
    Matrix x(1, 2);
    x << 2.0, 0.4;
    const double z = 0.5 * 2.0 - 1.25 * 0.4 + 0.1;
    CHECK(predict_proba(p, x)(0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-15));
  }

  TEST_CASE("infer mode is deterministic and dropout-free") {
    const auto p = init_params(
        {{1, 3}, {LayerSpec::dense(8, Activation::relu), LayerSpec::dropout(0.5), LayerSpec::dense(1, Activation::sigmoid)}},
        4);
    std::mt19937_64 rng(2);
    const Matrix x = testutil::random_matrix(10, 3, rng);
    const Matrix a = forward(p, x, Mode::infer).output;
    const Matrix b = forward(p, x, Mode::infer).output;
    CHECK(a == b);
    CHECK(a == predict(p, x));
    CHECK((a.array() > 0.0).all());
    CHECK((a.array() < 1.0).all());
  }

  TEST_CASE("shape mismatch is an error") {
    const auto p = init_params({{1, 3}, {LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    CHECK_THROWS_AS(predict(p, Matrix::Zero(2, 4)), Error);
  }

  TEST_CASE("dropout keeps about 1 - r of activations with inverted scaling") {
    const int n = 200, width = 100;
    const double r = 0.2;
    auto p = init_params({{1, width}, {LayerSpec::dropout(r), LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    Rng rng(11);
    const auto f = forward(p, Matrix::Ones(n, width), Mode::train, &rng);
    const Matrix& mask = f.cache.layers[0].mask;
    const double total = static_cast<double>(n) * width;
    const double dropped = static_cast<double>((mask.array() == 0.0).count());
    const double sigma = std::sqrt(total * r * (1 - r));
    CHECK(std::abs(dropped - r * total) < 3 * sigma);
    CHECK(((mask.array() == 0.0) || (mask.array() == 1.0 / (1.0 - r))).all());
    CHECK(f.cache.layers[0].output.mean() == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("average pooling of a constant sequence is the constant") {
    auto p = init_params({{6, 2}, {LayerSpec::avgpool1d(3), LayerSpec::flatten(), LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    const auto f = forward(p, Matrix::Constant(3, 12, 0.7), Mode::infer);
    CHECK((f.cache.layers[0].output.array() == 0.7).all());
    CHECK(f.cache.layers[0].output.cols() == 4);
  }
}

TEST_SUITE("loss") {
  TEST_CASE("analytic values") {
    const Vector half = Vector::Constant(4, 0.5);
    const std::vector<int> y{0, 1, 1, 0};
    CHECK(bce_loss(half, y, ClassWeights{}) == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
    const Vector one = Vector::Constant(1, 0.5);
    CHECK(bce_loss(one, std::vector<int>{1}, ClassWeights{1.0, 2.0}) ==
          doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-14));
    Vector exact(2);
    exact << 1.0, 0.0;
    const double l = bce_loss(exact, std::vector<int>{1, 0}, ClassWeights{});
    CHECK(l >= 0.0);
    CHECK(l < 1e-6);
    CHECK_THROWS_AS(bce_loss(exact, std::vector<int>{1}, ClassWeights{}), Error);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("dense relu network matches finite differences") {
    std::mt19937_64 rng(21);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = init_params(
          {{1, 4}, {LayerSpec::dense(6, Activation::relu), LayerSpec::dense(5, Activation::sigmoid),
                    LayerSpec::dense(1, Activation::sigmoid)}},
          seed);
      const Matrix x = testutil::random_matrix(5, 4, rng);
      const auto r = testutil::check_gradients(p, x, random_targets(5, rng), random_weights(5, rng));
      CHECK(r.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("convolution, pooling and dropout match finite differences") {
    std::mt19937_64 rng(22);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = init_params({{9, 2},
                                  {LayerSpec::conv1d(3, 3, Activation::sigmoid), LayerSpec::avgpool1d(2),
                                   LayerSpec::conv1d(2, 2, Activation::linear), LayerSpec::dropout(0.3),
                                   LayerSpec::flatten(), LayerSpec::dense(1, Activation::sigmoid)}},
                                 seed);
      const Matrix x = testutil::random_matrix(5, 18, rng);
      const auto r = testutil::check_gradients(p, x, random_targets(5, rng), random_weights(5, rng), seed + 7);
      CHECK(r.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("LSTM over one and three steps matches finite differences") {
    std::mt19937_64 rng(23);
    for (int steps : {1, 3}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto p = init_params(
            {{steps, 3}, {LayerSpec::lstm(4), LayerSpec::dense(3, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}},
            seed);
        const Matrix x = testutil::random_matrix(5, steps * 3, rng);
        const auto r = testutil::check_gradients(p, x, random_targets(5, rng), random_weights(5, rng));
        CHECK(r.max_relative_error < 1e-4);
      }
    }
  }

  TEST_CASE("zero inputs give zero first-layer weight gradients") {
    const auto p = init_params({{1, 3}, {LayerSpec::dense(4, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}}, 5);
    const Matrix x = Matrix::Zero(6, 3);
    const auto f = forward(p, x, Mode::infer);
    const auto g = backward(p, f.cache, std::vector<int>{0, 1, 0, 1, 1, 0}, ClassWeights{});
    CHECK(g.layers[0][0].isZero());
  }

  TEST_CASE("doubling w1 doubles gradients on an all-positive batch") {
    const auto p = init_params({{1, 3}, {LayerSpec::dense(4, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}}, 6);
    std::mt19937_64 rng(3);
    const Matrix x = testutil::random_matrix(4, 3, rng);
    const auto f = forward(p, x, Mode::infer);
    const std::vector<int> y(4, 1);
    const auto g1 = backward(p, f.cache, y, ClassWeights{1.0, 1.0});
    const auto g2 = backward(p, f.cache, y, ClassWeights{1.0, 2.0});
    for (std::size_t l = 0; l < g1.layers.size(); ++l) {
      for (std::size_t t = 0; t < g1.layers[l].size(); ++t) {
        CHECK((g2.layers[l][t] - 2.0 * g1.layers[l][t]).cwiseAbs().maxCoeff() < 1e-15);
      }
    }
  }

  TEST_CASE("mismatched cache is rejected") {
    const auto p = init_params({{1, 3}, {LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    const auto f = forward(p, Matrix::Zero(4, 3), Mode::infer);
    CHECK_THROWS_AS(backward(p, f.cache, std::vector<int>{0, 1}, ClassWeights{}), Error);
    const auto q = init_params({{1, 3}, {LayerSpec::dense(2, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}}, 0);
    CHECK_THROWS_AS(backward(q, f.cache, std::vector<int>{0, 1, 0, 1}, ClassWeights{}), Error);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    auto p = init_params({{1, 3}, {LayerSpec::dense(2, Activation::sigmoid)}}, 1);
    const auto before = p;
    auto state = AdamState::zeros_like(p);
    Gradients g;
    for (const auto& layer : p.layers) {
      Tensors t;
      for (const auto& m : layer) t.push_back(Matrix::Zero(m.rows(), m.cols()));
      g.layers.push_back(t);
    }
    adam_step(p, g, state);
    CHECK(state.t == 1);
    CHECK(p.layers[0][0] == before.layers[0][0]);
    CHECK(p.layers[0][1] == before.layers[0][1]);
  }

  TEST_CASE("first step moves each parameter by about the learning rate") {
    for (double scale : {1e-3, 1.0, 1e3}) {
      auto p = init_params({{1, 2}, {LayerSpec::dense(1, Activation::sigmoid)}}, 2);
      const auto before = p;
      auto state = AdamState::zeros_like(p);
      Gradients g{{{Matrix::Constant(2, 1, scale), Matrix::Constant(1, 1, -scale)}}};
      adam_step(p, g, state);
      CHECK(std::abs((p.layers[0][0] - before.layers[0][0])(0, 0)) == doctest::Approx(1e-3).epsilon(1e-4));
      CHECK((p.layers[0][1] - before.layers[0][1])(0, 0) == doctest::Approx(1e-3).epsilon(1e-4));
    }
  }

  TEST_CASE("minimises a scalar quadratic") {
    auto p = init_params({{1, 1}, {LayerSpec::dense(1, Activation::linear)}}, 0);
    p.layers[0][0](0, 0) = 1.0;
    p.layers[0][1](0, 0) = 0.0;
    auto state = AdamState::zeros_like(p, AdamConfig{0.01});
    double prev = 1.0;
    for (int step = 0; step < 200; ++step) {
      const double w = p.layers[0][0](0, 0);
      Gradients g{{{Matrix::Constant(1, 1, 2.0 * w), Matrix::Zero(1, 1)}}};
      adam_step(p, g, state);
      const double now = p.layers[0][0](0, 0) * p.layers[0][0](0, 0);
      CHECK(now < prev);
      prev = now;
    }
    CHECK(prev < 0.1);
  }
}

TEST_SUITE("train") {
  TEST_CASE("small DFF separates 2-D blobs") {
    const auto data = testutil::blobs(400, 2, 0.5, 6.0, 8);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-2;
    cfg.seed = 1;
    const NetSpec spec{{1, 2}, {LayerSpec::dense(8, Activation::relu), LayerSpec::dense(1, Activation::sigmoid)}};
    const auto result = train(spec, data, cfg);
    const Vector p = predict_proba(result.params, data.values);
    int correct = 0;
    for (Index i = 0; i < p.size(); ++i) correct += (p(i) >= 0.5) == (data.labels[static_cast<std::size_t>(i)] == 1);
    CHECK(correct >= 396);
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());
  }

  TEST_CASE("step accounting and configuration checks") {
    const auto data = testutil::blobs(103, 2, 0.5, 1.0, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 10;
    const NetSpec spec{{1, 2}, {LayerSpec::dense(1, Activation::sigmoid)}};
    CHECK(train(spec, data, cfg).steps == 11);
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(spec, data, cfg), Error);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(spec, data, cfg), Error);
  }

  TEST_CASE("same seed gives identical parameters; another seed differs") {
    const auto data = testutil::blobs(120, 3, 0.3, 2.0, 2);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.seed = 5;
    cfg.class_weights = class_weights(data.labels);
    const NetSpec spec{{1, 3},
                       {LayerSpec::dense(6, Activation::relu), LayerSpec::dropout(0.2), LayerSpec::dense(1, Activation::sigmoid)}};
    const auto a = train(spec, data, cfg);
    const auto b = train(spec, data, cfg);
    for (std::size_t l = 0; l < a.params.layers.size(); ++l) {
      for (std::size_t t = 0; t < a.params.layers[l].size(); ++t) CHECK(a.params.layers[l][t] == b.params.layers[l][t]);
    }
    cfg.seed = 6;
    const auto c = train(spec, data, cfg);
    CHECK(c.params.layers[0][0] != a.params.layers[0][0]);
  }

  TEST_CASE("non-finite loss aborts with its location") {
    auto data = testutil::blobs(20, 2, 0.5, 1.0, 3);
    data.values(3, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 5;
    cfg.shuffle = false;
    try {
      train(NetSpec{{1, 2}, {LayerSpec::dense(1, Activation::sigmoid)}}, data, cfg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("epoch 0 batch 0") != std::string::npos);
    }
  }

  TEST_CASE("training requires both classes") {
    auto data = testutil::blobs(20, 2, 0.5, 1.0, 3);
    std::fill(data.labels.begin(), data.labels.end(), 0);
    CHECK_THROWS_AS(train(NetSpec{{1, 2}, {LayerSpec::dense(1, Activation::sigmoid)}}, data, TrainConfig{}), Error);
  }
}

TEST_SUITE("serialize") {
  TEST_CASE("save and load round trip is bit-exact") {
    const auto p = init_params({{6, 1},
                                {LayerSpec::conv1d(4, 2, Activation::relu), LayerSpec::avgpool1d(2), LayerSpec::flatten(),
                                 LayerSpec::lstm(3), LayerSpec::dropout(0.1), LayerSpec::dense(1, Activation::sigmoid)}},
                               9);
    std::stringstream s;
    save_params(s, p);
    const auto q = load_params(s);
    CHECK(q.spec == p.spec);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      for (std::size_t t = 0; t < p.layers[l].size(); ++t) CHECK(q.layers[l][t] == p.layers[l][t]);
    }
    std::istringstream bad("flowbench-net 99");
    CHECK_THROWS_AS(load_params(bad), Error);
  }
}
