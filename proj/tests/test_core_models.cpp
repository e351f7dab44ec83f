#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "toprec/core_models.hpp"
#include "toprec/train.hpp"
#include "toprec/vecmath.hpp"

using namespace toprec;

TEST_SUITE("core_models") {

TEST_CASE("score_mf is bias plus dot product") {
  LatentFactorModel m(2, 2, 2, 1);
  SUBCASE("zero factors score the bias") {
    std::fill(m.user_factors.v.begin(), m.user_factors.v.end(), 0.0);
    m.item_bias.v[0] = 0.0;
    CHECK(score_mf(m, 0, 0) == 0.0);
  }
  SUBCASE("hand value") {
    m.user_factors.row(0)[0] = 1.0;
    m.user_factors.row(0)[1] = 2.0;
    m.item_factors.row(1)[0] = 0.5;
    m.item_factors.row(1)[1] = 0.25;
    m.item_bias.v[1] = 0.5;
    CHECK(score_mf(m, 0, 1) == doctest::Approx(1.5));
  }
  SUBCASE("bilinearity in the item factor") {
    double base = score_mf(m, 0, 0) - m.item_bias.v[0];
    for (auto& x : m.item_factors.row(0)) x *= 2.0;
    CHECK(score_mf(m, 0, 0) - m.item_bias.v[0] == doctest::Approx(2.0 * base));
  }
  SUBCASE("out-of-range indices are rejected") {
    CHECK_THROWS_AS(score_mf(m, 5, 0), std::out_of_range);
    CHECK_THROWS_AS(score_mf(m, 0, -1), std::out_of_range);
  }
}

TEST_CASE("adding a constant to all item biases preserves the ranking") {
  Rng rng(17);
  LatentFactorModel m(4, 12, 6, 23);
  auto ranking = [&](const LatentFactorModel& model, int u) {
    std::vector<std::pair<double, int>> s;
    for (int i = 0; i < model.n_items(); ++i) s.emplace_back(score_mf(model, u, i), i);
    std::sort(s.begin(), s.end(), [](auto& a, auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<int> order;
    for (auto& [sc, i] : s) order.push_back(i);
    return order;
  };
  for (int u = 0; u < 4; ++u) {
    auto before = ranking(m, u);
    LatentFactorModel shifted = m;
    double c = rng.uniform(-3.0, 3.0);
    for (auto& b : shifted.item_bias.v) b += c;
    for (int i = 0; i < m.n_items(); ++i)
      CHECK(score_mf(shifted, u, i) == doctest::Approx(score_mf(m, u, i) + c));
    CHECK(ranking(shifted, u) == before);
  }
}

TEST_CASE("identity single-layer network collapses GMF to MF") {
  int d = 3;
  LatentFactorModel m(3, 3, d, 5);
  DenseNetwork net;
  DenseLayer layer;
  layer.weight = ParamBlock("net.0.weight", 1, d);
  layer.bias = ParamBlock("net.0.bias", 1, 1);
  layer.act = Activation::kIdentity;
  std::fill(layer.weight.v.begin(), layer.weight.v.end(), 1.0);
  net.layers.push_back(std::move(layer));

  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 3; ++i)
      CHECK(score_gmf(m, net, u, i) == doctest::Approx(score_mf(m, u, i)).epsilon(1e-12));
}

TEST_CASE("zero user factor scores the bias through any zero-bias relu net") {
  int d = 4;
  LatentFactorModel m(1, 2, d, 6);
  std::fill(m.user_factors.v.begin(), m.user_factors.v.end(), 0.0);
  m.item_bias.v[1] = 0.75;
  DenseNetwork net = make_dense_network(d, d, 2, 1, 8);
  for (auto& layer : net.layers) std::fill(layer.bias.v.begin(), layer.bias.v.end(), 0.0);
  CHECK(score_gmf(m, net, 0, 1) == doctest::Approx(0.75));
}

TEST_CASE("two-layer relu forward matches the hand computation") {
  // input [1, -1]; layer 1: W = [[1, 2], [-1, 1]], b = [0.5, 0]; relu
  // layer 2: W = [[2, -3]], b = [0.25]
  DenseNetwork net;
  DenseLayer l1;
  l1.weight = ParamBlock("w1", 2, 2);
  l1.bias = ParamBlock("b1", 2, 1);
  l1.act = Activation::kRelu;
  l1.weight.at(0, 0) = 1.0;
  l1.weight.at(0, 1) = 2.0;
  l1.weight.at(1, 0) = -1.0;
  l1.weight.at(1, 1) = 1.0;
  l1.bias.v = {0.5, 0.0};
  DenseLayer l2;
  l2.weight = ParamBlock("w2", 1, 2);
  l2.bias = ParamBlock("b2", 1, 1);
  l2.act = Activation::kIdentity;
  l2.weight.at(0, 0) = 2.0;
  l2.weight.at(0, 1) = -3.0;
  l2.bias.v = {0.25};
  net.layers.push_back(std::move(l1));
  net.layers.push_back(std::move(l2));

  // z1 = [1*1 + 2*(-1) + 0.5, -1*1 + 1*(-1)] = [-0.5, -2]; relu -> [0, 0]
  // out = 0.25
  DenseTape tape;
  dense_forward(net, std::vector<double>{1.0, -1.0}, tape);
  CHECK(tape.output[0] == doctest::Approx(0.25));

  SUBCASE("all-negative pre-activations kill upstream gradients") {
    std::vector<double> upstream = {1.0};
    auto g = dense_forward_backward(net, std::vector<double>{1.0, -1.0}, upstream);
    for (double x : g.weight[0]) CHECK(x == 0.0);
    for (double x : g.bias[0]) CHECK(x == 0.0);
    for (double x : g.input) CHECK(x == 0.0);
    // output layer still sees its own gradients
    CHECK(g.bias[1][0] == 1.0);
  }
}

TEST_CASE("linear layer backward is W^T g") {
  DenseNetwork net;
  DenseLayer l;
  l.weight = ParamBlock("w", 2, 3);
  l.bias = ParamBlock("b", 2, 1);
  l.act = Activation::kIdentity;
  double w[2][3] = {{1, 2, 3}, {4, 5, 6}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) l.weight.at(r, c) = w[r][c];
  net.layers.push_back(std::move(l));

  std::vector<double> upstream = {0.5, -1.5};
  auto g = dense_forward_backward(net, std::vector<double>{1.0, 1.0, 1.0}, upstream);
  for (int c = 0; c < 3; ++c)
    CHECK(g.input[c] == doctest::Approx(w[0][c] * 0.5 + w[1][c] * -1.5));
}

TEST_CASE("dense network gradients match central finite differences") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    DenseNetwork net = make_dense_network(3, 4, 2, 1, 100 + trial);
    std::vector<double> input(3), upstream = {1.0};
    for (auto& x : input) x = rng.uniform(-1.0, 1.0);

    std::vector<double> out;
    auto analytic = dense_forward_backward(net, input, upstream, &out);

    const double eps = 1e-6;
    double worst = 0.0;
    auto fd_check = [&](double& p, double a) {
      double saved = p;
      DenseTape t1, t2;
      p = saved + eps;
      dense_forward(net, input, t1);
      p = saved - eps;
      dense_forward(net, input, t2);
      p = saved;
      double fd = (t1.output[0] - t2.output[0]) / (2.0 * eps);
      worst = std::max(worst, std::fabs(fd - a) / std::max({std::fabs(fd), std::fabs(a), 1e-5}));
    };
    for (size_t l = 0; l < net.layers.size(); ++l) {
      for (size_t j = 0; j < net.layers[l].weight.size(); ++j)
        fd_check(net.layers[l].weight.v[j], analytic.weight[l][j]);
      for (size_t j = 0; j < net.layers[l].bias.size(); ++j)
        fd_check(net.layers[l].bias.v[j], analytic.bias[l][j]);
    }
    CHECK(worst < 1e-6);
  }
}

}  // TEST_SUITE
