#include <doctest.h>

#include <cmath>

#include "splitbench/layers.hpp"
#include "splitbench/model.hpp"
#include "splitbench/rng.hpp"
#include "splitbench/tensor.hpp"

using namespace splitbench;

namespace {

// Central finite differences against the autodiff gradient of `loss_fn`
// with respect to `param`, relative tolerance 1e-4 at step 1e-5.
void check_grad_fd(Tensor param, const std::function<Tensor()>& loss_fn) {
  param.zero_grad();  // clear accumulation from earlier checks on the same graph
  Tensor loss = loss_fn();
  loss.backward();
  REQUIRE(param.has_grad());
  std::vector<double> ad = param.grad();

  const double h = 1e-5;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double orig = param.values()[i];
    param.values()[i] = orig + h;
    const double up = loss_fn().item();
    param.values()[i] = orig - h;
    const double dn = loss_fn().item();
    param.values()[i] = orig;
    const double fd = (up - dn) / (2.0 * h);
    const double tol = 1e-4 * std::max({std::abs(fd), std::abs(ad[i]), 1e-3});
    CHECK(std::abs(ad[i] - fd) <= tol);
  }
}

Tensor random_tensor(const Shape& shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(shape, std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("forward: identity through an empty layer list") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor y = forward(std::vector<Layer>{}, x);
  CHECK(y.values() == x.values());
  CHECK(y.shape() == x.shape());
}

TEST_CASE("forward: dense(2->1) with unit weights on [3,4] gives [7]") {
  Layer l = Layer::dense(2, 1);
  l.weight = Tensor({1, 2}, {1.0, 1.0}, true);
  l.bias = Tensor({1}, {0.0}, true);
  Tensor x({1, 2}, {3.0, 4.0});
  Tensor y = l.forward(x);
  CHECK(y.values()[0] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("forward: relu on [-1, 2] gives [0, 2]") {
  Tensor x({1, 2}, {-1.0, 2.0});
  Tensor y = relu(x);
  CHECK(y.values()[0] == 0.0);
  CHECK(y.values()[1] == 2.0);
}

TEST_CASE("forward: shape mismatch names the layer index") {
  SequentialModel m("m", {3}, {Layer::dense(3, 2), Layer::relu()});
  m.init_weights(1);
  Tensor x({1, 4}, {1, 2, 3, 4});
  CHECK_THROWS_WITH_AS(forward(m.layers, x), doctest::Contains("layer 0"),
                       std::invalid_argument);
}

TEST_CASE("backward: d(w*x)/dw = x") {
  Tensor w = Tensor::scalar(2.0, true);
  Tensor x = Tensor::scalar(3.0);
  Tensor loss = mul(w, x);
  loss.backward();
  CHECK(w.grad()[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("backward: relu subgradient at negatives is 0") {
  Tensor x({1, 2}, {-1.0, 2.0}, true);
  Tensor loss = sum_all(relu(x));
  loss.backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
}

TEST_CASE("backward: tensor without a tape is rejected") {
  Tensor x = Tensor::scalar(1.0);
  CHECK_THROWS_AS(x.backward(), std::runtime_error);
}

TEST_CASE("backward: loss must be one element") {
  Tensor x({2}, {1.0, 2.0}, true);
  Tensor y = relu(x);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);
}

TEST_CASE("gradient check: dense layer with cross-entropy") {
  Rng rng(7);
  Layer l = Layer::dense(4, 3);
  l.init_weights(rng);
  Tensor x = random_tensor({5, 4}, rng);
  std::vector<int> labels = {0, 2, 1, 2, 0};
  auto loss = [&] { return cross_entropy_softmax(l.forward(x), labels); };
  check_grad_fd(l.weight, loss);
  check_grad_fd(l.bias, loss);
}

TEST_CASE("gradient check: conv2d forward/backward vs finite differences") {
  Rng rng(11);
  Layer l = Layer::conv2d(2, 3, 3, 1, 1);
  l.init_weights(rng);
  Tensor x = random_tensor({2, 2, 5, 5}, rng, true);
  auto loss = [&] { return mse_loss(l.forward(x), Tensor::zeros({2, 3, 5, 5})); };
  check_grad_fd(l.weight, loss);
  check_grad_fd(l.bias, loss);
  check_grad_fd(x, loss);
}

TEST_CASE("gradient check: transposed conv2d") {
  Rng rng(13);
  Layer l = Layer::transposed_conv2d(3, 2, 4, 2, 1);
  l.init_weights(rng);
  Tensor x = random_tensor({2, 3, 4, 4}, rng, true);
  auto loss = [&] { return mse_loss(l.forward(x), Tensor::zeros({2, 2, 8, 8})); };
  check_grad_fd(l.weight, loss);
  check_grad_fd(x, loss);
}

TEST_CASE("gradient check: maxpool, upsample, sigmoid, flatten") {
  Rng rng(17);
  Tensor x = random_tensor({2, 2, 4, 4}, rng, true);
  auto loss = [&] {
    Tensor a = maxpool2d(x, 2, 2);
    Tensor b = upsample2d_nearest(a, 2);
    Tensor c = sigmoid(b);
    const Shape& s = c.shape();
    Shape sample(s.begin() + 1, s.end());
    Tensor d = reshape_per_sample(c, Shape{static_cast<int>(numel(sample))});
    return mean_all(d);
  };
  check_grad_fd(x, loss);
}

TEST_CASE("gradient check: every layer kind in one random stack") {
  Rng rng(19);
  SequentialModel m("stack", {1, 8, 8},
                    {Layer::conv2d(1, 3, 3, 1, 1), Layer::relu(), Layer::maxpool2d(2),
                     Layer::conv2d(3, 4, 4, 2, 1), Layer::sigmoid(), Layer::flatten(),
                     Layer::dense(16, 8), Layer::relu(), Layer::dense(8, 4)});
  m.init_weights(3);
  Tensor x = random_tensor({3, 1, 8, 8}, rng, true);
  std::vector<int> labels = {1, 0, 3};
  auto loss = [&] { return cross_entropy_softmax(m.forward(x), labels); };
  for (Tensor p : m.parameters()) check_grad_fd(p, loss);
  check_grad_fd(x, loss);
}

TEST_CASE("property: executed shapes equal the static shape function") {
  Rng rng(23);
  int checked = 0;
  while (checked < 100) {
    const int pick = static_cast<int>(rng.index(7));
    Layer l = Layer::relu();
    Shape in;
    switch (pick) {
      case 0: {
        const int a = 1 + static_cast<int>(rng.index(6));
        const int b = 1 + static_cast<int>(rng.index(6));
        l = Layer::dense(a, b);
        in = {a};
        break;
      }
      case 1: {
        const int ic = 1 + static_cast<int>(rng.index(3));
        const int oc = 1 + static_cast<int>(rng.index(3));
        const int k = 1 + static_cast<int>(rng.index(3));
        const int stride = 1 + static_cast<int>(rng.index(2));
        const int pad = static_cast<int>(rng.index(2));
        const int h = k + static_cast<int>(rng.index(5));
        l = Layer::conv2d(ic, oc, k, stride, pad);
        in = {ic, h, h};
        break;
      }
      case 2: {
        const int ic = 1 + static_cast<int>(rng.index(3));
        const int oc = 1 + static_cast<int>(rng.index(3));
        const int k = 1 + static_cast<int>(rng.index(3));
        const int stride = 1 + static_cast<int>(rng.index(2));
        l = Layer::transposed_conv2d(ic, oc, k, stride, 0);
        in = {ic, 2 + static_cast<int>(rng.index(4)), 2 + static_cast<int>(rng.index(4))};
        break;
      }
      case 3: {
        const int k = 1 + static_cast<int>(rng.index(2));
        const int h = k + static_cast<int>(rng.index(5));
        l = Layer::maxpool2d(k);
        in = {1 + static_cast<int>(rng.index(3)), h, h};
        break;
      }
      case 4:
        l = Layer::flatten();
        in = {1 + static_cast<int>(rng.index(3)), 2 + static_cast<int>(rng.index(3)),
              2 + static_cast<int>(rng.index(3))};
        break;
      case 5:
        l = Layer::upsample2d(1 + static_cast<int>(rng.index(3)));
        in = {1 + static_cast<int>(rng.index(3)), 2 + static_cast<int>(rng.index(3)),
              2 + static_cast<int>(rng.index(3))};
        break;
      default:
        l = rng.uniform() < 0.5 ? Layer::relu() : Layer::sigmoid();
        in = {1 + static_cast<int>(rng.index(4)), 3, 3};
        break;
    }
    Rng wrng(rng.next_u64());
    l.init_weights(wrng);
    const Shape declared = l.output_shape(in);
    Shape batched{2};
    batched.insert(batched.end(), in.begin(), in.end());
    Tensor x = random_tensor(batched, rng);
    Tensor y = l.forward(x);
    Shape got(y.shape().begin() + 1, y.shape().end());
    REQUIRE(got == declared);
    ++checked;
  }
}

TEST_CASE("determinism: identical seeds give bit-identical forward/backward") {
  auto run = [] {
    SequentialModel m("det", {1, 8, 8},
                      {Layer::conv2d(1, 4, 3, 1, 1), Layer::relu(), Layer::flatten(),
                       Layer::dense(256, 10)});
    m.init_weights(99);
    Rng rng(5);
    std::vector<double> xv(2 * 64);
    for (double& v : xv) v = rng.uniform(0.0, 1.0);
    Tensor x({2, 1, 8, 8}, xv);
    Tensor loss = cross_entropy_softmax(m.forward(x), {3, 7});
    loss.backward();
    std::vector<double> out;
    out.push_back(loss.item());
    for (const Tensor& p : m.parameters()) {
      out.insert(out.end(), p.grad().begin(), p.grad().end());
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("cross entropy rejects bad labels and shapes") {
  Tensor logits({2, 3}, {0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(cross_entropy_softmax(logits, {0}), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy_softmax(logits, {0, 5}), std::invalid_argument);
}

TEST_CASE("mse of equal tensors is zero") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {1, 2, 3, 4});
  CHECK(mse_loss(a, b).item() == 0.0);
}
