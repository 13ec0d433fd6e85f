#include <doctest.h>

#include <cmath>
#include <functional>

#include "bp/graph.hpp"
#include "bp/rng.hpp"

using namespace bp;

namespace {

// Central finite differences against the analytic gradient for every
// differentiable leaf of a scalar-output graph.
void gradient_check(Graph& g, NodeId out, TensorMap inputs, double h = 1e-5,
                    double tol = 1e-4) {
  g.forward(out, inputs);
  TensorMap analytic = g.backward(Tensor({1, 1}, {1.0}));
  for (auto& [name, grad] : analytic) {
    Tensor& x = inputs.at(name);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + h;
      const double fp = g.forward(out, inputs)[0];
      x[i] = orig - h;
      const double fm = g.forward(out, inputs)[0];
      x[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
      CHECK_MESSAGE(std::abs(numeric - grad[i]) / denom < tol,
                    name << "[" << i << "]: analytic " << grad[i] << " vs numeric " << numeric);
    }
  }
}

TensorMap random_inputs(Rng& rng, const std::vector<std::pair<std::string, std::vector<int>>>& spec) {
  TensorMap m;
  for (const auto& [name, shape] : spec) m[name] = rng.normal_tensor(shape);
  return m;
}

}  // namespace

TEST_CASE("identity graph returns input bitwise") {
  Graph g;
  NodeId x = g.input("x");
  Tensor v({2, 2}, {1.5, -2.25, 0.0, 3.75});
  const Tensor& out = g.forward(x, {{"x", v}});
  CHECK(out == v);
}

TEST_CASE("matmul shape algebra and errors") {
  Graph g;
  NodeId a = g.input("a");
  NodeId b = g.input("b");
  NodeId m = g.matmul(a, b);
  Tensor av({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor bv({3, 1}, {1, 1, 1});
  const Tensor& out = g.forward(m, {{"a", av}, {"b", bv}});
  CHECK(out.rows() == 2);
  CHECK(out.cols() == 1);
  CHECK(out.at(0, 0) == 6);
  CHECK(out.at(1, 0) == 15);
  Tensor bad({4, 1}, {1, 1, 1, 1});
  CHECK_THROWS_WITH_AS(g.forward(m, {{"a", av}, {"b", bad}}),
                       doctest::Contains("matmul"), std::invalid_argument);
}

TEST_CASE("two-layer MLP matches a straight-line scalar evaluation") {
  // independent oracle: the same arithmetic unrolled by hand
  Rng rng(3);
  Tensor x = rng.normal_tensor({1, 4});
  Tensor w1 = rng.normal_tensor({4, 3});
  Tensor b1 = rng.normal_tensor({1, 3});
  Tensor w2 = rng.normal_tensor({3, 2});
  Tensor b2 = rng.normal_tensor({1, 2});

  Graph g;
  NodeId xi = g.input("x");
  NodeId h = g.relu(g.add(g.matmul(xi, g.input("w1")), g.input("b1")));
  NodeId y = g.add(g.matmul(h, g.input("w2")), g.input("b2"));
  const Tensor& out =
      g.forward(y, {{"x", x}, {"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}});

  double hidden[3];
  for (int j = 0; j < 3; ++j) {
    double acc = b1.at(0, j);
    for (int i = 0; i < 4; ++i) acc += x.at(0, i) * w1.at(i, j);
    hidden[j] = acc > 0 ? acc : 0;
  }
  for (int k = 0; k < 2; ++k) {
    double acc = b2.at(0, k);
    for (int j = 0; j < 3; ++j) acc += hidden[j] * w2.at(j, k);
    CHECK(out.at(0, k) == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("backward before forward is an error") {
  Graph g;
  NodeId x = g.input("x", true);
  g.mse(x, x);
  CHECK_THROWS_AS(g.backward(Tensor({1, 1}, {1.0})), std::logic_error);
}

TEST_CASE("d(x*x)/dx at x=3 is 6") {
  Graph g;
  NodeId x = g.input("x", true);
  NodeId y = g.mul(x, x);
  g.forward(y, {{"x", Tensor({1, 1}, {3.0})}});
  TensorMap grads = g.backward(Tensor({1, 1}, {1.0}));
  CHECK(grads.at("x")[0] == 6.0);
}

TEST_CASE("gradient of sum(relu(x)) at [-1, 2] is [0, 1]") {
  // sum via mse against zero: d mean((relu-0)^2) ... use explicit scale trick instead:
  // loss = mse(relu(x), 0) has gradient 2*relu(x)/n; simpler to check relu's mask
  // through a linear readout: loss = relu(x) . ones
  Graph g;
  NodeId x = g.input("x", true);
  NodeId ones = g.input("ones");
  NodeId y = g.matmul(g.relu(x), ones);  // [1,2]*[2,1] -> [1,1]
  g.forward(y, {{"x", Tensor({1, 2}, {-1.0, 2.0})}, {"ones", Tensor({2, 1}, {1.0, 1.0})}});
  TensorMap grads = g.backward(Tensor({1, 1}, {1.0}));
  CHECK(grads.at("x")[0] == 0.0);
  CHECK(grads.at("x")[1] == 1.0);
}

TEST_CASE("gradient check: add/sub/mul with broadcasts") {
  Rng rng(11);
  for (bool row_vec : {true, false}) {
    Graph g;
    NodeId a = g.input("a", true);
    NodeId b = g.input("b", true);
    NodeId c = g.input("c", true);
    NodeId t = g.input("t");
    NodeId expr = g.mse(g.mul(g.add(a, b), g.sub(a, c)), t);
    const std::vector<int> bshape = row_vec ? std::vector<int>{1, 4} : std::vector<int>{3, 1};
    TensorMap in = random_inputs(
        rng, {{"a", {3, 4}}, {"b", bshape}, {"c", bshape}, {"t", {3, 4}}});
    gradient_check(g, expr, in);
  }
}

TEST_CASE("gradient check: matmul all transpose combinations") {
  Rng rng(12);
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      Graph g;
      NodeId a = g.input("a", true);
      NodeId b = g.input("b", true);
      NodeId t = g.input("t");
      NodeId expr = g.mse(g.matmul(a, b, ta, tb), t);
      const std::vector<int> ashape = ta ? std::vector<int>{4, 2} : std::vector<int>{2, 4};
      const std::vector<int> bshape = tb ? std::vector<int>{3, 4} : std::vector<int>{4, 3};
      TensorMap in = random_inputs(rng, {{"a", ashape}, {"b", bshape}, {"t", {2, 3}}});
      gradient_check(g, expr, in);
    }
}

TEST_CASE("gradient check: relu softmax layer_norm concat scale") {
  Rng rng(13);
  Graph g;
  NodeId a = g.input("a", true);
  NodeId b = g.input("b", true);
  NodeId t = g.input("t");
  NodeId h = g.concat_cols(g.relu(a), g.softmax_rows(b));
  h = g.layer_norm(h);
  NodeId expr = g.mse(g.scale(h, 1.7), t);
  TensorMap in = random_inputs(rng, {{"a", {3, 4}}, {"b", {3, 3}}, {"t", {3, 7}}});
  gradient_check(g, expr, in);
}

TEST_CASE("gradient check: three-layer net vs finite differences") {
  Rng rng(14);
  Graph g;
  NodeId x = g.input("x");
  NodeId target = g.input("target");
  NodeId h = x;
  for (int layer = 0; layer < 3; ++layer) {
    const std::string w = "w" + std::to_string(layer);
    const std::string b = "b" + std::to_string(layer);
    h = g.add(g.matmul(h, g.input(w, true)), g.input(b, true));
    if (layer < 2) h = g.relu(h);
  }
  NodeId loss = g.mse(h, target);
  TensorMap in = random_inputs(rng, {{"x", {2, 5}},
                                     {"w0", {5, 6}},
                                     {"b0", {1, 6}},
                                     {"w1", {6, 6}},
                                     {"b1", {1, 6}},
                                     {"w2", {6, 4}},
                                     {"b2", {1, 4}},
                                     {"target", {2, 4}}});
  gradient_check(g, loss, in);
}

TEST_CASE("time embedding is deterministic and stops gradients") {
  Graph g;
  NodeId t = g.input("t", true);
  NodeId e = g.time_embed(t, 8);
  NodeId readout = g.input("r");
  NodeId y = g.matmul(e, readout);
  TensorMap in{{"t", Tensor({2, 1}, {0.25, 0.75})}, {"r", Tensor({8, 1})}};
  for (std::size_t i = 0; i < 8; ++i) in["r"][i] = 1.0;
  const Tensor first = g.forward(y, in);
  const Tensor second = g.forward(y, in);
  CHECK(first == second);
  TensorMap grads = g.backward(Tensor({2, 1}, {1.0, 1.0}));
  CHECK(grads.at("t")[0] == 0.0);
  CHECK(grads.at("t")[1] == 0.0);
  // embeddings at 0: sin -> 0, cos -> 1 lanes
  Graph g2;
  NodeId t2 = g2.input("t");
  NodeId e2 = g2.time_embed(t2, 4);
  const Tensor& emb = g2.forward(e2, {{"t", Tensor({1, 1}, {0.0})}});
  CHECK(emb.at(0, 0) == 0.0);
  CHECK(emb.at(0, 1) == 1.0);
}

TEST_CASE("forward rejects unbound and non-2D inputs") {
  Graph g;
  NodeId x = g.input("x");
  CHECK_THROWS_WITH_AS(g.forward(x, {}), doctest::Contains("not bound"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(g.forward(x, {{"x", Tensor({4})}}), doctest::Contains("2-D"),
                       std::invalid_argument);
}

TEST_CASE("forward propagates non-finite detection") {
  Graph g;
  NodeId x = g.input("x");
  NodeId y = g.mul(x, x);
  Tensor big = Tensor::full({1, 2}, 1e200);
  CHECK_THROWS_WITH_AS(g.forward(y, {{"x", big}}), doctest::Contains("mul"), std::runtime_error);
}

TEST_CASE("forward does not mutate bound inputs") {
  Graph g;
  NodeId x = g.input("x", true);
  NodeId y = g.relu(x);
  Tensor v({1, 3}, {-1.0, 2.0, 3.0});
  TensorMap in{{"x", v}};
  g.forward(y, in);
  g.backward(Tensor({1, 3}, {1.0, 1.0, 1.0}));
  CHECK(in.at("x") == v);
}

TEST_CASE("reused leaf accumulates gradient once per use") {
  Graph g;
  NodeId x = g.input("x", true);
  NodeId y = g.add(x, x);
  g.forward(y, {{"x", Tensor({1, 1}, {2.0})}});
  TensorMap grads = g.backward(Tensor({1, 1}, {1.0}));
  CHECK(grads.at("x")[0] == 2.0);
}
