#include <doctest.h>

#include <cmath>

#include "bp/optim.hpp"
#include "bp/rng.hpp"

using namespace bp;

TEST_CASE("zero gradient leaves parameters unchanged with zero decay") {
  TensorMap params{{"w", Tensor({2}, {0.5, -0.5})}};
  TensorMap grads{{"w", Tensor({2})}};
  OptimizerState st;
  optimizer_step(params, grads, st);
  CHECK(params.at("w")[0] == 0.5);
  CHECK(params.at("w")[1] == -0.5);
  CHECK(st.step == 1);
}

TEST_CASE("first step moves by -lr * sign(g) after bias correction") {
  TensorMap params{{"p", Tensor({1}, {0.0})}};
  TensorMap grads{{"p", Tensor({1}, {1.0})}};
  OptimizerState st;
  st.learning_rate = 5e-4;
  optimizer_step(params, grads, st);
  // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  CHECK(params.at("p")[0] == doctest::Approx(-5e-4).epsilon(1e-6));
}

TEST_CASE("hand-evaluated two-step trace") {
  TensorMap params{{"p", Tensor({1}, {1.0})}};
  OptimizerState st;
  st.learning_rate = 0.1;
  st.beta1 = 0.9;
  st.beta2 = 0.999;
  st.epsilon = 1e-8;
  double p = 1.0, m = 0.0, v = 0.0;
  for (int step = 1; step <= 2; ++step) {
    const double g = 2.0 * p;  // d(p^2)/dp
    TensorMap grads{{"p", Tensor({1}, {g})}};
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, step));
    const double vh = v / (1.0 - std::pow(0.999, step));
    p -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    optimizer_step(params, grads, st);
    CHECK(params.at("p")[0] == doctest::Approx(p).epsilon(1e-14));
  }
}

TEST_CASE("decoupled weight decay shrinks parameters independently") {
  TensorMap params{{"p", Tensor({1}, {1.0})}};
  TensorMap grads{{"p", Tensor({1}, {0.0})}};
  OptimizerState st;
  st.learning_rate = 0.5;
  st.weight_decay = 0.1;
  optimizer_step(params, grads, st);
  CHECK(params.at("p")[0] == doctest::Approx(1.0 - 0.5 * 0.1 * 1.0));
}

TEST_CASE("non-finite gradient fails fast") {
  TensorMap params{{"p", Tensor({1}, {0.0})}};
  TensorMap grads{{"p", Tensor({1}, {std::numeric_limits<double>::infinity()})}};
  OptimizerState st;
  CHECK_THROWS_AS(optimizer_step(params, grads, st), std::runtime_error);
  CHECK(st.step == 1);  // step counter advanced before the bad parameter
}

TEST_CASE("missing or misshaped gradient is an error") {
  TensorMap params{{"p", Tensor({2})}};
  OptimizerState st;
  TensorMap none;
  CHECK_THROWS_AS(optimizer_step(params, none, st), std::invalid_argument);
  TensorMap wrong{{"p", Tensor({3})}};
  CHECK_THROWS_AS(optimizer_step(params, wrong, st), std::invalid_argument);
}

TEST_CASE("identical runs produce bitwise identical states") {
  auto run = []() {
    Rng rng(5);
    TensorMap params{{"w", rng.normal_tensor({4, 3})}};
    OptimizerState st;
    st.learning_rate = 1e-2;
    for (int i = 0; i < 25; ++i) {
      TensorMap grads{{"w", rng.normal_tensor({4, 3})}};
      optimizer_step(params, grads, st);
    }
    return params.at("w");
  };
  CHECK(run() == run());
}

TEST_CASE("adaptive steps drive a quadratic toward its minimum") {
  TensorMap params{{"xy", Tensor({2}, {10.0, -10.0})}};
  OptimizerState st;
  st.learning_rate = 0.1;
  for (int i = 0; i < 2000; ++i) {
    const Tensor& p = params.at("xy");
    TensorMap grads{{"xy", Tensor({2}, {2.0 * (p[0] - 5.0), 2.0 * (p[1] + 2.0)})}};
    optimizer_step(params, grads, st);
  }
  CHECK(params.at("xy")[0] == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(params.at("xy")[1] == doctest::Approx(-2.0).epsilon(1e-3));
}
