#include "bp/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace bp {

void optimizer_step(TensorMap& params, const TensorMap& grads, OptimizerState& state) {
  if (state.step < 0) throw std::invalid_argument("optimizer_step: negative step count");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw std::invalid_argument("optimizer_step: missing gradient for '" + name + "'");
    const Tensor& g = git->second;
    if (!g.same_shape(p))
      throw std::invalid_argument("optimizer_step: gradient shape " + g.shape_str() +
                                  " does not match parameter '" + name + "' " + p.shape_str());
    if (!g.all_finite())
      throw std::runtime_error("optimizer_step: non-finite gradient for '" + name + "'");
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      mit = state.m.emplace(name, Tensor(p.shape())).first;
      state.v.emplace(name, Tensor(p.shape()));
    }
    Tensor& m = mit->second;
    Tensor& v = state.v.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.learning_rate * (mhat / (std::sqrt(vhat) + state.epsilon) +
                                     state.weight_decay * p[i]);
    }
    p.require_finite("optimizer_step('" + name + "')");
  }
}

}  // namespace bp
