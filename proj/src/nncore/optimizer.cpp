#include "ptlab/nncore/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ptlab::nncore {

void optimizer_step(ParamSet& params, const Gradients& grads, AdamState& state) {
  const auto trainable = params.trainable_names();
  for (const auto& name : trainable) {
    if (!grads.count(name)) throw std::invalid_argument("missing gradient for trainable tensor " + name);
  }
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw std::invalid_argument("gradient for unknown tensor " + name);
    if (!params.is_trainable(name)) throw std::invalid_argument("gradient supplied for frozen tensor " + name);
    if (g.shape() != params.get(name).shape()) {
      throw std::invalid_argument("gradient shape mismatch for " + name);
    }
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const float corr1 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta1), t));
  const float corr2 = static_cast<float>(1.0 - std::pow(static_cast<double>(c.beta2), t));

  for (const auto& name : trainable) {
    Tensor& p = params.get_mut(name);
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.shape());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.shape());
    if (m_it->second.shape() != p.shape() || v_it->second.shape() != p.shape()) {
      throw std::invalid_argument("optimizer moments do not match shape of " + name);
    }
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    const auto rows = params.trainable_rows(name);
    const std::size_t width = p.rank() == 0 ? 1 : p.numel() / p.shape()[0];
    for (std::size_t i = rows.begin * width; i < rows.end * width; ++i) {
      m[i] = c.beta1 * m[i] + (1.0f - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0f - c.beta2) * g[i] * g[i];
      const float mhat = m[i] / corr1;
      const float vhat = v[i] / corr2;
      p[i] -= c.learning_rate * (mhat / (std::sqrt(vhat) + c.epsilon) + c.weight_decay * p[i]);
      if (!std::isfinite(p[i])) {
        throw NonFiniteError("non-finite value in " + name + " after optimizer step " +
                             std::to_string(state.step));
      }
    }
  }
}

}  // namespace ptlab::nncore
