#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/tensor.hpp"

namespace pcn {

// Adam with a stepped learning-rate decay: effective lr =
// lr * decay_factor^floor(step / decay_every).
struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<Scalar>> first_moment;
  std::vector<std::vector<Scalar>> second_moment;
  Scalar lr = Scalar(1e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  Scalar decay_factor = Scalar(0.7);
  std::size_t decay_every = 50000;

  Scalar effective_lr() const {
    return lr * static_cast<Scalar>(
                    std::pow(static_cast<double>(decay_factor),
                             static_cast<double>(step / decay_every)));
  }
};

// One Adam update over the parameter list. Gradients are read from each
// parameter's grad buffer; moment buffers are allocated on first use.
inline void adam_step(std::vector<Tensor>& params, AdamState& state,
                      const std::vector<std::string>& names = {}) {
  if (state.first_moment.empty()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first_moment[i].assign(params[i].numel(), Scalar(0));
      state.second_moment[i].assign(params[i].numel(), Scalar(0));
    }
  }
  if (state.first_moment.size() != params.size())
    throw std::invalid_argument("adam_step: state/parameter count mismatch");

  const Scalar eff_lr = state.effective_lr();
  const std::size_t t = state.step + 1;
  const Scalar bc1 =
      Scalar(1) - static_cast<Scalar>(std::pow(state.beta1, double(t)));
  const Scalar bc2 =
      Scalar(1) - static_cast<Scalar>(std::pow(state.beta2, double(t)));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data();
    auto& g = params[i].grad();
    if (g.size() != p.size()) continue;  // no gradient this step
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (std::isnan(g[j]))
        throw std::runtime_error(
            "adam_step: NaN gradient in parameter " +
            (i < names.size() ? names[i] : "#" + std::to_string(i)));
      m[j] = state.beta1 * m[j] + (Scalar(1) - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (Scalar(1) - state.beta2) * g[j] * g[j];
      const Scalar m_hat = m[j] / bc1;
      const Scalar v_hat = v[j] / bc2;
      p[j] -= eff_lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  ++state.step;
}

}  // namespace pcn
