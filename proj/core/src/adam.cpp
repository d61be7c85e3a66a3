#include "fmvae/adam.hpp"

#include <cmath>

#include "fmvae/errors.hpp"

namespace fmvae {

AdamState make_adam(const ParamList& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.size(), 0.0);
    state.second_moment.emplace_back(p.tensor.size(), 0.0);
  }
  return state;
}

void adam_step(ParamList& params, AdamState& state) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ContractViolation("adam_step: optimiser state holds " + std::to_string(state.first_moment.size()) +
                            " moment arrays for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (state.first_moment[p].size() != params[p].tensor.size() ||
        state.second_moment[p].size() != params[p].tensor.size()) {
      throw ContractViolation("adam_step: moment shape mismatch for " + params[p].name);
    }
    for (double g : params[p].tensor.grad()) {
      if (!std::isfinite(g)) throw TrainingFault("non-finite gradient in parameter " + params[p].name);
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto grad = params[p].tensor.grad();
    auto values = params[p].tensor.mutable_values();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

}  // namespace fmvae
